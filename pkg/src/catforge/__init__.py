"""Squeezed-cat-state simulation, homodyne tomography and fidelity fitting."""

__version__ = "0.1.0"
