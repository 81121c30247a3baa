"""Staged model of the preparation setup.

OPA1 squeezed vacuum -> tap beam splitter + APD click (photon subtraction) ->
OPA2 in-line squeezer (split loss, unitary, phase jitter) -> detection loss.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import HeraldImpossibleError, ParameterError
from .fock import (
    DEFAULT_DIM,
    FockDensity,
    FockVector,
    annihilate,
    as_density,
    db_to_r,
    loss_channel,
    rotate,
    squeeze_matrix,
    squeezed_vacuum,
)

R_MINUS_3DB = db_to_r(-3.0)
JITTER_NODES = 7
DARK_COUNT_PRESET = 60.0 / 2000.0

# Fitted r values from the paper's pump-power table, used as r2 presets.
PUMP_TABLE = {
    ("psc", 20.0): 0.27,
    ("psc", 30.0): 0.29,
    ("psc", 40.0): 0.30,
    ("xsc", 10.0): 0.24,
    ("xsc", 15.0): 0.27,
    ("xsc", 20.0): 0.29,
}

HeraldModel = Literal["ideal_subtraction", "tap_povm"]


@dataclass(frozen=True)
class ExperimentConfig:
    r1: float = R_MINUS_3DB
    tap: float = 0.05
    r2: float = 0.0
    theta2: float = 0.0
    eta_opa2: float = 0.91
    eta_det: float = 0.80
    phase_jitter_sd: float = 0.0
    dim: int = DEFAULT_DIM
    herald_model: HeraldModel = "tap_povm"
    dark_mix: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("eta_opa2", "eta_det", "dark_mix"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.tap < 0.5:
            raise ParameterError(f"tap must lie in (0, 0.5), got {self.tap}")
        if self.r1 < 0 or self.r2 < 0:
            raise ParameterError("squeezing parameters must be >= 0")
        if self.theta2 not in (0.0, math.pi):
            raise ParameterError(f"theta2 must be 0 or pi, got {self.theta2}")
        if self.phase_jitter_sd < 0:
            raise ParameterError("phase_jitter_sd must be >= 0")
        if self.herald_model not in ("ideal_subtraction", "tap_povm"):
            raise ParameterError(f"unknown herald model {self.herald_model!r}")
        if self.dim < 2:
            raise ParameterError("dim must be >= 2")

    @property
    def label(self) -> str:
        if self.r2 == 0:
            return "cat"
        return "p-SC" if self.theta2 == 0.0 else "x-SC"

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_squeezing_db(cls, db: float, measured: bool = False, **kw) -> ExperimentConfig:
        """Build a config whose OPA1 squeezing is ``db`` decibels.

        ``measured=True`` treats ``db`` as the variance ratio seen behind the
        detection efficiency ``eta_det`` and infers the pure-state ``r1``.
        """
        if not measured:
            return cls(r1=db_to_r(db), **kw)
        eta = kw.get("eta_det", cls.eta_det)
        ratio = 10.0 ** (-abs(db) / 10.0)
        pure = (ratio - (1.0 - eta)) / eta
        if pure <= 0:
            raise ParameterError(f"{db} dB cannot be observed through efficiency {eta}")
        return cls(r1=-0.5 * math.log(pure), **kw)


@dataclass(frozen=True)
class HeraldReport:
    click_probability: float
    model: HeraldModel

    def __post_init__(self):
        if not 0.0 <= self.click_probability <= 1.0:
            raise ParameterError(f"click probability {self.click_probability} outside [0, 1]")


class PipelineResult(NamedTuple):
    pre_detection: FockDensity
    at_detector: FockDensity
    herald: HeraldReport


def herald_ideal(state: FockVector, tap: float = 0.05) -> tuple[FockVector, HeraldReport]:
    """Perfect single-photon subtraction; click probability ~ tap * <n> to first order."""
    out, weight = annihilate(state)
    prob = min(1.0, weight**2 * tap)
    return out, HeraldReport(prob, "ideal_subtraction")


def tap_split(state: FockVector, tap: float) -> list[np.ndarray]:
    """Unnormalized main-mode components conditioned on ``k`` photons at the tap.

    Entry ``k`` is ``<k|_tap U_BS |psi>|0>_tap``; the overall BS phase per ``k`` is dropped.
    """
    dim = state.dim
    c = state.amps
    m = np.arange(dim)
    out = []
    for k in range(dim):
        mm = m[: dim - k]
        logc = (
            0.5 * (gammaln(mm + k + 1.0) - gammaln(mm + 1.0) - math.lgamma(k + 1))
            + 0.5 * mm * math.log1p(-tap)
            + 0.5 * k * math.log(tap)
        )
        comp = np.zeros(dim, dtype=complex)
        comp[: dim - k] = c[k:] * np.exp(logc)
        out.append(comp)
    return out


def herald_tap_povm(state: FockVector, tap: float) -> tuple[FockDensity, HeraldReport]:
    """Condition on a click of a non-resolving APD behind a tap beam splitter."""
    if not 0.0 < tap < 0.5:
        raise ParameterError(f"tap must lie in (0, 0.5), got {tap}")
    comps = tap_split(state, tap)
    rho = np.zeros((state.dim, state.dim), dtype=complex)
    for v in comps[1:]:
        rho += np.outer(v, v.conj())
    prob = float(np.trace(rho).real)
    if prob <= 1e-300:
        raise HeraldImpossibleError("click probability is zero; nothing to herald")
    return FockDensity(rho / prob), HeraldReport(min(prob, 1.0), "tap_povm")


def _jitter_mixture(rho: FockDensity, sd: float) -> FockDensity:
    if sd == 0:
        return rho
    nodes, weights = np.polynomial.hermite_e.hermegauss(JITTER_NODES)
    weights = weights / weights.sum()
    acc = np.zeros_like(rho.rho)
    for z, w in zip(nodes, weights):
        acc += w * rotate(rho, sd * z).rho
    return FockDensity(acc)


def inline_squeezer(
    rho: FockDensity | FockVector,
    r2: float,
    theta2: float,
    eta_opa2: float = 0.91,
    phase_jitter_sd: float = 0.0,
) -> FockDensity:
    """OPA2: loss sqrt(eta) -> S(r2, theta2) -> loss sqrt(eta) -> phase jitter."""
    if not 0.0 <= eta_opa2 <= 1.0:
        raise ParameterError(f"eta_opa2 must lie in [0, 1], got {eta_opa2}")
    if r2 < 0:
        raise ParameterError("r2 must be >= 0")
    rho = as_density(rho)
    half = math.sqrt(eta_opa2)
    out = loss_channel(rho, half)
    if r2 > 0:
        mat = squeeze_matrix(r2, theta2, rho.dim)
        out = FockDensity(mat @ out.rho @ mat.conj().T).hermitized().normalized()
    out = loss_channel(out, half)
    return _jitter_mixture(out, phase_jitter_sd)


def herald(cfg: ExperimentConfig) -> tuple[FockDensity, HeraldReport]:
    """OPA1 output conditioned on a click, with optional dark-count admixture."""
    sv = squeezed_vacuum(cfg.r1, 0.0, cfg.dim)
    if cfg.herald_model == "ideal_subtraction":
        vec, report = herald_ideal(sv, cfg.tap)
        heralded = vec.density()
    else:
        heralded, report = herald_tap_povm(sv, cfg.tap)
    if cfg.dark_mix > 0:
        # A dark click heralds the unconditioned tap-transmitted squeezed vacuum.
        unheralded = loss_channel(sv.density(), 1.0 - cfg.tap)
        heralded = FockDensity((1.0 - cfg.dark_mix) * heralded.rho + cfg.dark_mix * unheralded.rho)
    return heralded, report


def run_pipeline(cfg: ExperimentConfig) -> PipelineResult:
    heralded, report = herald(cfg)
    pre = inline_squeezer(heralded, cfg.r2, cfg.theta2, cfg.eta_opa2, cfg.phase_jitter_sd)
    at_det = loss_channel(pre, cfg.eta_det)
    return PipelineResult(pre, at_det, report)
