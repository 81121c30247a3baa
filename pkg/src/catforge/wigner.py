"""Wigner functions, quadrature marginals and phase-space grids.

Densities are in the ``exp(-x^2 - p^2)/pi`` vacuum convention.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateNormalizationError, GridError, ParameterError
from .fock import CatParams, FockDensity, FockVector, SCParams, as_density

SQRT2 = math.sqrt(2.0)
DEFAULT_BOUNDS = (-5.0, 5.0, -5.0, 5.0)
DEFAULT_N = 201
MIN_GRID = 16


def _alpha(params) -> float:
    alpha = params.alpha if hasattr(params, "alpha") else float(params)
    if not alpha > 0:
        raise DegenerateNormalizationError(f"odd cat needs alpha > 0, got {alpha}")
    return alpha


def wigner_cat(params: CatParams | float, x, p):
    alpha = _alpha(params)
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    nm = 2.0 - 2.0 * np.exp(-2.0 * alpha**2)
    a = SQRT2 * alpha
    bracket = (
        np.exp(-((x - a) ** 2) - p**2)
        + np.exp(-((x + a) ** 2) - p**2)
        - 2.0 * np.exp(-(x**2) - p**2) * np.cos(2.0 * SQRT2 * p * alpha)
    )
    return bracket / (np.pi * nm)


def _squeezed_cat_wigner(alpha, sx, x, p):
    # sx = e^{r} (p-SC) or e^{-r} (x-SC): the x axis is scaled by sx, p by 1/sx.
    # Written with explicit divisions so that sx == 1 reproduces wigner_cat bit-for-bit.
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    nm = 2.0 - 2.0 * np.exp(-2.0 * alpha**2)
    vx = sx * sx
    vp = 1.0 / vx
    a = SQRT2 * sx * alpha
    bracket = (
        np.exp(-((x - a) ** 2) / vx - p**2 / vp)
        + np.exp(-((x + a) ** 2) / vx - p**2 / vp)
        - 2.0 * np.exp(-(x**2) / vx - p**2 / vp) * np.cos(2.0 * SQRT2 * p * sx * alpha)
    )
    return bracket / (np.pi * nm)


def wigner_psc(params: SCParams, x, p):
    """Odd cat squeezed along p (x stretched by ``e^r``)."""
    if params.r < 0:
        raise ParameterError("r must be >= 0")
    return _squeezed_cat_wigner(_alpha(params), math.exp(params.r), x, p)


def wigner_xsc(params: SCParams, x, p):
    """Odd cat squeezed along x (x compressed by ``e^-r``)."""
    if params.r < 0:
        raise ParameterError("r must be >= 0")
    return _squeezed_cat_wigner(_alpha(params), math.exp(-params.r), x, p)


def wigner_analytic(kind: str, alpha: float, r: float = 0.0):
    """Return ``f(x, p)`` for ``kind`` in ``{"cat", "psc", "xsc"}``."""
    if kind == "cat":
        return lambda x, p: wigner_cat(alpha, x, p)
    if kind == "psc":
        params = SCParams(alpha, r, 0.0)
        return lambda x, p: wigner_psc(params, x, p)
    if kind == "xsc":
        params = SCParams(alpha, r, math.pi)
        return lambda x, p: wigner_xsc(params, x, p)
    raise ParameterError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------- grids


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    nx: int
    np: int
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.nx, self.np):
            raise GridError(f"values shape {vals.shape} != ({self.nx}, {self.np})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ps(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.np - 1)

    def integral(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def marginal(self, theta: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Integrate out the conjugate axis; only ``theta`` in {0, pi/2}."""
        if theta == 0.0:
            return self.xs, self.values.sum(axis=1) * self.dp
        if theta == math.pi / 2:
            return self.ps, self.values.sum(axis=0) * self.dx
        raise ParameterError("grid marginals are available only for theta = 0 or pi/2")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_min", "x_max", "p_min", "p_max", "nx", "np"])
        w.writerow([_g(self.x_min), _g(self.x_max), _g(self.p_min), _g(self.p_max), self.nx, self.np])
        xs, ps = self.xs, self.ps
        for i in range(self.nx):
            for j in range(self.np):
                w.writerow([_g(xs[i]), _g(ps[j]), _g(self.values[i, j])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> WignerGrid:
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2 or rows[0][:6] != ["x_min", "x_max", "p_min", "p_max", "nx", "np"]:
            raise DataError("not a WignerGrid CSV")
        x0, x1, p0, p1 = (float(v) for v in rows[1][:4])
        nx, npts = int(rows[1][4]), int(rows[1][5])
        body = rows[2:]
        if len(body) != nx * npts:
            raise DataError(f"expected {nx * npts} grid rows, found {len(body)}")
        vals = np.array([float(r[2]) for r in body]).reshape(nx, npts)
        return cls(x0, x1, p0, p1, nx, npts, vals)

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "nx": self.nx,
            "np": self.np,
            "values": self.values.tolist(),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> WignerGrid:
        return cls(
            float(data["x_min"]),
            float(data["x_max"]),
            float(data["p_min"]),
            float(data["p_max"]),
            int(data["nx"]),
            int(data["np"]),
            np.asarray(data["values"], float),
            dict(data.get("meta", {})),
        )


def _g(v) -> str:
    return format(float(v), ".17g")


def _check_grid(bounds, nx, npts):
    x0, x1, p0, p1 = (float(b) for b in bounds)
    if not (x1 > x0 and p1 > p0):
        raise GridError(f"grid bounds must have positive extent, got {bounds}")
    if nx < MIN_GRID or npts < MIN_GRID:
        raise GridError(f"grid needs at least {MIN_GRID} points per axis")
    return x0, x1, p0, p1


def tabulate(func, bounds=DEFAULT_BOUNDS, nx: int = DEFAULT_N, np_: int = DEFAULT_N, **meta) -> WignerGrid:
    """Evaluate ``func(x, p)`` on a rectangular grid (``values[i, j] = W(x_i, p_j)``)."""
    x0, x1, p0, p1 = _check_grid(bounds, nx, np_)
    xs = np.linspace(x0, x1, nx)
    ps = np.linspace(p0, p1, np_)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    return WignerGrid(x0, x1, p0, p1, nx, np_, func(X, P), meta)


def wigner_kernel_sum(rho: FockDensity, x, p) -> np.ndarray:
    """``sum_mn rho_mn W[|m><n|](x, p)`` via the Laguerre recurrence on Fock-pair kernels."""
    rho = as_density(rho)
    mat = rho.rho
    herm = np.max(np.abs(mat - mat.conj().T))
    if herm > 1e-10:
        raise DataError(f"density matrix not Hermitian (defect {herm:.3g}); Wigner would be complex")
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    dim = rho.dim
    amp = (x + 1j * p) / SQRT2
    two_a = 2.0 * amp
    two_ac = np.conj(two_a)
    sq = np.sqrt(np.arange(dim, dtype=float))
    # row[n] holds W[|m><n|] scaled so that the diagonal entries are real Wigner kernels
    row = [np.exp(-(x**2) - p**2) / np.pi]
    for n in range(1, dim):
        row.append(two_a * row[n - 1] / sq[n])
    W = mat[0, 0].real * row[0].real
    for n in range(1, dim):
        W = W + 2.0 * np.real(mat[0, n] * row[n])
    for m in range(1, dim):
        prev = row[m]
        row[m] = (two_ac * prev - sq[m] * row[m - 1]) / sq[m]
        W = W + np.real(mat[m, m] * row[m])
        for n in range(m + 1, dim):
            nxt = (two_a * row[n - 1] - sq[m] * prev) / sq[n]
            prev = row[n]
            row[n] = nxt
            W = W + 2.0 * np.real(mat[m, n] * row[n])
    return W


def wigner_from_density(
    rho: FockDensity | FockVector, bounds=DEFAULT_BOUNDS, nx: int = DEFAULT_N, np_: int = DEFAULT_N
) -> WignerGrid:
    rho = as_density(rho)
    return tabulate(lambda X, P: wigner_kernel_sum(rho, X, P), bounds, nx, np_, dim=rho.dim)


def wigner_origin_kernel(rho: FockDensity) -> float:
    return float(wigner_kernel_sum(rho, np.zeros(1), np.zeros(1))[0])


# ---------------------------------------------------------------- marginals


def hermite_functions(x, dim: int) -> np.ndarray:
    """``psi_n(x)`` for ``n < dim``; shape ``x.shape + (dim,)``; ``psi_0`` has variance 1/2."""
    x = np.asarray(x, float)
    out = np.empty(x.shape + (dim,))
    out[..., 0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if dim > 1:
        out[..., 1] = math.sqrt(2.0) * x * out[..., 0]
    for n in range(1, dim - 1):
        out[..., n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[..., n] - math.sqrt(n / (n + 1)) * out[..., n - 1]
    return out


def quadrature_vectors(x, theta, dim: int) -> np.ndarray:
    """``<n|x_theta>`` rows, ``X_theta = x cos(theta) + p sin(theta)``."""
    x = np.asarray(x, float)
    theta = np.broadcast_to(np.asarray(theta, float), x.shape)
    n = np.arange(dim)
    return hermite_functions(x, dim) * np.exp(1j * theta[..., None] * n)


def marginal(state: FockDensity | FockVector, theta: float, x) -> np.ndarray:
    """Probability density of ``X_theta`` evaluated at ``x``."""
    rho = as_density(state)
    u = quadrature_vectors(x, theta, rho.dim)
    val = np.einsum("...m,mn,...n->...", u.conj(), rho.rho, u)
    return np.real(val)
