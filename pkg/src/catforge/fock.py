"""Truncated single-mode Fock-space algebra.

Conventions used throughout the package:

* quadratures ``x = (a + a^dag)/sqrt(2)``, ``p = (a - a^dag)/(i sqrt(2))``,
  vacuum variance 1/2;
* squeezing ``S(zeta) = exp((zeta^* a^2 - zeta a^dag^2)/2)`` with
  ``zeta = -r exp(i theta)``, so ``theta = 0`` squeezes ``p`` (p-SC) and
  ``theta = pi`` squeezes ``x`` (x-SC).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln, xlogy

from .errors import (
    DataError,
    DegenerateNormalizationError,
    DimensionError,
    ParameterError,
    UnsupportedPhaseError,
    ZeroNormError,
)

DEFAULT_DIM = 30
SQUEEZE_PAD = 10
SQUEEZE_PAD_MAX = 640
SQUEEZE_TOL = 1e-12
SUPPORT_TOL = 1e-10

Parity = Literal["odd", "even", "mixed"]


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 2:
        raise DimensionError(f"truncation dimension must be >= 2, got {dim}")
    return dim


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FockVector:
    """Pure state amplitudes on levels ``0 .. dim-1``."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amps))
        _check_dim(amps.size)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> FockVector:
        nrm = self.norm
        if nrm == 0.0:
            raise ZeroNormError("cannot normalize the zero vector")
        return FockVector(self.amps / nrm)

    def density(self) -> FockDensity:
        return FockDensity(np.outer(self.amps, self.amps.conj()))

    def padded(self, dim: int) -> FockVector:
        """Zero-pad or crop to ``dim`` levels (no renormalization)."""
        out = np.zeros(_check_dim(dim), dtype=complex)
        k = min(dim, self.dim)
        out[:k] = self.amps[:k]
        return FockVector(out)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "re": self.amps.real.tolist(), "im": self.amps.imag.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> FockVector:
        amps = np.asarray(data["re"], float) + 1j * np.asarray(data["im"], float)
        if amps.size != int(data["dim"]):
            raise DataError("FockVector JSON: dim does not match amplitude count")
        return cls(amps)


@dataclass(frozen=True, eq=False)
class FockDensity:
    """Density matrix on levels ``0 .. dim-1``."""

    rho: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
        _check_dim(rho.shape[0])
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def normalized(self) -> FockDensity:
        tr = self.trace
        if tr <= 0.0:
            raise ZeroNormError("density matrix has non-positive trace")
        return FockDensity(self.rho / tr)

    def hermitized(self) -> FockDensity:
        return FockDensity(0.5 * (self.rho + self.rho.conj().T))

    def padded(self, dim: int) -> FockDensity:
        out = np.zeros((_check_dim(dim),) * 2, dtype=complex)
        k = min(dim, self.dim)
        out[:k, :k] = self.rho[:k, :k]
        return FockDensity(out)

    def check(self, herm_tol=1e-10, trace_tol=1e-9, psd_tol=-1e-8) -> None:
        """Raise :class:`DataError` unless Hermitian, unit-trace and PSD."""
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm > herm_tol:
            raise DataError(f"density matrix not Hermitian (defect {herm:.3g})")
        if abs(self.trace - 1.0) > trace_tol:
            raise DataError(f"density matrix trace {self.trace!r} != 1")
        lam = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0]
        if lam < psd_tol:
            raise DataError(f"density matrix not PSD (min eigenvalue {lam:.3g})")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.rho.real.ravel().tolist(),
            "im": self.rho.imag.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> FockDensity:
        dim = int(data["dim"])
        re = np.asarray(data["re"], float)
        im = np.asarray(data["im"], float)
        if re.size != dim * dim or im.size != dim * dim:
            raise DataError("FockDensity JSON: dim does not match element count")
        return cls((re + 1j * im).reshape(dim, dim))


def as_density(state: FockVector | FockDensity) -> FockDensity:
    return state.density() if isinstance(state, FockVector) else state


@dataclass(frozen=True)
class CatParams:
    alpha: float
    parity: Literal["odd", "even"] = "odd"

    def __post_init__(self):
        if self.parity not in ("odd", "even"):
            raise ParameterError(f"parity must be 'odd' or 'even', got {self.parity!r}")

    @property
    def norm_minus(self) -> float:
        return 2.0 - 2.0 * math.exp(-2.0 * self.alpha**2)


@dataclass(frozen=True)
class SCParams:
    alpha: float
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ParameterError(f"squeezing parameter must be >= 0, got {self.r}")
        if not 0.0 <= self.theta < 2 * math.pi:
            raise ParameterError(f"theta must lie in [0, 2pi), got {self.theta}")

    @property
    def kind(self) -> str:
        if self.theta == 0.0:
            return "psc"
        if self.theta == math.pi:
            return "xsc"
        return "sc"


def _as_cat(params: CatParams | float) -> CatParams:
    return params if isinstance(params, CatParams) else CatParams(float(params))


# ---------------------------------------------------------------- constructors


def vacuum(dim: int) -> FockVector:
    return fock_state(0, dim)


def fock_state(n: int, dim: int) -> FockVector:
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise DimensionError(f"level {n} outside truncation {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def _poisson_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    mag = abs(alpha)
    if mag == 0.0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * mag**2 + n * math.log(mag) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def coherent(alpha: complex, dim: int) -> FockVector:
    dim = _check_dim(dim)
    return FockVector(_poisson_amplitudes(complex(alpha), dim)).normalized()


def odd_cat(params: CatParams | float, dim: int) -> FockVector:
    """Odd cat ``(|alpha> - |-alpha>)/sqrt(N_-)``; only odd levels populated."""
    params = _as_cat(params)
    dim = _check_dim(dim)
    if params.parity == "even":
        raise NotImplementedError("only odd cat states are supported")
    if not params.alpha > 0:
        raise DegenerateNormalizationError(
            f"odd cat needs alpha > 0 (N_- -> 0), got {params.alpha}"
        )
    amps = _poisson_amplitudes(params.alpha, dim)
    amps[0::2] = 0.0
    return FockVector(amps).normalized()


# ---------------------------------------------------------------- operators


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, _check_dim(dim), dtype=float)), 1)


def quadrature_operator(theta: float, dim: int) -> np.ndarray:
    """``X_theta = (a e^{-i theta} + a^dag e^{i theta})/sqrt(2)``."""
    a = annihilation(dim)
    return (a * np.exp(-1j * theta) + a.T * np.exp(1j * theta)) / math.sqrt(2)


def squeeze_generator(r: float, theta: float, dim: int) -> np.ndarray:
    """``(zeta^* a^2 - zeta a^dag^2)/2`` with ``zeta = -r e^{i theta}``."""
    zeta = -r * np.exp(1j * theta)
    n = np.arange(dim - 2)
    two = np.sqrt((n + 1.0) * (n + 2.0))
    gen = np.zeros((dim, dim), dtype=complex)
    gen[n, n + 2] = 0.5 * np.conj(zeta) * two
    gen[n + 2, n] = -0.5 * zeta * two
    return gen


def squeeze_matrix(r: float, theta: float, dim: int, pad: int = SQUEEZE_PAD) -> np.ndarray:
    """Truncated squeezing operator ``S(zeta)``.

    The exponential is taken at ``dim + pad`` levels and cropped; the even and
    odd sublattices are exponentiated separately, so elements with ``m + n``
    odd are exactly zero.  ``pad`` is a minimum: the working dimension grows
    until the retained block stops changing (strong squeezing needs far more
    than ten extra levels).
    """
    dim = _check_dim(dim)
    if r < 0:
        raise ParameterError(f"squeezing parameter must be >= 0, got {r}")
    if r == 0:
        return np.eye(dim, dtype=complex)
    pad = max(int(pad), 2)
    prev = _squeeze_block(r, theta, dim, dim + pad)
    while pad < SQUEEZE_PAD_MAX:
        pad *= 2
        cur = _squeeze_block(r, theta, dim, dim + pad)
        if np.max(np.abs(cur - prev)) < SQUEEZE_TOL:
            return cur
        prev = cur
    return prev


def _squeeze_block(r, theta, dim, work):
    gen = squeeze_generator(r, theta, work)
    out = np.zeros((work, work), dtype=complex)
    for start in (0, 1):
        idx = np.arange(start, work, 2)
        out[np.ix_(idx, idx)] = expm(gen[np.ix_(idx, idx)])
    return out[:dim, :dim]


def squeezed_vacuum(r: float, theta: float = 0.0, dim: int = DEFAULT_DIM) -> FockVector:
    dim = _check_dim(dim)
    col = squeeze_matrix(r, theta, dim)[:, 0]
    return FockVector(col).normalized()


def squeeze(state: FockVector | FockDensity, r: float, theta: float):
    """Apply ``S(zeta)`` to a vector or density matrix (trace renormalized)."""
    mat = squeeze_matrix(r, theta, state.dim)
    if isinstance(state, FockVector):
        return FockVector(mat @ state.amps).normalized()
    return FockDensity(mat @ state.rho @ mat.conj().T).hermitized().normalized()


def rotate(state: FockVector | FockDensity, phi: float):
    """Phase-space rotation ``exp(i phi n)``."""
    ph = np.exp(1j * phi * np.arange(state.dim))
    if isinstance(state, FockVector):
        return FockVector(ph * state.amps)
    return FockDensity(ph[:, None] * state.rho * ph.conj()[None, :])


def annihilate(state: FockVector) -> tuple[FockVector, float]:
    """Return ``a|psi>`` normalized, together with its pre-normalization norm."""
    n = np.arange(1, state.dim)
    out = np.zeros(state.dim, dtype=complex)
    out[:-1] = np.sqrt(n) * state.amps[1:]
    weight = float(np.linalg.norm(out))
    if weight <= SUPPORT_TOL:
        raise ZeroNormError("annihilation of a state with no support above vacuum")
    return FockVector(out / weight), weight


def _sc_amplitudes(alpha: float, r: float, theta: float, dim: int) -> np.ndarray:
    # q_n = s^n H_n(z) / sqrt(n!) by three-term recurrence; z*s and s^2 stay
    # bounded (z*s = alpha/(2 cosh r), s^2 = -+tanh(r)/2) so nothing overflows.
    t = math.tanh(r)
    zs = alpha / (2.0 * math.cosh(r))
    nm = 2.0 - 2.0 * math.exp(-2.0 * alpha**2)
    if theta == 0.0:
        s2 = -0.5 * t
        pre = 2.0 * math.exp(-(1.0 + t) * alpha**2 / 2.0) / math.sqrt(nm * math.cosh(r))
    else:
        s2 = 0.5 * t
        pre = 2.0 * math.exp((t - 1.0) * alpha**2 / 2.0) / math.sqrt(nm * math.cosh(r))
    q = np.zeros(dim)
    q[0] = 1.0
    if dim > 1:
        q[1] = 2.0 * zs
    for n in range(1, dim - 1):
        q[n + 1] = (2.0 * zs * q[n] - 2.0 * s2 * math.sqrt(n) * q[n - 1]) / math.sqrt(n + 1)
    amps = pre * q
    amps[0::2] = 0.0
    return amps.astype(complex)


def sc_state_closed_form(params: SCParams, dim: int) -> FockVector:
    """Odd squeezed cat from its Hermite-polynomial Fock expansion (theta 0 or pi)."""
    dim = _check_dim(dim)
    if params.r == 0:
        raise ParameterError("closed form diverges at r = 0; use odd_cat instead")
    if params.theta not in (0.0, math.pi):
        raise UnsupportedPhaseError(f"closed form exists only for theta in {{0, pi}}, got {params.theta}")
    if not params.alpha > 0:
        raise DegenerateNormalizationError(f"odd cat needs alpha > 0, got {params.alpha}")
    return FockVector(_sc_amplitudes(params.alpha, params.r, params.theta, dim)).normalized()


def sc_state(params: SCParams, dim: int) -> FockVector:
    """Ideal odd SC state; falls back to :func:`odd_cat` at ``r = 0``."""
    if params.r == 0:
        return odd_cat(params.alpha, dim)
    return sc_state_closed_form(params, dim)


# ---------------------------------------------------------------- channels


def bernoulli_matrix(eta: float, dim: int) -> np.ndarray:
    """``B[j, i] = sqrt(C(j, i) eta^i (1-eta)^(j-i))`` for ``i <= j`` else 0."""
    j = np.arange(dim, dtype=float)[:, None]
    i = np.arange(dim, dtype=float)[None, :]
    k = np.clip(j - i, 0.0, None)
    logb = gammaln(j + 1) - gammaln(i + 1) - gammaln(k + 1) + xlogy(i, eta) + xlogy(k, 1.0 - eta)
    return np.where(i <= j, np.exp(0.5 * logb), 0.0)


def loss_kraus(eta: float, dim: int) -> list[np.ndarray]:
    """Kraus operators ``E_k`` of the pure-loss channel (``k`` photons lost)."""
    bmat = bernoulli_matrix(eta, dim)
    ops = []
    for k in range(dim):
        m = np.arange(dim - k)
        ek = np.zeros((dim, dim))
        ek[m, m + k] = bmat[m + k, m]
        ops.append(ek)
    return ops


def loss_channel(rho: FockDensity, eta: float) -> FockDensity:
    """Beam-splitter loss with transmissivity ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"transmissivity must lie in [0, 1], got {eta}")
    if eta == 1.0:
        return rho
    dim = rho.dim
    bmat = bernoulli_matrix(eta, dim)
    src = rho.rho
    out = np.zeros_like(src)
    for k in range(dim):
        m = np.arange(dim - k)
        b = bmat[m + k, m]
        out[: dim - k, : dim - k] += np.outer(b, b) * src[k:, k:]
    return FockDensity(out)


# ---------------------------------------------------------------- diagnostics


def photon_distribution(state: FockVector | FockDensity) -> np.ndarray:
    return np.real(np.diag(as_density(state).rho)).copy()


def parity_of(state: FockVector | FockDensity) -> Parity:
    if isinstance(state, FockVector):
        amp = np.abs(state.amps)
    else:
        amp = np.sqrt(np.clip(photon_distribution(state), 0.0, None))
    has_even = bool(np.any(amp[0::2] > SUPPORT_TOL))
    has_odd = bool(np.any(amp[1::2] > SUPPORT_TOL))
    if has_odd and not has_even:
        return "odd"
    if has_even and not has_odd:
        return "even"
    return "mixed"


def mean_photon_number(state: FockVector | FockDensity) -> float:
    pn = photon_distribution(state)
    return float(np.dot(np.arange(pn.size), pn))


def overlap(a: FockVector, b: FockVector) -> complex:
    k = min(a.dim, b.dim)
    return complex(np.vdot(a.amps[:k], b.amps[:k]))


def state_fidelity(rho: FockVector | FockDensity, target: FockVector) -> float:
    """``<psi|rho|psi>`` against a pure target, clipped to [0, 1]."""
    rho = as_density(rho)
    v = target.padded(rho.dim).amps
    val = np.vdot(v, rho.rho @ v)
    return float(np.clip(val.real, 0.0, 1.0))


def trace_distance(a: FockVector | FockDensity, b: FockVector | FockDensity) -> float:
    a, b = as_density(a), as_density(b)
    dim = max(a.dim, b.dim)
    diff = a.padded(dim).rho - b.padded(dim).rho
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def db_to_r(db: float) -> float:
    """Squeezing parameter for a variance ratio of ``db`` decibels (sign ignored)."""
    return abs(db) * math.log(10.0) / 20.0


def r_to_db(r: float) -> float:
    return 10.0 * math.log10(math.exp(-2.0 * r))
