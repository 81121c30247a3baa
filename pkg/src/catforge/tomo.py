"""Maximum-likelihood homodyne tomography and fidelity-based parameter fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceWarning, DataError, ParameterError, UnsupportedPhaseError
from .fock import (
    DEFAULT_DIM,
    CatParams,
    FockDensity,
    FockVector,
    SCParams,
    as_density,
    bernoulli_matrix,
    odd_cat,
    sc_state,
    squeeze_matrix,
    state_fidelity,
    trace_distance,
)
from .homodyne import QuadratureRecords
from .wigner import hermite_functions

MIN_RECORDS = 1000
MIN_PHASES = 6
LOGLIK_SLACK = 1e-9

# Ideal targets are built on this many extra levels and cropped, so fidelities
# refer to the untruncated state rather than one renormalized on the truncation.
TARGET_PAD = 20

DEFAULT_ALPHA_GRID = np.round(np.arange(0.5, 2.0 + 1e-9, 0.01), 10)
DEFAULT_R_GRID = np.round(np.arange(0.0, 0.6 + 1e-9, 0.01), 10)


@dataclass(frozen=True)
class TomoConfig:
    dim: int = DEFAULT_DIM
    eta_correction: float = 0.80
    max_iters: int = 500
    convergence_tol: float = 1e-6
    bin_width: float | None = None

    def __post_init__(self):
        if not 0.0 < self.eta_correction <= 1.0:
            raise ParameterError(f"eta_correction must lie in (0, 1], got {self.eta_correction}")
        if self.dim < 10:
            raise ParameterError(f"tomography dim must be >= 10, got {self.dim}")
        if self.max_iters < 0:
            raise ParameterError("max_iters must be >= 0")
        if self.bin_width is not None and not self.bin_width > 0:
            raise ParameterError("bin_width must be positive")


@dataclass(frozen=True, eq=False)
class MaxLikResult:
    rho: FockDensity
    iterations: int
    converged: bool
    loglik: np.ndarray = field(repr=False)
    diluted_steps: int = 0


# ---------------------------------------------------------------- POVM


def _pack_index(dim):
    iu, ju = np.triu_indices(dim, 1)
    return iu, ju


def pack_hermitian(mat: np.ndarray) -> np.ndarray:
    """Orthonormal real coordinates of a Hermitian matrix: Tr(AB) = pack(A) . pack(B)."""
    dim = mat.shape[-1]
    iu, ju = _pack_index(dim)
    diag = np.real(np.diagonal(mat, axis1=-2, axis2=-1))
    off = mat[..., iu, ju]
    return np.concatenate([diag, math.sqrt(2) * off.real, math.sqrt(2) * off.imag], axis=-1)


def unpack_hermitian(vec: np.ndarray, dim: int) -> np.ndarray:
    iu, ju = _pack_index(dim)
    k = iu.size
    out = np.zeros((dim, dim), dtype=complex)
    out[np.arange(dim), np.arange(dim)] = vec[:dim]
    off = (vec[dim : dim + k] + 1j * vec[dim + k :]) / math.sqrt(2)
    out[iu, ju] = off
    out[ju, iu] = off.conj()
    return out


def povm_matrix(phases, values, dim: int, eta: float, chunk: int = 4096) -> np.ndarray:
    """Packed efficiency-corrected projectors, one row per outcome.

    Each row packs ``L^dag(|x_theta><x_theta|)`` where ``L`` is loss with
    transmissivity ``eta``: ``Pi_mn = e^{i(m-n)theta} sum_k B_{m,m-k} B_{n,n-k}
    psi_{m-k}(x) psi_{n-k}(x)``.
    """
    phases = np.asarray(phases, float)
    values = np.asarray(values, float)
    n_out = values.size
    bmat = bernoulli_matrix(eta, dim)
    iu, ju = _pack_index(dim)
    rows = np.empty((n_out, dim * dim))
    kmax = dim if eta < 1.0 else 1
    m = np.arange(dim)
    for start in range(0, n_out, chunk):
        sl = slice(start, min(start + chunk, n_out))
        psi = hermite_functions(values[sl], dim)
        kern = np.zeros((psi.shape[0], dim, dim))
        for k in range(kmax):
            y = np.zeros_like(psi)
            y[:, k:] = psi[:, : dim - k] * bmat[m[k:], m[k:] - k]
            kern += y[:, :, None] * y[:, None, :]
        dphi = (iu - ju)[None, :] * phases[sl, None]
        off = kern[:, iu, ju]
        rows[sl, :dim] = kern[:, m, m]
        rows[sl, dim : dim + iu.size] = math.sqrt(2) * off * np.cos(dphi)
        rows[sl, dim + iu.size :] = math.sqrt(2) * off * np.sin(dphi)
    return rows


def _binned(records: QuadratureRecords, width: float):
    phases = np.round(records.phases, 12)
    idx = np.floor(records.values / width).astype(np.int64)
    keys = np.stack([phases, idx.astype(float)], axis=1)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    return uniq[:, 0], (uniq[:, 1] + 0.5) * width, counts.astype(float)


def _check_records(records: QuadratureRecords):
    if len(records) < MIN_RECORDS:
        raise DataError(f"need at least {MIN_RECORDS} records, got {len(records)}")
    n_ph = np.unique(np.round(records.phases, 12)).size
    if n_ph < MIN_PHASES:
        raise DataError(f"need at least {MIN_PHASES} distinct phases, got {n_ph}")


def log_likelihood(rho: FockDensity, records: QuadratureRecords, eta: float = 1.0) -> float:
    """Mean log-probability density of the records under ``rho``."""
    phi = povm_matrix(records.phases, records.values, rho.dim, eta)
    p = phi @ pack_hermitian(rho.rho)
    return float(np.mean(np.log(np.clip(p, 1e-300, None))))


def maxlik_reconstruct(records: QuadratureRecords, cfg: TomoConfig = TomoConfig()) -> MaxLikResult:
    """Iterative R rho R reconstruction from quadrature records.

    Starts from ``I/dim``.  A plain ``R rho R`` step that would lower the
    likelihood is replaced by a diluted step ``(I + eps R) rho (I + eps R)``
    with ``eps`` halved until the likelihood does not decrease.
    """
    _check_records(records)
    dim = cfg.dim
    if cfg.bin_width is None:
        ph, xv, w = records.phases, records.values, np.ones(len(records))
    else:
        ph, xv, w = _binned(records, cfg.bin_width)
    w = w / w.sum()
    phi = povm_matrix(ph, xv, dim, cfg.eta_correction)

    rho = np.eye(dim, dtype=complex) / dim

    def probs(mat):
        return np.clip(phi @ pack_hermitian(mat), 1e-300, None)

    p = probs(rho)
    ll = [float(w @ np.log(p))]
    n_dilute = 0
    converged = False
    it = 0
    eye = np.eye(dim)
    for it in range(1, cfg.max_iters + 1):
        R = unpack_hermitian(phi.T @ (w / p), dim)
        eps = math.inf
        while True:
            op = R if math.isinf(eps) else eye + eps * R
            cand = op @ rho @ op.conj().T
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.trace(cand).real
            p_new = probs(cand)
            ll_new = float(w @ np.log(p_new))
            if ll_new >= ll[-1] - LOGLIK_SLACK * max(1.0, abs(ll[-1])) or eps < 1e-8:
                break
            eps = 1.0 if math.isinf(eps) else eps / 2
            n_dilute += 1
        step = trace_distance(FockDensity(cand), FockDensity(rho))
        rho, p = cand, p_new
        ll.append(ll_new)
        if step < cfg.convergence_tol:
            converged = True
            break
    if cfg.max_iters > 0 and not converged:
        warnings.warn(
            f"maxlik did not reach tolerance {cfg.convergence_tol} in {cfg.max_iters} iterations",
            ConvergenceWarning,
            stacklevel=2,
        )
    return MaxLikResult(FockDensity(rho), it, converged, np.asarray(ll), n_dilute)


# ---------------------------------------------------------------- fidelities


def fidelity_cat(rho: FockDensity | FockVector, params: CatParams | float) -> float:
    rho = as_density(rho)
    return state_fidelity(rho, odd_cat(params, rho.dim + TARGET_PAD))


def _check_theta(theta):
    if theta not in (0.0, math.pi):
        raise UnsupportedPhaseError(f"SC fidelity needs theta in {{0, pi}}, got {theta}")


def fidelity_sc(rho: FockDensity | FockVector, params: SCParams, method: str = "closed") -> float:
    """``<SC|rho|SC>``.

    ``method="closed"`` uses the Hermite expansion; ``method="operator"``
    evaluates ``<cat|S^dag rho S|cat>`` with a padded squeeze matrix.
    """
    rho = as_density(rho)
    _check_theta(params.theta)
    work = rho.dim + TARGET_PAD
    if method == "closed":
        return state_fidelity(rho, sc_state(params, work))
    if method == "operator":
        mat = squeeze_matrix(params.r, params.theta, work)
        return state_fidelity(rho, FockVector(mat @ odd_cat(params.alpha, work).amps))
    raise ParameterError(f"unknown fidelity method {method!r}")


@dataclass(frozen=True, eq=False)
class FitResult:
    alpha_hat: float
    r_hat: float
    theta: float
    fidelity: float
    alpha_grid: np.ndarray = field(repr=False)
    r_grid: np.ndarray = field(repr=False)
    surface: np.ndarray = field(repr=False)  # shape (len(r_grid), len(alpha_grid))

    def surface_rows(self):
        for i, r in enumerate(self.r_grid):
            for j, a in enumerate(self.alpha_grid):
                yield float(a), float(r), float(self.surface[i, j])


def sc_vectors(alpha_grid, r_grid, theta: float, dim: int) -> np.ndarray:
    """Ideal SC amplitudes for every grid point, cropped to ``dim``; shape ``(nr, na, dim)``."""
    out = np.empty((len(r_grid), len(alpha_grid), dim), dtype=complex)
    for i, r in enumerate(r_grid):
        for j, a in enumerate(alpha_grid):
            out[i, j] = sc_state(SCParams(float(a), float(r), theta), dim + TARGET_PAD).amps[:dim]
    return out


def argmax_surface(surface: np.ndarray) -> tuple[int, int]:
    """Row-major first maximum: ties go to smaller r, then smaller alpha."""
    flat = int(np.argmax(surface))
    return divmod(flat, surface.shape[1])


def fit_sc(
    rho: FockDensity | FockVector,
    theta: float,
    alpha_grid=DEFAULT_ALPHA_GRID,
    r_grid=DEFAULT_R_GRID,
) -> FitResult:
    rho = as_density(rho)
    _check_theta(theta)
    alpha_grid = np.asarray(alpha_grid, float)
    r_grid = np.asarray(r_grid, float)
    if alpha_grid.size == 0 or r_grid.size == 0:
        raise ParameterError("fit grids must be non-empty")
    vecs = sc_vectors(alpha_grid, r_grid, theta, rho.dim)
    surface = np.real(np.einsum("ijm,mn,ijn->ij", vecs.conj(), rho.rho, vecs))
    surface = np.clip(surface, 0.0, 1.0)
    i, j = argmax_surface(surface)
    return FitResult(
        float(alpha_grid[j]), float(r_grid[i]), theta, float(surface[i, j]), alpha_grid, r_grid, surface
    )


def fit_cat(rho: FockDensity | FockVector, alpha_grid=DEFAULT_ALPHA_GRID) -> FitResult:
    """Amplitude fit against odd cats only (the ``r = 0`` column)."""
    return fit_sc(rho, 0.0, alpha_grid, [0.0])


def wigner_origin(rho: FockDensity | FockVector) -> float:
    """``W(0, 0) = (1/pi) sum_n (-1)^n rho_nn``."""
    rho = as_density(rho)
    diag = np.real(np.diag(rho.rho))
    return float(np.dot((-1.0) ** np.arange(rho.dim), diag) / math.pi)


def bootstrap(records: QuadratureRecords, statistic, n_boot: int = 20, rng_seed: int = 0) -> np.ndarray:
    """Resample records with replacement and evaluate ``statistic`` on each replicate."""
    rng = np.random.default_rng(rng_seed)
    n = len(records)
    return np.array([statistic(records.subset(rng.integers(0, n, n))) for _ in range(n_boot)])
