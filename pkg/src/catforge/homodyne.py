"""Simulated pulsed homodyne acquisition in a single temporal mode."""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import DataError, FitError, ParameterError
from .fock import FockDensity, FockVector, as_density
from .wigner import marginal

TRACE_LENGTH = 500
N_PHASES = 12
CDF_POINTS = 4096
CDF_RANGE = 8.0
VACUUM_VARIANCE = 0.5

MAGIC = b"CATF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CATFORGE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class TemporalMode:
    gamma: float
    t0: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.samples, float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def length(self) -> int:
        return self.samples.size

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "t0": self.t0, "L": self.length}

    @classmethod
    def from_dict(cls, data: dict) -> TemporalMode:
        return double_exp_mode(float(data["gamma"]), float(data["t0"]), int(data["L"]))


def double_exp_mode(gamma: float, t0: float, L: int = TRACE_LENGTH) -> TemporalMode:
    """``f(t) ~ exp(-gamma |t - t0|)`` normalized to unit energy over ``t = 0..L-1``."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    if not 0 <= t0 < L:
        raise ParameterError(f"t0 must lie in [0, {L}), got {t0}")
    t = np.arange(L, dtype=float)
    f = np.exp(-gamma * np.abs(t - t0))
    return TemporalMode(float(gamma), float(t0), f / math.sqrt(np.dot(f, f)))


@dataclass(frozen=True)
class QuadratureRecord:
    lo_phase: float
    value: float


@dataclass(frozen=True, eq=False)
class QuadratureRecords:
    """Column storage for many :class:`QuadratureRecord` entries."""

    phases: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ph = np.array(self.phases, float).ravel()
        va = np.array(self.values, float).ravel()
        if ph.size != va.size:
            raise DataError("phases and values must have equal length")
        if not (np.all(np.isfinite(ph)) and np.all(np.isfinite(va))):
            raise DataError("quadrature records must be finite")
        object.__setattr__(self, "phases", ph)
        object.__setattr__(self, "values", va)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        for ph, v in zip(self.phases, self.values):
            yield QuadratureRecord(float(ph), float(v))

    def subset(self, idx) -> QuadratureRecords:
        return QuadratureRecords(self.phases[idx], self.values[idx])

    def at_phase(self, phase: float, atol: float = 1e-12) -> np.ndarray:
        return self.values[np.abs(self.phases - phase) <= atol]

    @classmethod
    def from_list(cls, records) -> QuadratureRecords:
        records = list(records)
        return cls([r.lo_phase for r in records], [r.value for r in records])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("phase,value\n")
            for ph, v in zip(self.phases, self.values):
                fh.write(f"{ph:.17g},{v:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> QuadratureRecords:
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "phase,value":
                raise DataError(f"{path}: expected header 'phase,value', got {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.size == 0:
            return cls(np.empty(0), np.empty(0))
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class Trace:
    samples: np.ndarray
    lo_phase: float


@dataclass(frozen=True, eq=False)
class TraceSet:
    """``count`` photocurrent traces of ``L`` samples plus their LO phases."""

    phases: np.ndarray
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, float)
        if s.ndim != 2 or s.shape[0] != np.size(self.phases):
            raise DataError("samples must be (count, L) matching the phase vector")

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __getitem__(self, i) -> Trace:
        return Trace(self.samples[i], float(self.phases[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def length(self) -> int:
        return self.samples.shape[1]


def default_phases(n_phases: int = N_PHASES) -> np.ndarray:
    return np.arange(n_phases) * (math.pi / n_phases)


def phase_schedule(n_records: int, phases=None) -> np.ndarray:
    """Round-robin assignment of ``n_records`` to the phase list (equal counts +- 1)."""
    phases = default_phases() if phases is None else np.asarray(phases, float)
    return phases[np.arange(n_records) % phases.size]


class _InverseCDF:
    def __init__(self, rho: FockDensity, theta: float):
        grid = np.linspace(-CDF_RANGE, CDF_RANGE, CDF_POINTS)
        pdf = np.clip(marginal(rho, theta, grid), 0.0, None)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        # Flat CDF stretches (zero density) would make the inverse multivalued.
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        self.cdf = cdf[keep]
        self.grid = grid[keep]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, self.cdf, self.grid)


def _blocks(n: int, workers: int) -> list[slice]:
    edges = np.linspace(0, n, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def _check_schedule(n_traces, phase_list, rng_seed):
    if n_traces <= 0:
        raise ParameterError(f"n_traces must be > 0, got {n_traces}")
    if rng_seed is None:
        raise ParameterError("an explicit rng_seed is required for reproducibility")
    phase_list = default_phases() if phase_list is None else np.asarray(phase_list, float)
    return phase_list


def sample_quadratures(
    rho: FockDensity | FockVector,
    n_records: int,
    phases=None,
    rng_seed: int = 0,
    workers: int | None = None,
) -> QuadratureRecords:
    """Draw ``X_theta`` outcomes by inverse-CDF sampling of the exact marginals."""
    phase_list = _check_schedule(n_records, phases, rng_seed)
    rho = as_density(rho)
    schedule = phase_schedule(n_records, phase_list)
    inv = {float(th): _InverseCDF(rho, float(th)) for th in phase_list}
    workers = workers or worker_count()
    streams = np.random.SeedSequence(rng_seed).spawn(workers)
    values = np.empty(n_records)

    def run(block, seq):
        rng = np.random.default_rng(seq)
        u = rng.random(block.stop - block.start)
        sched = schedule[block]
        out = np.empty_like(u)
        for th in phase_list:
            sel = sched == th
            out[sel] = inv[float(th)](u[sel])
        values[block] = out

    _run_blocks(run, _blocks(n_records, workers), streams)
    return QuadratureRecords(schedule, values)


def _run_blocks(fn, blocks, streams):
    if len(blocks) == 1:
        fn(blocks[0], streams[0])
        return
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        list(pool.map(fn, blocks, streams))


def synthesize_traces(
    rho: FockDensity | FockVector,
    mode: TemporalMode,
    n_traces: int,
    phases=None,
    rng_seed: int = 0,
    workers: int | None = None,
    residue: bool = True,
) -> TraceSet:
    """Photocurrent traces ``X f(t) + n_perp(t)`` with vacuum noise orthogonal to ``f``.

    The white residue has per-sample variance 1/2, so any unit-energy mode
    extracts vacuum variance 1/2 from it.
    """
    records = sample_quadratures(rho, n_traces, phases, rng_seed, workers)
    f = mode.samples
    L = f.size
    samples = np.outer(records.values, f)
    if residue:
        workers = workers or worker_count()
        # Separate stream family from the quadrature draws.
        streams = np.random.SeedSequence([rng_seed, 1]).spawn(workers)

        def run(block, seq):
            rng = np.random.default_rng(seq)
            noise = rng.normal(0.0, math.sqrt(VACUUM_VARIANCE), size=(block.stop - block.start, L))
            noise -= np.outer(noise @ f, f)
            samples[block] += noise

        _run_blocks(run, _blocks(n_traces, workers), streams)
    return TraceSet(records.phases, samples)


def variance_curve(traces: TraceSet) -> np.ndarray:
    if len(traces) < 2:
        raise DataError("variance curve needs at least 2 traces")
    return np.var(traces.samples, axis=0, ddof=1)


def _linear_ab(curve, basis):
    # Least-squares a + b*basis for every row of ``basis``; returns a, b, sse.
    n = curve.size
    sb = basis.sum(axis=1)
    sbb = np.einsum("ij,ij->i", basis, basis)
    sy = curve.sum()
    sby = basis @ curve
    det = n * sbb - sb**2
    b = (n * sby - sb * sy) / det
    a = (sy - b * sb) / n
    resid = curve[None, :] - a[:, None] - b[:, None] * basis
    return a, b, np.einsum("ij,ij->i", resid, resid)


def fit_temporal_mode(var_curve, full_output: bool = False, min_significance: float = 5.0):
    """Fit ``a + b exp(-2 gamma |t - t0|)`` to a variance curve.

    Coarse ``(gamma, t0)`` grid with closed-form ``(a, b)``, then a
    Levenberg-Marquardt refinement of all four parameters.  Raises
    :class:`FitError` when the bump amplitude ``b`` is not significantly
    positive.
    """
    y = np.asarray(var_curve, float)
    L = y.size
    if L < 32:
        raise DataError(f"variance curve too short for a mode fit ({L} < 32)")
    t = np.arange(L, dtype=float)
    gammas = np.geomspace(1e-3, 1.0, 61)
    best = None
    for t0 in range(L):
        basis = np.exp(-2.0 * gammas[:, None] * np.abs(t[None, :] - t0))
        a, b, sse = _linear_ab(y, basis)
        sse = np.where(b > 0, sse, np.inf)
        k = int(np.argmin(sse))
        if best is None or sse[k] < best[0]:
            best = (sse[k], a[k], b[k], gammas[k], float(t0))
    if best is None or not np.isfinite(best[0]):
        raise FitError("no positive-amplitude mode found in variance curve", {"b": 0.0})
    _, a0, b0, g0, t00 = best

    def resid(q):
        a, b, lg, t0 = q
        return a + b * np.exp(-2.0 * math.exp(lg) * np.abs(t - t0)) - y

    sol = least_squares(resid, [a0, b0, math.log(g0), t00], method="lm", x_scale="jac")
    a, b, lg, t0 = sol.x
    dof = max(L - 4, 1)
    s2 = float(np.dot(sol.fun, sol.fun)) / dof
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * s2
        err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        err = np.full(4, np.inf)
    gamma = math.exp(lg)
    diag = {
        "a": float(a),
        "b": float(b),
        "gamma": gamma,
        "t0": float(t0),
        "b_stderr": float(err[1]),
        "gamma_stderr": float(gamma * err[2]),
        "t0_stderr": float(err[3]),
        "success": bool(sol.success),
        "rms_residual": math.sqrt(s2),
    }
    if not sol.success:
        raise FitError("mode fit did not converge", diag)
    if not (b > 0 and b > min_significance * err[1]):
        raise FitError("variance bump not significant (b ~ 0): no mode to fit", diag)
    if not 0 <= t0 < L:
        raise FitError("fitted mode centre outside the trace window", diag)
    mode = double_exp_mode(gamma, float(t0), L)
    return (mode, diag) if full_output else mode


def extract_quadrature(trace: Trace, mode: TemporalMode) -> QuadratureRecord:
    samples = np.asarray(trace.samples, float)
    if samples.size != mode.length:
        raise DataError(f"trace length {samples.size} != mode length {mode.length}")
    return QuadratureRecord(float(trace.lo_phase), float(np.dot(mode.samples, samples)))


def extract_all(traces: TraceSet, mode: TemporalMode) -> QuadratureRecords:
    if traces.length != mode.length:
        raise DataError(f"trace length {traces.length} != mode length {mode.length}")
    return QuadratureRecords(traces.phases, traces.samples @ mode.samples)


# ---------------------------------------------------------------- binary I/O


def write_traces(path, traces: TraceSet) -> None:
    """Little-endian: magic, version u32, L u32, count u64, then (phase f64, L x f64) records."""
    count, L = traces.samples.shape
    rec = np.empty((count, L + 1), dtype="<f8")
    rec[:, 0] = traces.phases
    rec[:, 1:] = traces.samples
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, L, count))
        fh.write(rec.tobytes())


def read_traces(path) -> TraceSet:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DataError(f"{path}: truncated header")
        magic, version, L, count = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported format version {version}")
        body = fh.read()
    expected = count * (L + 1) * 8
    if len(body) != expected:
        raise DataError(f"{path}: expected {expected} payload bytes, found {len(body)}")
    rec = np.frombuffer(body, dtype="<f8").reshape(count, L + 1)
    return TraceSet(rec[:, 0].copy(), rec[:, 1:].copy())
