"""Storage process, running maximum, busy periods and Monte Carlo estimation of
gamma(x, t) = P(M > x) - P(M(t) > x) for fBm input with unit drain rate."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .fbm_core import FbmPath, HurstParam, Seed, TimeGrid, _as_h, sample_fgn_batch

__all__ = [
    "NetputPath",
    "WorkloadTrace",
    "RunningMaxTrace",
    "BusyPeriodList",
    "GammaEstimate",
    "netput",
    "running_max",
    "workload",
    "busy_periods",
    "ongoing_busy_period",
    "binomial_ci",
    "horizon_index",
    "simulate_maxima",
    "simulate_workload_at",
    "estimate_gamma",
    "estimate_gamma_scaled",
    "default_step",
]

DEFAULT_BATCH = 256


@dataclass(frozen=True)
class NetputPath:
    grid: TimeGrid
    values: np.ndarray


@dataclass(frozen=True)
class WorkloadTrace:
    grid: TimeGrid
    q: np.ndarray


@dataclass(frozen=True)
class RunningMaxTrace:
    grid: TimeGrid
    m: np.ndarray


@dataclass(frozen=True)
class BusyPeriodList:
    intervals: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def lengths(self, grid: TimeGrid) -> np.ndarray:
        """Time spanned by each interval, measured between the zero-workload
        grid points that bracket it (truncated at the trace ends)."""
        pts = grid.points
        last = pts.size - 1
        return np.array(
            [pts[min(b + 1, last)] - pts[max(a - 1, 0)] for a, b in self.intervals]
        )


@dataclass(frozen=True)
class GammaEstimate:
    x: float
    t: float
    estimate: float
    half_width: float
    reps: int
    count: int
    ci: tuple[float, float]
    p_ref: float
    p_t: float
    t_ref: float
    step: float
    ci_method: str

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ci"] = list(self.ci)
        return d


def default_step(t: float) -> float:
    return 2.0**-8 * min(1.0, t)


def netput(path: FbmPath) -> NetputPath:
    return NetputPath(path.grid, path.values - path.grid.points)


def running_max(path: FbmPath) -> RunningMaxTrace:
    """m[i] = max(0, max_{j<=i} A(t_j) - t_j)."""
    if path.grid.points[0] != 0:
        raise ValueError("running maximum needs a grid starting at 0")
    x = netput(path).values
    return RunningMaxTrace(path.grid, np.maximum(np.maximum.accumulate(x), 0.0))


def workload(path: FbmPath, q0: float = 0.0) -> WorkloadTrace:
    """Reflection recursion q[k] = max(q[k-1] + dA_k - dt_k, 0), q[0] = q0."""
    if q0 < 0:
        raise ValueError("initial workload must be >= 0")
    dx = np.diff(path.values) - np.diff(path.grid.points)
    q = np.empty(len(path.grid))
    q[0] = q0
    for k, d in enumerate(dx, start=1):
        q[k] = max(q[k - 1] + d, 0.0)
    return WorkloadTrace(path.grid, q)


def busy_periods(trace: WorkloadTrace | np.ndarray) -> BusyPeriodList:
    """Maximal index intervals (start, end), inclusive, on which q > 0."""
    q = trace.q if isinstance(trace, WorkloadTrace) else np.asarray(trace)
    pos = np.concatenate([[False], q > 0, [False]]).astype(np.int8)
    edges = np.diff(pos)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return BusyPeriodList(tuple((int(a), int(b)) for a, b in zip(starts, ends)))


def ongoing_busy_period(trace: WorkloadTrace, index: int) -> tuple[int, int] | None:
    """Busy interval containing ``index``; None when the queue is empty there."""
    if trace.q[index] <= 0:
        return None
    for a, b in busy_periods(trace):
        if a <= index <= b:
            return (a, b)
    raise AssertionError("unreachable")


def binomial_ci(count: int, n: int, level: float = 0.95) -> tuple[float, float, str]:
    """Normal-approximation interval; exact Clopper-Pearson when count < 5."""
    p = count / n
    if count < 5:
        lo, hi = stats.binomtest(count, n).proportion_ci(level, method="exact")
        return float(lo), float(hi), "clopper-pearson"
    z = stats.norm.ppf(0.5 + level / 2)
    hw = z * np.sqrt(p * (1 - p) / n)
    return max(p - hw, 0.0), min(p + hw, 1.0), "normal"


def horizon_index(t: float, step: float) -> int:
    k = int(round(t / step))
    if k < 1 or abs(k * step - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"horizon {t} is not a positive multiple of step {step}")
    return k


def simulate_maxima(
    h,
    horizons,
    step: float,
    reps: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH,
    amplitude: float = 1.0,
    drift: float = 1.0,
) -> np.ndarray:
    """Running maxima of ``amplitude*A(s) - drift*s`` at each horizon, per path.

    Returns an array of shape (reps, len(horizons)). Batch ``b`` draws from
    stream ``b`` of ``seed``; replication ``r`` is slot ``r % batch_size`` of
    batch ``r // batch_size``, so any prefix of replications is reproducible
    independently of ``reps``.
    """
    h = _as_h(h)
    idx = np.array([horizon_index(t, step) for t in horizons])
    n = int(idx.max())
    out = np.empty((reps, idx.size))
    drain = drift * step * np.arange(1, n + 1)
    for b, start in enumerate(range(0, reps, batch_size)):
        count = min(batch_size, reps - start)
        rng = Seed(seed, b).generator()
        inc = sample_fgn_batch(h, n, step, batch_size, rng)[:count]
        x = np.cumsum(inc, axis=1)
        if amplitude != 1.0:
            x *= amplitude
        x -= drain
        np.maximum.accumulate(x, axis=1, out=x)
        out[start : start + count] = np.maximum(x[:, idx - 1], 0.0)
    return out


def simulate_workload_at(
    h,
    times,
    step: float,
    reps: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH,
) -> np.ndarray:
    """Workload Q(t) started empty at 0, sampled at ``times``; shape (reps, k)."""
    h = _as_h(h)
    idx = np.array([horizon_index(t, step) if t > 0 else 0 for t in times])
    n = max(int(idx.max()), 1)
    out = np.empty((reps, idx.size))
    drain = step * np.arange(1, n + 1)
    for b, start in enumerate(range(0, reps, batch_size)):
        count = min(batch_size, reps - start)
        rng = Seed(seed, b).generator()
        x = np.zeros((count, n + 1))
        x[:, 1:] = np.cumsum(sample_fgn_batch(h, n, step, batch_size, rng)[:count], axis=1)
        x[:, 1:] -= drain
        q = x - np.minimum.accumulate(x, axis=1)
        out[start : start + count] = q[:, idx]
    return out


def _spool(path, m_t, m_ref, x):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "M_t", "M_tref", "hit_t", "hit_tref"])
        for i, (a, b) in enumerate(zip(m_t, m_ref)):
            w.writerow([i, repr(float(a)), repr(float(b)), int(a > x), int(b > x)])


def _gamma_from_maxima(x, t, t_ref, step, m_t, m_ref, level=None) -> GammaEstimate:
    level = x if level is None else level
    reps = m_t.size
    hit_ref = m_ref > level
    hit_t = m_t > level
    count = int(np.count_nonzero(hit_ref & ~hit_t))
    lo, hi, method = binomial_ci(count, reps)
    return GammaEstimate(
        x=float(x),
        t=float(t),
        estimate=count / reps,
        half_width=(hi - lo) / 2,
        reps=reps,
        count=count,
        ci=(lo, hi),
        p_ref=float(np.count_nonzero(hit_ref)) / reps,
        p_t=float(np.count_nonzero(hit_t)) / reps,
        t_ref=float(t_ref),
        step=float(step),
        ci_method=method,
    )


def _check_gamma_args(x, t, t_ref, reps):
    if not (0 < t < t_ref):
        raise ValueError("need 0 < t < t_ref; gamma is identically 0 otherwise")
    if x <= 0:
        raise ValueError("level x must be positive")
    if reps < 1:
        raise ValueError("reps must be >= 1")


def estimate_gamma(
    h,
    x: float,
    t: float,
    t_ref: float | None = None,
    reps: int = 10_000,
    step: float | None = None,
    seed: int = 0,
    spool: str | None = None,
) -> GammaEstimate:
    """Fraction of paths with M(t_ref) > x but M(t) <= x, with a 95% interval.

    ``t_ref`` defaults to 8t and ``step`` to 2^-8 min(1, t). Both introduce a
    downward bias relative to the continuous-time, infinite-horizon gamma.
    """
    t_ref = 8.0 * t if t_ref is None else t_ref
    step = default_step(t) if step is None else step
    _check_gamma_args(x, t, t_ref, reps)
    m = simulate_maxima(h, [t, t_ref], step, reps, seed)
    if spool:
        _spool(spool, m[:, 0], m[:, 1], x)
    return _gamma_from_maxima(x, t, t_ref, step, m[:, 0], m[:, 1])


def estimate_gamma_scaled(
    h,
    x: float,
    t: float,
    t_ref: float | None = None,
    reps: int = 10_000,
    step: float | None = None,
    seed: int = 0,
) -> GammaEstimate:
    """gamma(x, t) through the self-similar representation: paths on [0, t_ref/t]
    with step ``step/t``, amplitude t^(H-1) and level x/t."""
    h = _as_h(h)
    t_ref = 8.0 * t if t_ref is None else t_ref
    step = default_step(t) if step is None else step
    _check_gamma_args(x, t, t_ref, reps)
    sstep = step / t
    m = simulate_maxima(h, [1.0, t_ref / t], sstep, reps, seed, amplitude=t ** (h - 1.0))
    return _gamma_from_maxima(x, t, t_ref, step, m[:, 0], m[:, 1], level=x / t)
