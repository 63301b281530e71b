"""Empirical Cov(Q(0), Q(t)) for the fBm storage process and a comparison of
polynomial t^(2H-2) decay against Weibullian exp(-r t^(2-2H)) decay.

The comparison is a diagnostic: it reports which model fits better, it does
not decide the underlying question.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .fbm_core import _as_h
from .storage_sim import DEFAULT_BATCH, simulate_workload_at

__all__ = [
    "CovEstimate",
    "ConjectureReport",
    "estimate_cov",
    "jackknife_cov",
    "conjecture_diagnostic",
    "default_warmup",
]

MIN_REPS = 30
R2_MARGIN = 0.05


@dataclass(frozen=True)
class CovEstimate:
    lags: np.ndarray
    cov: np.ndarray
    ci: np.ndarray
    warmup: float
    reps: int
    step: float
    mean_q: float

    def rows(self):
        for lag, c, w in zip(self.lags, self.cov, self.ci):
            yield (float(lag), float(c), float(w), self.reps)


@dataclass(frozen=True)
class ConjectureReport:
    power_exponent: float
    power_amplitude: float
    power_amplitude_se: float
    power_r2: float
    weibull_rate: float
    weibull_r2: float
    preferred: str
    target_exponent: float
    lags_used: int

    def to_dict(self):
        return asdict(self)


def jackknife_cov(x, y, level: float = 0.95) -> tuple[float, float]:
    """Sample covariance (divisor n-1) and a delete-one jackknife half-width."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx, sy, sxy = xc.sum(), yc.sum(), float(xc @ yc)
    full = (sxy - sx * sy / n) / (n - 1)
    m = n - 1
    loo = (sxy - xc * yc - (sx - xc) * (sy - yc) / m) / (m - 1)
    var = (n - 1) / n * np.sum((loo - loo.mean()) ** 2)
    return float(full), float(stats.norm.ppf(0.5 + level / 2) * math.sqrt(var))


def estimate_cov(
    h,
    lags,
    warmup: float,
    reps: int,
    step: float = 2.0**-6,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
) -> CovEstimate:
    """Cov(Q(w), Q(w + lag)) across replications started empty at time 0."""
    h = _as_h(h)
    lags = np.asarray(lags, dtype=float)
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} replications")
    if not warmup > 0:
        raise ValueError("warmup must be positive")
    if np.any(lags < 0) or np.any(np.diff(lags) <= 0):
        raise ValueError("lags must be nonnegative and strictly increasing")
    w = math.ceil(warmup / step - 1e-9) * step
    q = simulate_workload_at(h, np.concatenate([[w], w + lags]), step, reps, seed, batch_size)
    cov = np.empty(lags.size)
    ci = np.empty(lags.size)
    for i in range(lags.size):
        cov[i], ci[i] = jackknife_cov(q[:, 0], q[:, i + 1])
    return CovEstimate(lags, cov, ci, float(w), int(reps), float(step), float(q[:, 0].mean()))


def default_warmup(h, step: float = 2.0**-6, seed: int = 0, pilot_reps: int = 200, eps: float = 0.01) -> float:
    """Burn-in from the horizon planner at level 3 * (pilot mean workload)."""
    from .horizon_planner import HorizonRequest, horizon
    from .rate_variational import theta

    h = _as_h(h)
    th = theta(h, n=128).value
    t0 = horizon(HorizonRequest(h, th, 1.0, eps)).t
    t0 = math.ceil(t0 / step) * step
    q = simulate_workload_at(h, [t0], step, pilot_reps, seed)
    x = max(3.0 * float(q.mean()), 1e-3)
    return horizon(HorizonRequest(h, th, x, eps)).t


def conjecture_diagnostic(est, h) -> ConjectureReport:
    """Fit cov ~ g t^p (log-log) and cov ~ c exp(-r t^(2-2H)) on positive lags.

    ``est`` is a CovEstimate or a (lags, cov) pair.
    """
    h = _as_h(h)
    if isinstance(est, CovEstimate):
        lags, cov = est.lags, est.cov
    else:
        lags, cov = (np.asarray(v, dtype=float) for v in est)
    keep = (lags > 0) & (cov > 0)
    if keep.sum() < 4:
        raise ValueError(f"need >= 4 positive covariance estimates at positive lags, got {int(keep.sum())}")
    t, c = lags[keep], np.log(cov[keep])
    pw = stats.linregress(np.log(t), c)
    wb = stats.linregress(t ** (2 - 2 * h), c)
    r2p, r2w = float(pw.rvalue**2), float(wb.rvalue**2)
    if r2p - r2w >= R2_MARGIN:
        pref = "power"
    elif r2w - r2p >= R2_MARGIN:
        pref = "weibull"
    else:
        pref = "inconclusive"
    amp = float(np.exp(pw.intercept))
    return ConjectureReport(
        power_exponent=float(pw.slope),
        power_amplitude=amp,
        power_amplitude_se=float(amp * pw.intercept_stderr),
        power_r2=r2p,
        weibull_rate=float(-wb.slope),
        weibull_r2=r2w,
        preferred=pref,
        target_exponent=2 * h - 2,
        lags_used=int(keep.sum()),
    )
