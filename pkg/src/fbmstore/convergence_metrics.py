"""Empirical convergence-to-stationarity metrics and decay fits.

D1 is the Kolmogorov-Smirnov distance between the laws of M(t) and M, D2 the
integral distance E M - E M(t). Both are estimated from paired samples of
M(t) and M(t_ref) taken on the same paths.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .fbm_core import _as_h

__all__ = [
    "EmpiricalCdf",
    "DecayFit",
    "TailFit",
    "MeanDiff",
    "StarvationError",
    "d1_hat",
    "d2_hat",
    "d1_ci",
    "weibull_fit",
    "tail_fit",
]


class StarvationError(ValueError):
    """Too few positive estimates to fit a decay line."""


@dataclass(frozen=True)
class EmpiricalCdf:
    samples: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size == 0:
            raise ValueError("empty sample")
        object.__setattr__(self, "samples", s)

    @property
    def size(self) -> int:
        return self.samples.size

    def __call__(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.size


@dataclass(frozen=True)
class DecayFit:
    h: float
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    slope_stderr: float = float("nan")
    excluded: tuple = ()

    def to_dict(self):
        d = asdict(self)
        d["excluded"] = list(self.excluded)
        return d


@dataclass(frozen=True)
class TailFit:
    kappa: float
    lam: float
    x_lo: float
    x_hi: float
    r_squared: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MeanDiff:
    estimate: float
    half_width: float
    n: int


def _pair(samples_t, samples_ref):
    a = np.asarray(samples_t, dtype=float).ravel()
    b = np.asarray(samples_ref, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    return a, b


def d1_hat(samples_t, samples_ref) -> float:
    """Sup-norm distance between the two empirical CDFs.

    Both CDFs are right-continuous steps, so the supremum is attained at one
    of the pooled sample points.
    """
    a, b = _pair(samples_t, samples_ref)
    pts = np.concatenate([a, b])
    fa = EmpiricalCdf(a)(pts)
    fb = EmpiricalCdf(b)(pts)
    return float(np.max(np.abs(fa - fb)))


def d1_ci(samples_t, samples_ref, level: float = 0.95) -> float:
    """Half-width of a normal interval for the paired D1 estimate, treating the
    maximizing level as fixed (the event probability is then binomial)."""
    a, b = _pair(samples_t, samples_ref)
    p = d1_hat(a, b)
    return float(stats.norm.ppf(0.5 + level / 2) * np.sqrt(p * (1 - p) / a.size))


def d2_hat(samples_t, samples_ref, level: float = 0.95) -> MeanDiff:
    """mean(samples_ref) - mean(samples_t); paired half-width when sizes match."""
    a, b = _pair(samples_t, samples_ref)
    est = float(np.mean(b) - np.mean(a))
    z = stats.norm.ppf(0.5 + level / 2)
    if a.size == b.size and a.size > 1:
        hw = z * np.std(b - a, ddof=1) / np.sqrt(a.size)
    elif a.size > 1 and b.size > 1:
        hw = z * np.sqrt(np.var(a, ddof=1) / a.size + np.var(b, ddof=1) / b.size)
    else:
        hw = float("nan")
    return MeanDiff(est, float(hw), int(a.size))


def weibull_fit(h, horizons, values, ci_half_widths=None, weights: str = "none") -> DecayFit:
    """Least-squares line of log(value) against t^(2-2H).

    Non-positive values, and values whose interval reaches 0 when
    ``ci_half_widths`` is given, are dropped and reported in ``excluded``.
    ``weights="inverse_variance"`` weights each log-value by
    (value / half_width)^2.
    """
    h = _as_h(h)
    t = np.asarray(horizons, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if ci_half_widths is not None:
        hw = np.asarray(ci_half_widths, dtype=float)
        keep &= v - hw > 0
    excluded = tuple(float(x) for x in t[~keep])
    if keep.sum() < 3:
        raise StarvationError(
            f"need >= 3 positive values, starved horizons: {list(excluded)}"
        )
    x = t[keep] ** (2 - 2 * h)
    y = np.log(v[keep])
    if weights == "inverse_variance":
        if ci_half_widths is None:
            raise ValueError("inverse-variance weights need ci_half_widths")
        w = (v[keep] / np.asarray(ci_half_widths, dtype=float)[keep]) ** 2
    elif weights == "none":
        w = np.ones_like(x)
    else:
        raise ValueError(f"unknown weighting {weights!r}")
    X = np.column_stack([np.ones_like(x), x])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    ybar = np.average(y, weights=w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * resid**2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    dof = x.size - 2
    if dof > 0:
        sigma2 = ss_res / dof
        cov = sigma2 * np.linalg.inv((X * w[:, None]).T @ X)
        se = float(np.sqrt(cov[1, 1]))
    else:
        se = float("nan")
    return DecayFit(h, float(coef[1]), float(coef[0]), r2, int(x.size), se, excluded)


def tail_fit(h, samples_ref, q_lo: float = 0.5, q_hi: float = 0.95, points: int = 40) -> TailFit:
    """Fit log P(M > x) ~ log kappa - lambda x^(2-2H) between two sample quantiles."""
    h = _as_h(h)
    s = np.sort(np.asarray(samples_ref, dtype=float))
    if s.size < 100:
        raise ValueError("need at least 100 samples")
    if s[0] == s[-1]:
        raise ValueError("degenerate sample: all values equal")
    x_lo, x_hi = np.quantile(s, [q_lo, q_hi])
    if not x_hi > x_lo:
        raise ValueError("degenerate sample: empty fit range")
    xs = np.linspace(x_lo, x_hi, points)
    surv = 1.0 - np.searchsorted(s, xs, side="right") / s.size
    keep = surv > 0
    fit = stats.linregress(xs[keep] ** (2 - 2 * h), np.log(surv[keep]))
    lam = -fit.slope
    if not lam > 0:
        raise ValueError(f"fitted tail exponent is not positive ({lam:.4g})")
    return TailFit(float(np.exp(fit.intercept)), float(lam), float(x_lo), float(x_hi), float(fit.rvalue**2))
