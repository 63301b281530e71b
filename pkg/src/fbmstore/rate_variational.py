"""Discretized large-deviations rates for fBm: constrained min-norm problems in
the reproducing kernel Hilbert space, the busy-period rate theta, and the
one-dimensional rate and bound formulas around it.

On a grid t_1 < ... < t_N the squared RKHS norm of a path with values z is
z' G^-1 z, G the fBm Gram matrix; the rate of a path is half of that.
Constraints are imposed at grid points only, so every discretized infimum is
a lower bound for its continuous counterpart.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import special

from .fbm_core import TimeGrid, _as_h, cholesky_with_jitter, gram_matrix, SynthesisError
from .qp import SolverError, solve_dual

__all__ = [
    "GramMatrix",
    "RatePath",
    "ConstraintSet",
    "SolverError",
    "build_gram",
    "min_norm",
    "theta",
    "j_delta",
    "single_constraint_rate",
    "phi",
    "phi_prime_at_one",
    "check_proposition_3_3",
    "rkhs_norm",
    "unit_grid",
]

KINDS = ("B", "A_delta", "A_bar", "D_delta", "D_delta_eps")


@dataclass(frozen=True)
class GramMatrix:
    grid: TimeGrid
    entries: np.ndarray
    chol: np.ndarray
    jitter: float = 0.0

    def solve(self, z):
        return scipy.linalg.cho_solve((self.chol, True), z)


@dataclass
class RatePath:
    grid: TimeGrid
    z: np.ndarray
    value: float
    dual: np.ndarray
    kkt_residual: float
    duality_gap: float
    constrained: np.ndarray  # grid indices carrying the multipliers in ``dual``
    kind: str = "B"
    h: float = 0.5
    params: dict = field(default_factory=dict)
    iterations: int = 0
    activation_time: float | None = None
    horizon_flag: bool = False

    def multipliers_on_grid(self) -> np.ndarray:
        out = np.zeros(len(self.grid))
        out[self.constrained] = self.dual
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "h": self.h,
            "params": self.params,
            "value": self.value,
            "kkt_residual": self.kkt_residual,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "activation_time": self.activation_time,
            "horizon_flag": self.horizon_flag,
            "grid": self.grid.points.tolist(),
            "z": self.z.tolist(),
            "lambda": self.multipliers_on_grid().tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_rows(self):
        lam = self.multipliers_on_grid()
        yield ("t", "z", "lambda")
        for row in zip(self.grid.points, self.z, lam):
            yield tuple(repr(float(v)) for v in row)


@dataclass(frozen=True)
class ConstraintSet:
    """Which path set to minimize over.

    ``B``: z >= t on (0,1]. ``A_delta``: z <= delta + t on (0,1] and
    z >= delta + t at some grid point of (1, horizon]. ``A_bar``: z <= t on
    (0,1) with z(1) = 1. ``D_delta``: z >= t on (0,1), z(1) = 1 + delta.
    ``D_delta_eps``: z >= t - eps on (0,1), z(1) = 1 + delta - eps.
    """

    kind: str = "B"
    delta: float = 0.0
    eps: float = 0.0
    horizon: float = 3.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint set {self.kind!r}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not (0 <= self.eps < 1):
            raise ValueError("eps must lie in [0, 1)")
        if self.horizon <= 1:
            raise ValueError("horizon must exceed 1")


def unit_grid(n: int, horizon: float = 1.0) -> TimeGrid:
    """Points k/n for k = 1..round(n*horizon)."""
    m = int(round(n * horizon))
    return TimeGrid(np.arange(1, m + 1) / n, 1.0 / n, True)


def build_gram(h, grid: TimeGrid) -> GramMatrix:
    pts = grid.points
    if pts[0] <= 0:
        raise ValueError("Gram grid must exclude t = 0")
    g = gram_matrix(h, pts)
    chol, jitter = cholesky_with_jitter(g)
    return GramMatrix(grid, g, chol, jitter)


def rkhs_norm(h, grid: TimeGrid, z) -> float:
    """sqrt(z' G^-1 z) on the given grid."""
    z = np.asarray(z, dtype=float)
    if z.shape != (len(grid),):
        raise ValueError("z must have one value per grid point")
    gm = build_gram(h, grid)
    w = scipy.linalg.solve_triangular(gm.chol, z, lower=True)
    return float(np.sqrt(w @ w))


def _solve_on(G, grid, K, sign, b, free, tol, lam0=None, max_iter=50_000):
    """Solve one coordinate-constrained problem; returns (sol, z on grid)."""
    S = sign
    Q = S[:, None] * G[np.ix_(K, K)] * S[None, :]
    sol = solve_dual(Q, b, free, tol=tol, lam0=lam0, max_iter=max_iter)
    z = G[:, K] @ (S * sol.lam)
    return sol, z


def _make_path(grid, z, sol, K, kind, h, params, **kw):
    return RatePath(
        grid=grid,
        z=z,
        value=sol.value,
        dual=sol.lam,
        kkt_residual=sol.kkt_residual,
        duality_gap=sol.duality_gap,
        constrained=np.asarray(K),
        kind=kind,
        h=h,
        params=params,
        iterations=sol.iterations,
        **kw,
    )


def min_norm(h, cset: ConstraintSet, n: int = 256, tol: float = 1e-8, max_iter: int = 50_000) -> RatePath:
    """Minimize half the squared RKHS norm over the discretized set ``cset``.

    The step is 1/n. For ``A_delta`` the existence clause is handled by
    enumerating activation points t_j in (1, horizon]; candidates are visited
    in order of the single-point lower bound (t_j+delta)^2 / (2 t_j^2H) and
    skipped once that bound exceeds the best value found.
    """
    h = _as_h(h)
    if n < 8:
        raise ValueError("need n >= 8")
    if tol <= 0:
        raise ValueError("tol must be positive")
    d, eps = cset.delta, cset.eps
    params = {"delta": d, "eps": eps, "horizon": cset.horizon, "n": n, "tol": tol}
    kind = cset.kind

    if kind != "A_delta":
        grid = unit_grid(n)
        t = grid.points
        G = gram_matrix(h, t)
        K = np.arange(n)
        sign = np.ones(n)
        free = np.zeros(n, dtype=bool)
        if kind == "B":
            b = t.copy()
        elif kind == "D_delta":
            b = t.copy()
            b[-1] = 1.0 + d
            free[-1] = True
        elif kind == "D_delta_eps":
            b = t - eps
            b[-1] = 1.0 + d - eps
            free[-1] = True
        else:  # A_bar
            sign = -np.ones(n)
            b = -t.copy()
            sign[-1] = 1.0
            b[-1] = 1.0
            free[-1] = True
        sol, z = _solve_on(G, grid, K, sign, b, free, tol, max_iter=max_iter)
        return _make_path(grid, z, sol, K, kind, h, params)

    grid = unit_grid(n, cset.horizon)
    t = grid.points
    G = gram_matrix(h, t)
    cand = np.arange(n, t.size)
    if cand.size == 0:
        raise ValueError("horizon leaves no activation points beyond t = 1")
    bound = (t[cand] + d) ** 2 / (2.0 * t[cand] ** (2 * h))
    order = np.argsort(bound, kind="stable")
    sign = np.concatenate([-np.ones(n), [1.0]])
    free = np.zeros(n + 1, dtype=bool)
    best = None
    lam0 = None
    for j in cand[order]:
        lb = (t[j] + d) ** 2 / (2.0 * t[j] ** (2 * h))
        if best is not None and lb >= best[0].value - tol:
            break
        K = np.concatenate([np.arange(n), [j]])
        b = np.concatenate([-(d + t[:n]), [d + t[j]]])
        sol, z = _solve_on(G, grid, K, sign, b, free, tol, lam0=lam0, max_iter=max_iter)
        lam0 = sol.lam
        if best is None or sol.value < best[0].value:
            best = (sol, z, K, j)
    sol, z, K, j = best
    flag = bool(t[j] >= t[-1] - 1.0 / n - 1e-12)
    return _make_path(grid, z, sol, K, kind, h, params, activation_time=float(t[j]), horizon_flag=flag)


def theta(h, n: int = 256, tol: float = 1e-8) -> RatePath:
    """Busy-period decay rate: the discretized infimum over paths above the diagonal."""
    return min_norm(h, ConstraintSet("B"), n=n, tol=tol)


def j_delta(h, delta: float, n: int = 256, horizon: float = 3.0, tol: float = 1e-8) -> float:
    """Decay rate J(delta) <= 0. Uses the terminal-equality reduction for
    delta <= 1/H - 1 and the existence-clause formulation beyond."""
    h = _as_h(h)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta <= 1.0 / h - 1.0:
        return -min_norm(h, ConstraintSet("D_delta", delta=delta), n=n, tol=tol).value
    return -min_norm(h, ConstraintSet("A_delta", delta=delta, horizon=horizon), n=n, tol=tol).value


def single_constraint_rate(h, delta: float) -> float:
    """-inf_{s>=1} (s+delta)^2 / (2 s^2H)."""
    h = _as_h(h)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta > 1.0 / h - 1.0:
        return -0.5 * (delta / (1.0 - h)) ** (2 - 2 * h) * (1.0 / h) ** (2 * h)
    return -0.5 * (1.0 + delta) ** 2


def phi(h: float) -> float:
    """Upper-bound factor phi(H) for 1/2 < H < 1, so that theta <= phi(H)/2.

    Written with (2-2H) Gamma(2-2H) = Gamma(3-2H) to stay finite at H -> 1.
    """
    h = float(h)
    if not (0.5 < h < 1.0):
        raise ValueError("phi is defined for 1/2 < H < 1")
    return float(
        special.gamma(1.5 - h)
        / (h * (2 * h - 1) * special.gamma(h - 0.5) * special.gamma(3 - 2 * h))
    )


def phi_prime_at_one() -> float:
    """-3 - 2 psi(1/2) - 2 gamma_EM, which equals -3 + 4 log 2."""
    return float(-3.0 - 2.0 * special.digamma(0.5) - 2.0 * np.euler_gamma)


def check_proposition_3_3(h, n: int = 256, horizon: float = 3.0, tol: float = 1e-8) -> dict:
    """Compare the discretized infima over A (delta = 0), A-bar and B."""
    h = _as_h(h)
    a = min_norm(h, ConstraintSet("A_delta", delta=0.0, horizon=horizon), n=n, tol=tol)
    abar = min_norm(h, ConstraintSet("A_bar"), n=n, tol=tol)
    b = min_norm(h, ConstraintSet("B"), n=n, tol=tol)
    vals = {"A": a.value, "A_bar": abar.value, "B": b.value}
    diffs = {}
    for p, q in (("A", "A_bar"), ("A", "B"), ("A_bar", "B")):
        diffs[f"{p}~{q}"] = abs(vals[p] - vals[q]) / min(vals[p], vals[q])
    return {
        "h": h,
        "n": n,
        "horizon": horizon,
        "values": vals,
        "relative_differences": diffs,
        "max_relative_difference": max(diffs.values()),
        "activation_time": a.activation_time,
        "horizon_flag": a.horizon_flag,
        "kkt_residuals": {"A": a.kkt_residual, "A_bar": abar.kkt_residual, "B": b.kkt_residual},
    }
