"""Dual solver for min-norm problems with coordinate constraints.

The primal ``min 1/2 z' G^-1 z`` subject to ``sign_i * z[k_i] >= b_i`` (or ``=``)
has the dual ``min_lam 1/2 lam' Q lam - b' lam`` over ``lam_i >= 0`` (free for
equalities), with ``Q = S G_KK S``. The primal optimum is recovered as
``z = G[:, K] S lam`` and the dual gradient ``Q lam - b`` is exactly the
constraint slack, so no inverse of G is ever formed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["SolverError", "DualSolution", "largest_eigenvalue", "certificate", "solve_dual"]


class SolverError(RuntimeError):
    """Iteration budget exhausted before the KKT certificate reached ``tol``."""

    def __init__(self, msg, gap=np.inf, kkt=np.inf):
        super().__init__(msg)
        self.gap = gap
        self.kkt = kkt


@dataclass
class DualSolution:
    lam: np.ndarray
    slack: np.ndarray
    value: float
    dual_value: float
    kkt_residual: float
    duality_gap: float
    iterations: int
    polished: bool


def largest_eigenvalue(Q: np.ndarray, iters: int = 1000, rtol: float = 1e-9) -> float:
    """Power iteration on a symmetric PSD matrix."""
    v = np.ones(Q.shape[0]) / np.sqrt(Q.shape[0])
    est = 0.0
    for _ in range(iters):
        w = Q @ v
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(new - est) <= rtol * abs(new):
            return new
        est = new
    return est


def certificate(Q, b, lam, free):
    """(slack, primal value, dual value, kkt residual, gap) at ``lam``."""
    Ql = Q @ lam
    slack = Ql - b
    quad = 0.5 * float(lam @ Ql)
    ineq = ~free
    viol = np.concatenate([np.maximum(-slack[ineq], 0.0), np.abs(slack[free])])
    comp = np.abs(lam[ineq] * slack[ineq])
    neg = np.maximum(-lam[ineq], 0.0)
    kkt = float(max(viol.max(initial=0.0), comp.max(initial=0.0), neg.max(initial=0.0)))
    dual = float(b @ lam) - quad
    return slack, quad, dual, kkt, quad - dual


def _objective(Ql, lam, b):
    return 0.5 * float(lam @ Ql) - float(b @ lam)


def _active_set_polish(Q, b, lam, free, scale, max_rounds=60):
    """Primal-dual active-set iterations started from ``lam``.

    Returns the final iterate, or None if the active set cycles or the
    reduced system cannot be solved.
    """
    n = lam.size
    seen = set()
    for _ in range(max_rounds):
        g = Q @ lam - b
        active = free | (lam - scale * g > 0)
        key = active.tobytes()
        if key in seen:
            return lam
        seen.add(key)
        new = np.zeros(n)
        idx = np.flatnonzero(active)
        if idx.size:
            try:
                cf = scipy.linalg.cho_factor(Q[np.ix_(idx, idx)])
                new[idx] = scipy.linalg.cho_solve(cf, b[idx])
            except (np.linalg.LinAlgError, ValueError):
                sol, *_ = np.linalg.lstsq(Q[np.ix_(idx, idx)], b[idx], rcond=None)
                new[idx] = sol
        if not np.all(np.isfinite(new)):
            return None
        lam = new
    return lam


def solve_dual(
    Q: np.ndarray,
    b: np.ndarray,
    free: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 50_000,
    lam0: np.ndarray | None = None,
    polish_every: int = 50,
) -> DualSolution:
    """Accelerated projected gradient (step 1/L, adaptive restart) on the dual,
    with periodic active-set polishing. Converged when the KKT residual is
    below ``tol`` and the duality gap below ``tol * (1 + |value|)``."""
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    m = b.size
    free = np.zeros(m, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    ineq = ~free

    def project(v):
        v = v.copy()
        v[ineq] = np.maximum(v[ineq], 0.0)
        return v

    def converged(lam):
        slack, val, dual, kkt, gap = certificate(Q, b, lam, free)
        ok = kkt <= tol and gap <= tol * (1.0 + abs(val))
        return ok, (slack, val, dual, kkt, gap)

    def result(lam, cert, it, polished):
        slack, val, dual, kkt, gap = cert
        return DualSolution(lam, slack, val, dual, kkt, gap, it, polished)

    L = 1.05 * largest_eigenvalue(Q)
    if L <= 0:
        raise SolverError("degenerate Gram block")
    lam = project(np.zeros(m) if lam0 is None else np.asarray(lam0, dtype=float))

    ok, cert = converged(lam)
    if ok:
        return result(lam, cert, 0, False)

    Ql = Q @ lam
    f = _objective(Ql, lam, b)
    y, Qy, t = lam.copy(), Ql.copy(), 1.0
    best = (cert[3], cert[4])
    for it in range(1, max_iter + 1):
        new = project(y - (Qy - b) / L)
        Qn = Q @ new
        fn = _objective(Qn, new, b)
        stalled = False
        if fn > f:
            # function-value restart: drop momentum
            stalled = t == 1.0
            y, Qy, t = lam.copy(), Ql.copy(), 1.0
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_new
            y = new + beta * (new - lam)
            Qy = Qn + beta * (Qn - Ql)
            lam, Ql, f, t = new, Qn, fn, t_new

        if stalled or it % polish_every == 0:
            ok, cert = converged(lam)
            if ok:
                return result(lam, cert, it, False)
            best = min(best, (cert[3], cert[4]))
            cand = _active_set_polish(Q, b, lam, free, 1.0 / L)
            if cand is not None:
                ok, pcert = converged(cand)
                if ok:
                    return result(cand, pcert, it, True)
                pc = project(cand)
                Qp = Q @ pc
                fp = _objective(Qp, pc, b)
                if fp < f:
                    lam, Ql, f = pc, Qp, fp
                    y, Qy, t = lam.copy(), Ql.copy(), 1.0
    raise SolverError(
        f"dual solver did not converge in {max_iter} iterations "
        f"(kkt {best[0]:.3g}, gap {best[1]:.3g})",
        gap=best[1],
        kkt=best[0],
    )
