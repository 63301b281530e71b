"""Simulation horizon that keeps the truncation error gamma(x,t)/P(M>x) below eps."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .fbm_core import _as_h

__all__ = ["HorizonRequest", "HorizonResponse", "horizon", "horizon_with_computed_theta"]

NOTE = "continuous-time bound; no discrete-time correction applied"


@dataclass(frozen=True)
class HorizonRequest:
    h: float
    theta: float
    x: float
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "h", _as_h(self.h))
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.x > 0:
            raise ValueError("level x must be positive")
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0, 1)")


@dataclass(frozen=True)
class HorizonResponse:
    t: float
    t_star: float
    numerator_rate: float
    denominator_rate: float
    theta: float
    note: str = NOTE
    theta_certificate: dict | None = None

    def to_dict(self):
        return asdict(self)


def horizon(req: HorizonRequest) -> HorizonResponse:
    """t = (-log(eps)/theta + rate/theta)^(1/(2-2H)), where
    rate = (x/(1-H))^(2-2H) (1/H)^(2H) / 2 is the Gaussian-tail exponent of
    the lower bound on P(M > x), attained at t* = xH/(1-H)."""
    h, th, x, eps = req.h, req.theta, req.x, req.eps
    e = 2.0 - 2.0 * h
    denom = 0.5 * (x / (1.0 - h)) ** e * (1.0 / h) ** (2 * h)
    inner = -math.log(eps) / th + denom / th
    return HorizonResponse(
        t=inner ** (1.0 / e),
        t_star=x * h / (1.0 - h),
        numerator_rate=th,
        denominator_rate=denom,
        theta=th,
    )


def horizon_with_computed_theta(h, x: float, eps: float, n: int = 256, tol: float = 1e-8) -> HorizonResponse:
    from .rate_variational import theta

    rp = theta(h, n=n, tol=tol)
    resp = horizon(HorizonRequest(h, rp.value, x, eps))
    cert = {
        "n": n,
        "tol": tol,
        "value": rp.value,
        "kkt_residual": rp.kkt_residual,
        "duality_gap": rp.duality_gap,
    }
    return HorizonResponse(**{**resp.to_dict(), "theta_certificate": cert})
