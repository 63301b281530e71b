"""Short-range-dependent input: cumulant functions, their Legendre transforms,
and the decay rate K(x) = -inf_{s>=1} s I((x+s)/s)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CumulantModel",
    "RateFunction",
    "KRate",
    "DomainError",
    "golden_section_min",
    "cumulant",
    "legendre",
    "k_rate",
    "di_decay_rate",
    "load_model",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
EXPAND_LIMIT = 1e8


class DomainError(ValueError):
    pass


def golden_section_min(f, a: float, b: float, xtol: float = 1e-10, max_iter: int = 500):
    """Minimize a unimodal ``f`` on [a, b]; returns (argmin, value).

    Infinite values are allowed as long as they form a prefix of the
    interval (then the left end moves right).
    """
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd and not (math.isinf(fc) and math.isinf(fd)):
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    cands = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    val, x = min(cands)
    return x, val


@dataclass(frozen=True)
class CumulantModel:
    """A cumulant function with its domain (lo, hi) and range of rates.

    Built-in kinds and parameters:
      gaussian_iid          mu, sigma2
      markov_fluid_2state   a (off->on), b (on->off), r (peak rate)
      compound_poisson_exp  lam (arrival rate), mu_j (1 / mean job size)
      tabulated             s (grid), values (Lambda on the grid)
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        k = self.kind
        if k == "gaussian_iid":
            _need(p, "mu", "sigma2")
            if p["sigma2"] <= 0:
                raise ValueError("sigma2 must be positive")
        elif k == "markov_fluid_2state":
            _need(p, "a", "b", "r")
            if min(p["a"], p["b"], p["r"]) <= 0:
                raise ValueError("rates must be positive")
        elif k == "compound_poisson_exp":
            _need(p, "lam", "mu_j")
            if min(p["lam"], p["mu_j"]) <= 0:
                raise ValueError("rates must be positive")
        elif k == "tabulated":
            _need(p, "s", "values")
            s = np.asarray(p["s"], dtype=float)
            v = np.asarray(p["values"], dtype=float)
            if s.shape != v.shape or s.size < 3 or np.any(np.diff(s) <= 0):
                raise ValueError("tabulated model needs >= 3 increasing s values")
            if not (s[0] <= 0 <= s[-1]):
                raise ValueError("tabulated domain must contain 0")
        else:
            raise ValueError(f"unknown model kind {k!r}")

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "compound_poisson_exp":
            return (-math.inf, self.params["mu_j"])
        if self.kind == "tabulated":
            s = self.params["s"]
            return (float(s[0]), float(s[-1]))
        return (-math.inf, math.inf)

    @property
    def mean_rate(self) -> float:
        p = self.params
        if self.kind == "gaussian_iid":
            return float(p["mu"])
        if self.kind == "markov_fluid_2state":
            return p["r"] * p["a"] / (p["a"] + p["b"])
        if self.kind == "compound_poisson_exp":
            return p["lam"] / p["mu_j"]
        h = 1e-6
        return (self.cumulant(h) - self.cumulant(-h)) / (2 * h) if self.domain[0] < 0 else (
            (self.cumulant(h) - self.cumulant(0.0)) / h
        )

    @property
    def stable(self) -> bool:
        return self.mean_rate < 1.0

    @property
    def rate_range(self) -> tuple[float, float]:
        """Closure of the set of slopes of Lambda; I is infinite outside it."""
        if self.kind == "gaussian_iid":
            return (-math.inf, math.inf)
        if self.kind == "markov_fluid_2state":
            return (0.0, float(self.params["r"]))
        if self.kind == "compound_poisson_exp":
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    def cumulant(self, s: float) -> float:
        lo, hi = self.domain
        if not (lo <= s <= hi) or (self.kind == "compound_poisson_exp" and s >= hi):
            raise DomainError(f"s={s} outside the model domain {self.domain}")
        p = self.params
        if self.kind == "gaussian_iid":
            return p["mu"] * s + 0.5 * p["sigma2"] * s * s
        if self.kind == "markov_fluid_2state":
            a, b, r = p["a"], p["b"], p["r"]
            tr = -a - b + r * s
            det = -a * r * s
            return 0.5 * (tr + math.sqrt(tr * tr - 4.0 * det))
        if self.kind == "compound_poisson_exp":
            return p["lam"] * s / (p["mu_j"] - s)
        return float(np.interp(s, p["s"], p["values"]))

    def to_dict(self):
        params = {k: (list(v) if isinstance(v, (list, tuple, np.ndarray)) else v) for k, v in self.params.items()}
        return {"kind": self.kind, "params": params}


def _need(p, *keys):
    missing = [k for k in keys if k not in p]
    if missing:
        raise ValueError(f"missing model parameters: {missing}")


def cumulant(model: CumulantModel, s: float) -> float:
    return model.cumulant(s)


def _sup_concave(g, lo, hi, xtol=1e-10):
    """(argmax, max) of a concave ``g`` over (lo, hi), expanding a bracket
    from 0. If the supremum is only approached at infinity the value at the
    expansion limit is returned."""
    def clamp_right(x):
        return min(x, hi - (hi - 0.0) * 1e-12) if math.isfinite(hi) else x

    def clamp_left(x):
        return max(x, lo + (0.0 - lo) * 1e-12) if math.isfinite(lo) else x

    x0, f0 = 0.0, g(0.0)
    w = 1.0
    right = clamp_right(x0 + w)
    if g(right) > f0:
        a, m = x0, right
        while True:
            w *= 2.0
            nxt = clamp_right(m + w)
            if nxt <= m or g(nxt) <= g(m) or nxt > EXPAND_LIMIT:
                b = nxt
                break
            a, m = m, nxt
    else:
        left = clamp_left(x0 - w)
        if g(left) > f0:
            b, m = x0, left
            while True:
                w *= 2.0
                nxt = clamp_left(m - w)
                if nxt >= m or g(nxt) <= g(m) or nxt < -EXPAND_LIMIT:
                    a = nxt
                    break
                b, m = m, nxt
        else:
            a, b = left, right
    x, v = golden_section_min(lambda s: -g(s), a, b, xtol=xtol)
    return x, -v


class RateFunction:
    """Legendre transform I(a) = sup_s (s a - Lambda(s)) with a small cache."""

    def __init__(self, model: CumulantModel):
        self.model = model
        self._cache: dict[float, tuple[float, float]] = {}

    def argmax(self, a: float) -> tuple[float, float]:
        """(s*, I(a)); s* is nan when I(a) is infinite."""
        a = float(a)
        if a in self._cache:
            return self._cache[a]
        m = self.model
        lo_rate, hi_rate = m.rate_range
        if a > hi_rate or a < lo_rate:
            out = (math.nan, math.inf)
        else:
            lo, hi = m.domain

            def g(s):
                try:
                    return s * a - m.cumulant(s)
                except DomainError:
                    return -math.inf

            out = _sup_concave(g, lo, hi)
        self._cache[a] = out
        return out

    def __call__(self, a: float) -> float:
        return self.argmax(a)[1]


def legendre(model: CumulantModel, a: float) -> float:
    return RateFunction(model)(a)


@dataclass(frozen=True)
class KRate:
    x: float
    value: float
    s_star: float
    s_max: float
    flag: bool

    def row(self):
        return (self.x, self.value, self.s_star, int(self.flag))


def k_rate(model: CumulantModel, x: float, s_max: float | None = None, rate: RateFunction | None = None) -> KRate:
    """K(x) = -min_{1 <= s <= s_max} s I((x+s)/s).

    ``flag`` is set when the minimizer sits within 1% of ``s_max``, meaning
    the search horizon may cut off the true minimizer.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if not model.stable:
        raise ValueError(f"model mean rate {model.mean_rate} is not below the unit service rate")
    s_max = 10.0 * max(1.0, x) if s_max is None else float(s_max)
    if s_max < 1:
        raise ValueError("s_max must be >= 1")
    rf = rate or RateFunction(model)

    def obj(s):
        return s * rf((x + s) / s)

    if s_max == 1.0:
        s, v = 1.0, obj(1.0)
    else:
        s, v = golden_section_min(obj, 1.0, s_max)
    flag = bool(s >= s_max - 0.01 * (s_max - 1.0)) and s_max > 1.0
    return KRate(float(x), -float(v), float(s), s_max, flag)


def di_decay_rate(model: CumulantModel) -> float:
    """Decay rate of both convergence metrics: K(0) = -I(1)."""
    if not model.stable:
        raise ValueError(f"model mean rate {model.mean_rate} is not below the unit service rate")
    return -legendre(model, 1.0)


def load_model(path_or_text: str) -> CumulantModel:
    """Read a model from JSON (``{"kind":..., "params":{...}}``) or key=value lines."""
    text = path_or_text
    try:
        with open(path_or_text) as fh:
            text = fh.read()
    except (OSError, ValueError):
        pass
    text = text.strip()
    if text.startswith("{"):
        d = json.loads(text)
        return CumulantModel(d["kind"], dict(d.get("params", {})))
    kind = None
    params = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        k, _, v = line.partition("=")
        k, v = k.strip(), v.strip()
        if k == "kind":
            kind = v
        elif "," in v:
            params[k] = [float(u) for u in v.split(",")]
        else:
            params[k] = float(v)
    if kind is None:
        raise ValueError("model file needs a 'kind' entry")
    return CumulantModel(kind, params)
