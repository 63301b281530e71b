"""Exact fractional Gaussian noise / fBm synthesis and covariance primitives.

Uniform grids starting at zero use circulant embedding of the fGn
autocovariance (Davies-Harte); anything else falls back to a dense Cholesky
factorization of the fBm Gram matrix.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.linalg

__all__ = [
    "HurstParam",
    "TimeGrid",
    "FbmPath",
    "Seed",
    "SynthesisError",
    "fbm_covariance",
    "fgn_autocovariance",
    "gram_matrix",
    "cholesky_with_jitter",
    "sample_fgn",
    "sample_fgn_batch",
    "sample_path",
]

JITTER_FACTOR = 1e-12


class SynthesisError(RuntimeError):
    """Raised when no exact factorization of the covariance is available."""


@dataclass(frozen=True)
class HurstParam:
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (0.0 < h < 1.0):
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)

    def __float__(self):
        return self.h


def _as_h(h) -> float:
    return h.h if isinstance(h, HurstParam) else HurstParam(h).h


@dataclass(frozen=True)
class TimeGrid:
    """Ordered time axis. ``step`` is only meaningful when ``uniform``."""

    points: np.ndarray
    step: float = 0.0
    uniform: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).copy()
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid needs at least one point")
        if pts[0] < 0:
            raise ValueError("grid must start at a time >= 0")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.uniform and pts.size > 1 and not self.step > 0:
            raise ValueError("uniform grid needs step > 0")

    @classmethod
    def uniform_grid(cls, n: int, step: float, start: float = 0.0) -> "TimeGrid":
        """Grid ``start + k*step`` for ``k = 0..n``."""
        if n < 0 or step <= 0:
            raise ValueError("need n >= 0 and step > 0")
        pts = start + step * np.arange(n + 1)
        return cls(pts, float(step), True)

    @classmethod
    def from_points(cls, points) -> "TimeGrid":
        return cls(np.asarray(points, dtype=float), 0.0, False)

    def __len__(self):
        return self.points.size

    def scaled(self, alpha: float) -> "TimeGrid":
        return TimeGrid(self.points * alpha, self.step * alpha, self.uniform)


@dataclass(frozen=True)
class Seed:
    """Counter-style seed: ``(seed, stream)`` fully determines the output."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = int(getattr(self, name))
            if not (0 <= v < 2**64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer")
            object.__setattr__(self, name, v)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))

    def child(self, stream: int) -> "Seed":
        return Seed(self.seed, stream)


@dataclass(frozen=True)
class FbmPath:
    grid: TimeGrid
    values: np.ndarray
    jitter: float = 0.0
    method: str = field(default="circulant")

    def __post_init__(self):
        if len(self.values) != len(self.grid):
            raise ValueError("values and grid differ in length")


def fbm_covariance(h, s, t):
    """Cov(A(s), A(t)) = (|s|^2H + |t|^2H - |t-s|^2H) / 2. Broadcasts."""
    h2 = 2.0 * _as_h(h)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)
    return out if out.ndim else float(out)


def fgn_autocovariance(h, k, step: float = 1.0):
    """Autocovariance of increments A(j+k)-A(j+k-1) vs A(j)-A(j-1) at lag ``k``."""
    h2 = 2.0 * _as_h(h)
    k = np.abs(np.asarray(k, dtype=float))
    out = 0.5 * (np.abs(k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2) * step**h2
    return out if out.ndim else float(out)


def gram_matrix(h, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return fbm_covariance(h, points[:, None], points[None, :])


def cholesky_with_jitter(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor; on failure retry once with 1e-12 * max diagonal."""
    try:
        return scipy.linalg.cholesky(mat, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_FACTOR * float(np.max(np.diag(mat)))
    try:
        low = scipy.linalg.cholesky(mat + jitter * np.eye(len(mat)), lower=True)
    except np.linalg.LinAlgError as exc:
        raise SynthesisError(
            f"covariance not factorizable even with jitter {jitter:.3g}"
        ) from exc
    return low, jitter


@functools.lru_cache(maxsize=16)
def _circulant_sqrt_eigs(h: float, n: int) -> np.ndarray | None:
    """sqrt(eigenvalues / 2m) of the size-2n circulant embedding, or None if
    the embedding is not nonnegative definite."""
    r = fgn_autocovariance(h, np.arange(n + 1))
    row = np.concatenate([r, r[-2:0:-1]])
    eigs = scipy.fft.fft(row).real
    floor = -1e-10 * np.max(np.abs(eigs))
    if np.min(eigs) < floor:
        return None
    eigs = np.clip(eigs, 0.0, None)
    out = np.sqrt(eigs / row.size)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=4)
def _toeplitz_factor(h: float, n: int) -> tuple[np.ndarray, float]:
    cov = scipy.linalg.toeplitz(fgn_autocovariance(h, np.arange(n)))
    return cholesky_with_jitter(cov)


def sample_fgn_batch(h, n: int, step: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent unit-step fGn rows of length ``n``, scaled to ``step``.

    Each complex circulant draw yields two independent rows (real and
    imaginary parts), so ``ceil(count/2)`` FFTs are performed.
    """
    h = _as_h(h)
    if n < 1 or step <= 0:
        raise ValueError("need n >= 1 and step > 0")
    scale = step**h
    if n == 1:
        return rng.standard_normal((count, 1)) * scale
    lam = _circulant_sqrt_eigs(h, n)
    if lam is None:
        low, _ = _toeplitz_factor(h, n)
        return (rng.standard_normal((count, n)) @ low.T) * scale
    m = lam.size
    pairs = (count + 1) // 2
    w = rng.standard_normal((pairs, 2, m))
    z = scipy.fft.fft((w[:, 0] + 1j * w[:, 1]) * lam, axis=-1)[:, :n]
    out = np.empty((2 * pairs, n))
    out[0::2] = z.real
    out[1::2] = z.imag
    out *= scale
    return out[:count]


def sample_fgn(h, n: int, step: float, seed: Seed) -> np.ndarray:
    """n exact fGn increments on a grid with spacing ``step``."""
    return sample_fgn_batch(h, n, step, 1, seed.generator())[0]


def sample_path(h, grid: TimeGrid, seed: Seed) -> FbmPath:
    h = _as_h(h)
    pts = grid.points
    if pts.size == 1:
        if pts[0] == 0:
            return FbmPath(grid, np.zeros(1), method="trivial")
        return FbmPath(grid, seed.generator().standard_normal(1) * pts[0] ** h, method="dense")
    if grid.uniform and pts[0] == 0:
        inc = sample_fgn(h, pts.size - 1, grid.step, seed)
        return FbmPath(grid, np.concatenate([[0.0], np.cumsum(inc)]))
    # dense route; a zero time point carries no variance
    pos = pts > 0
    low, jitter = cholesky_with_jitter(gram_matrix(h, pts[pos]))
    values = np.zeros(pts.size)
    values[pos] = low @ seed.generator().standard_normal(int(pos.sum()))
    return FbmPath(grid, values, jitter=jitter, method="dense")
