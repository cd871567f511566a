"""Dense vector helpers and reproducible random streams.

Vectors are plain 1-D ``numpy.float64`` arrays. Every public routine in the
package returns fresh arrays, so callers may treat them as immutable.
"""
from __future__ import annotations

import numpy as np

_MAX_SEED = 2**64 - 1


class DimensionError(ValueError):
    """Raised when vector dimensions are empty or inconsistent."""


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Copy ``values`` into a finite float64 vector, optionally checking its length."""
    v = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if v.size == 0:
        raise DimensionError("vector must have at least one entry")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


def check_dim(v: np.ndarray, dim: int) -> None:
    if v.shape != (dim,):
        raise DimensionError(f"expected dimension {dim}, got shape {v.shape}")


def norm2(v: np.ndarray) -> float:
    """Euclidean norm."""
    return float(np.sqrt(np.dot(v, v)))


class RngStream:
    """Seeded counter-based random stream (Philox under a ``SeedSequence``).

    The stream for ``(seed, key)`` is fully determined by those two values,
    so children derived with :meth:`child` are reproducible regardless of
    the order in which they are created or drawn from. The underlying
    generator is built lazily; deriving a child costs nothing until it is
    drawn from.

    Gaussian draws use numpy's ziggurat transform of the Philox output;
    trajectories are reproducible for a fixed numpy release.
    """

    __slots__ = ("seed", "key", "_gen")

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed <= _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        self._gen: np.random.Generator | None = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def child(self, *key: int) -> "RngStream":
        """Independent stream addressed by a stable integer key."""
        return RngStream(self.seed, self.key + tuple(key))

    def uniform(self, n: int) -> np.ndarray:
        return self.generator.random(n)

    def normal(self, n: int) -> np.ndarray:
        return self.generator.standard_normal(n)

    def choice(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from ``range(n)``, uniformly."""
        return self.generator.choice(n, size=k, replace=False)

    def integers(self, low: int, high: int, size: int | None = None):
        return self.generator.integers(low, high, size=size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"


def seeded_rng(seed: int) -> RngStream:
    return RngStream(seed)


def sample_gaussian(rng: RngStream, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """``n`` independent draws from N(mean, std**2)."""
    if n < 1:
        raise DimensionError("cannot sample an empty vector")
    if std < 0:
        raise ValueError("std must be nonnegative")
    if std == 0:
        return np.full(n, float(mean))
    return mean + std * rng.normal(n)
