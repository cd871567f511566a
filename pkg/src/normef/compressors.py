"""Contractive sparsifiers: top-k, rand-k and the identity map.

Every compressor here keeps a subset of coordinates unchanged and zeros the
rest, so ``E||C(v) - v||^2 <= (1 - k/d) ||v||^2`` holds with ``alpha = k/d``
(deterministically for top-k). A compressor is described by a small frozen
dataclass; :meth:`select` returns the kept coordinates.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .core import RngStream


class CompressorError(ValueError):
    pass


@dataclass(frozen=True)
class TopK:
    """Keep the ``k`` largest-magnitude coordinates; ties go to the lower index."""

    k: int
    value_bits: int = 32
    randomized = False

    def __post_init__(self):
        if self.k < 1:
            raise CompressorError(f"top-k needs k >= 1, got {self.k}")

    def select(self, v: np.ndarray, rng: RngStream | None = None) -> np.ndarray:
        d = v.shape[0]
        _check_k(self.k, d)
        if self.k == d:
            return np.arange(d)
        if self.k == 1:
            # argmax returns the first maximizer
            return np.array([int(np.argmax(np.abs(v)))])
        order = np.argsort(-np.abs(v), kind="stable")
        return np.sort(order[: self.k])

    def alpha(self, d: int) -> float:
        _check_k(self.k, d)
        return self.k / d

    def payload_bits(self, d: int) -> int:
        return self.k * (self.value_bits + _index_bits(d))

    def __str__(self):
        return f"top-{self.k}"


@dataclass(frozen=True)
class RandK:
    """Keep ``k`` coordinates drawn uniformly without replacement, unscaled."""

    k: int
    value_bits: int = 32
    randomized = True

    def __post_init__(self):
        if self.k < 1:
            raise CompressorError(f"rand-k needs k >= 1, got {self.k}")

    def select(self, v: np.ndarray, rng: RngStream | None = None) -> np.ndarray:
        d = v.shape[0]
        _check_k(self.k, d)
        if self.k == d:
            return np.arange(d)
        if rng is None:
            raise CompressorError("rand-k needs a random stream")
        return np.sort(rng.choice(d, self.k))

    def alpha(self, d: int) -> float:
        _check_k(self.k, d)
        return self.k / d

    def payload_bits(self, d: int) -> int:
        return self.k * (self.value_bits + _index_bits(d))

    def __str__(self):
        return f"rand-{self.k}"


@dataclass(frozen=True)
class Identity:
    value_bits: int = 32
    randomized = False

    def select(self, v: np.ndarray, rng: RngStream | None = None) -> np.ndarray:
        return np.arange(v.shape[0])

    def alpha(self, d: int) -> float:
        return 1.0

    def payload_bits(self, d: int) -> int:
        return d * self.value_bits

    def __str__(self):
        return "identity"


CompressorKind = TopK | RandK | Identity


def _check_k(k: int, d: int) -> None:
    if d < 1:
        raise CompressorError("dimension must be positive")
    if k > d:
        raise CompressorError(f"k={k} exceeds dimension d={d}")


def _index_bits(d: int) -> int:
    return math.ceil(math.log2(d)) if d > 1 else 0


def compress(kind: CompressorKind, v: np.ndarray, rng: RngStream | None = None) -> np.ndarray:
    """Apply ``kind`` to ``v`` and return the dense compressed vector."""
    idx = kind.select(v, rng)
    out = np.zeros_like(v)
    out[idx] = v[idx]
    return out


def alpha_of(kind: CompressorKind, d: int) -> float:
    return kind.alpha(d)


def payload_bits(kind: CompressorKind, d: int) -> int:
    return kind.payload_bits(d)


_SPEC = re.compile(r"^(top|rand)[-_]?(\d+)$")


def parse_compressor(text: str, value_bits: int = 32) -> CompressorKind:
    """Parse ``"top-1"``, ``"rand-3"`` or ``"identity"``."""
    s = text.strip().lower()
    if s in ("identity", "none", "id"):
        return Identity(value_bits)
    m = _SPEC.match(s)
    if not m:
        raise CompressorError(f"unknown compressor {text!r}")
    cls = TopK if m.group(1) == "top" else RandK
    return cls(int(m.group(2)), value_bits)
