"""Binary-classification datasets: LIBSVM text I/O, scaling, synthesis, sharding."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from ..core import RngStream


class LibsvmFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class Dataset:
    """Dense ``n x d`` feature matrix with labels in {-1, +1}.

    Absent LIBSVM entries are zeros of the dense matrix.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ValueError("features must be n x d and labels length n")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


def _parse_label(tok: str, label_map, lineno: int) -> float:
    try:
        raw = float(tok)
    except ValueError:
        raise LibsvmFormatError(lineno, f"nonnumeric label {tok!r}") from None
    if label_map is not None:
        for key, val in label_map.items():
            if float(key) == raw:
                return float(val)
        raise LibsvmFormatError(lineno, f"label {tok!r} not in label map")
    if raw in (-1.0, 1.0):
        return raw
    raise LibsvmFormatError(lineno, f"label {tok!r} is not -1/+1 and no label map was given")


def parse_libsvm(text, label_map: dict | None = None, dim: int | None = None) -> Dataset:
    """Parse LIBSVM sparse text ``<label> <idx>:<val> ...`` (1-based indices).

    ``text`` is a string or a text stream. Blank lines and ``#`` comments are
    skipped. ``dim`` overrides the inferred dimension (max index seen).
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    labels: list[float] = []
    rows: list[tuple[list[int], list[float]]] = []
    max_idx = 0
    for lineno, line in enumerate(text, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        labels.append(_parse_label(toks[0], label_map, lineno))
        idx, vals = [], []
        prev = 0
        for tok in toks[1:]:
            name, sep, val = tok.partition(":")
            if not sep or not name or not val:
                raise LibsvmFormatError(lineno, f"malformed token {tok!r}")
            try:
                j = int(name)
            except ValueError:
                raise LibsvmFormatError(lineno, f"nonnumeric index {name!r}") from None
            try:
                v = float(val)
            except ValueError:
                raise LibsvmFormatError(lineno, f"nonnumeric value {val!r}") from None
            if j < 1:
                raise LibsvmFormatError(lineno, f"index {j} is not 1-based")
            if j == prev:
                raise LibsvmFormatError(lineno, f"duplicate index {j}")
            if j < prev:
                raise LibsvmFormatError(lineno, f"index {j} out of order")
            prev = j
            idx.append(j)
            vals.append(v)
        max_idx = max(max_idx, prev)
        rows.append((idx, vals))
    if not rows:
        raise ValueError("no data rows")
    d = max_idx if dim is None else int(dim)
    if d < max_idx:
        raise ValueError(f"dimension override {d} is smaller than max index {max_idx}")
    A = np.zeros((len(rows), max(d, 1)))
    for r, (idx, vals) in enumerate(rows):
        A[r, np.asarray(idx, dtype=int) - 1] = vals
    return Dataset(A, np.asarray(labels))


def load_libsvm(path, label_map=None, dim=None) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, label_map, dim)


def format_libsvm(ds: Dataset) -> str:
    """Serialize nonzero entries with round-trip (``repr``) precision."""
    out = []
    for row, b in zip(ds.features, ds.labels):
        parts = ["+1" if b > 0 else "-1"]
        parts += [f"{j + 1}:{float(row[j])!r}" for j in np.flatnonzero(row)]
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def save_libsvm(ds: Dataset, path) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_libsvm(ds))


def scale_features(ds: Dataset) -> Dataset:
    """Affine per-column map of ``[min_j, max_j]`` onto ``[-1, 1]``; constant columns become 0."""
    A = ds.features
    lo = A.min(axis=0)
    hi = A.max(axis=0)
    span = hi - lo
    out = np.zeros_like(A)
    ok = span > 0
    out[:, ok] = 2.0 * (A[:, ok] - lo[ok]) / span[ok] - 1.0
    np.clip(out, -1.0, 1.0, out=out)
    return Dataset(out, ds.labels.copy())


def generate_synthetic(n: int, d: int, rng: RngStream) -> Dataset:
    """Standard-normal features, labels uniform on {-1, +1}."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    A = rng.normal(n * d).reshape(n, d)
    b = 2.0 * rng.integers(0, 2, size=n) - 1.0
    return Dataset(A, b)


def shard(ds: Dataset | int, n_clients: int) -> list[np.ndarray]:
    """Contiguous row blocks whose sizes differ by at most one (larger blocks first)."""
    n = ds if isinstance(ds, int) else ds.n
    if n_clients < 1:
        raise ValueError("need at least one client")
    if n_clients > n:
        raise ValueError(f"{n_clients} clients but only {n} rows")
    return np.array_split(np.arange(n), n_clients)
