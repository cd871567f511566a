"""Per-iteration run metrics and their CSV form."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = ("k", "f", "grad_norm_sq", "min_grad_norm", "bits")


@dataclass(frozen=True)
class MetricRow:
    k: int
    f_value: float
    grad_norm_sq: float
    min_grad_norm: float
    bits_cumulative: int


@dataclass
class RunRecord:
    """Rows ``k = 0..K``: metrics at ``x^k`` and bits sent per client through round ``k``.

    ``x_final`` is the output iterate ``x^{K+1}``. ``trace`` holds optional
    per-round diagnostic arrays (see :func:`normef.algorithms.run`).
    """

    rows: list[MetricRow] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int | None = None
    x_final: np.ndarray | None = None
    trace: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        attr = {"f": "f_value", "bits": "bits_cumulative"}.get(name, name)
        return np.array([getattr(r, attr) for r in self.rows])

    @property
    def final_grad_norm_sq(self) -> float:
        return self.rows[-1].grad_norm_sq

    @property
    def min_grad_norm_sq(self) -> float:
        return self.rows[-1].min_grad_norm ** 2

    def __len__(self):
        return len(self.rows)


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for key, val in d.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.extend(_flatten(val, name + "."))
        else:
            out.append((name, val))
    return out


def format_csv(record: RunRecord, comments: bool = True) -> str:
    buf = io.StringIO()
    if comments:
        if record.seed is not None:
            buf.write(f"# seed = {record.seed}\n")
        for key, val in _flatten(record.config):
            buf.write(f"# {key} = {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in record.rows:
        w.writerow([r.k, f"{r.f_value:.17g}", f"{r.grad_norm_sq:.17g}",
                    f"{r.min_grad_norm:.17g}", r.bits_cumulative])
    return buf.getvalue()


def write_csv(record: RunRecord, path, comments: bool = True) -> None:
    """Write the header line and one row per iteration at 17 significant digits."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(record, comments))


def read_csv(path) -> list[MetricRow]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    return [MetricRow(int(k), float(f), float(g), float(m), int(b)) for k, f, g, m, b in reader]
