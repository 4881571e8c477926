"""Long-format CSV ingestion/emission, preprocessing steps and key=value config files.

CSV layout: header ``t,row,col,value``; ``t`` is a 1-based integer time index,
``row``/``col`` are labels (first-appearance order defines the matrix
layout), ``value`` is a decimal number.  Every ``(t, row, col)`` cell must
appear exactly once.
"""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .model import MatrixSeries

__all__ = [
    "HEADER",
    "load_series",
    "parse_series",
    "save_series",
    "format_series",
    "PreprocessStep",
    "preprocess",
    "parse_steps",
    "read_config",
    "parse_config",
]

HEADER = ("t", "row", "col", "value")
STEP_KINDS = ("diff", "logdiff", "pctfromlast", "seasonaldemean", "rownormalize", "demean")


def load_series(path) -> MatrixSeries:
    """Read a long-format CSV file."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8") from exc
    return parse_series(text, source=str(path))


def parse_series(text: str, source: str = "<string>") -> MatrixSeries:
    reader = csv.reader(_io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}: empty file") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise DataError(f"{source}: header must be exactly 't,row,col,value', got {','.join(header)!r}")
    cells: dict[tuple[int, str, str], float] = {}
    rows: dict[str, None] = {}
    cols: dict[str, None] = {}
    times: set[int] = set()
    for rec in reader:
        line = reader.line_num
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if len(rec) != 4:
            raise DataError(f"{source}: line {line}: expected 4 fields, got {len(rec)}")
        t_s, r, c, v_s = rec
        try:
            t = int(t_s.strip())
        except ValueError:
            raise DataError(f"{source}: line {line}: time index {t_s!r} is not an integer") from None
        if t < 1:
            raise DataError(f"{source}: line {line}: time index must be >= 1, got {t}")
        try:
            v = float(v_s.strip())
        except ValueError:
            raise DataError(f"{source}: line {line}: value {v_s!r} is not a number") from None
        if not math.isfinite(v):
            raise DataError(f"{source}: line {line}: value {v_s!r} is not finite")
        key = (t, r, c)
        if key in cells:
            raise DataError(f"{source}: line {line}: duplicate cell (t={t},row={r},col={c})")
        cells[key] = v
        rows.setdefault(r)
        cols.setdefault(c)
        times.add(t)
    if not cells:
        raise DataError(f"{source}: no data rows")
    t_sorted = sorted(times)
    for a, b in zip(t_sorted, t_sorted[1:]):
        if b != a + 1:
            raise DataError(f"{source}: missing time points between t={a} and t={b}")
    row_l, col_l = list(rows), list(cols)
    out = np.empty((len(t_sorted), len(row_l), len(col_l)))
    for k, t in enumerate(t_sorted):
        for i, r in enumerate(row_l):
            for j, c in enumerate(col_l):
                try:
                    out[k, i, j] = cells[(t, r, c)]
                except KeyError:
                    raise DataError(f"{source}: incomplete grid at (t={t},row={r},col={c})") from None
    return MatrixSeries(out, tuple(row_l), tuple(col_l))


def format_series(series: MatrixSeries, t_offset: int = 1) -> str:
    rows, cols = series.labels()
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    X = series.values
    for k in range(series.T):
        for i, r in enumerate(rows):
            for j, c in enumerate(cols):
                w.writerow((k + t_offset, r, c, format(float(X[k, i, j]), ".17g")))
    return buf.getvalue()


def save_series(series: MatrixSeries, path, t_offset: int = 1) -> None:
    """Write ``series`` with 17 significant digits (round-trips exactly)."""
    Path(path).write_text(format_series(series, t_offset), encoding="utf-8", newline="")


@dataclass(frozen=True)
class PreprocessStep:
    """One transformation.  ``applies_to`` restricts it to the named rows."""

    kind: str
    period: int | None = None
    applies_to: tuple[str, ...] | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in STEP_KINDS:
            raise ValueError(f"unknown preprocessing step {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "seasonaldemean":
            if self.period is None or self.period < 2:
                raise ValueError("SeasonalDemean needs period >= 2")
        if self.applies_to is not None:
            object.__setattr__(self, "applies_to", tuple(str(x) for x in self.applies_to))


def _row_mask(series: MatrixSeries, step: PreprocessStep) -> np.ndarray:
    rows, _ = series.labels()
    if step.applies_to is None:
        return np.ones(series.m, dtype=bool)
    unknown = set(step.applies_to) - set(rows)
    if unknown:
        raise DataError(f"{step.kind}: unknown row labels {sorted(unknown)}")
    return np.array([r in step.applies_to for r in rows])


def _apply(series: MatrixSeries, step: PreprocessStep) -> MatrixSeries:
    X = np.array(series.values)
    mask = _row_mask(series, step)
    rows, cols = series.labels()
    kind = step.kind
    if kind in ("diff", "logdiff", "pctfromlast"):
        if series.T < 2:
            raise DataError(f"{kind} needs at least 2 time points")
        out = X[1:].copy()
        sel = X[:, mask, :]
        if kind == "diff":
            out[:, mask, :] = sel[1:] - sel[:-1]
        elif kind == "logdiff":
            bad = np.argwhere(sel <= 0)
            if bad.size:
                t, i, j = bad[0]
                r = np.flatnonzero(mask)[i]
                raise DataError(
                    f"logdiff: nonpositive value {sel[t, i, j]:g} at (t={t + 1},row={rows[r]},col={cols[j]})"
                )
            L = np.log(sel)
            out[:, mask, :] = L[1:] - L[:-1]
        else:
            prev = sel[:-1]
            zero = np.argwhere(prev == 0)
            if zero.size:
                t, i, j = zero[0]
                r = np.flatnonzero(mask)[i]
                raise DataError(f"pctfromlast: zero value at (t={t + 1},row={rows[r]},col={cols[j]})")
            out[:, mask, :] = 100.0 * (sel[1:] / prev - 1.0)
        return MatrixSeries(out, series.row_labels, series.col_labels)
    if kind == "demean":
        X[:, mask, :] -= X[:, mask, :].mean(axis=0)
    elif kind == "seasonaldemean":
        p = step.period
        for s in range(p):
            idx = slice(s, None, p)
            if X[idx].shape[0]:
                X[idx, mask, :] -= X[idx, mask, :].mean(axis=0)
    elif kind == "rownormalize":
        for i in np.flatnonzero(mask):
            D = X[:, i, :] - X[:, i, :].mean(axis=0)
            sd = np.sqrt(np.mean(D * D))
            if sd == 0:
                raise DataError(f"rownormalize: row {rows[i]} has zero variance")
            X[:, i, :] /= sd
    return MatrixSeries(X, series.row_labels, series.col_labels)


def preprocess(series: MatrixSeries, steps: Sequence[PreprocessStep]) -> MatrixSeries:
    """Apply ``steps`` in order.

    RowNormalize divides row ``i`` by the pooled standard deviation of its
    series: the root mean square deviation of each entry from its own
    series mean, over all times and columns.
    """
    for step in steps:
        series = _apply(series, step)
    return series


def parse_steps(spec: str | Iterable[str]) -> list[PreprocessStep]:
    """Parse ``"logdiff[GDP;PROD],seasonaldemean:4[CPI],rownormalize"`` style specs."""
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    steps = []
    for item in items:
        item = item.strip()
        if not item:
            continue
        rows = None
        if "[" in item:
            if not item.endswith("]"):
                raise ValueError(f"bad step {item!r}")
            item, inner = item[:-1].split("[", 1)
            rows = tuple(x.strip() for x in inner.split(";") if x.strip())
        period = None
        if ":" in item:
            item, p = item.split(":", 1)
            try:
                period = int(p)
            except ValueError:
                raise ValueError(f"bad period {p!r}") from None
        steps.append(PreprocessStep(item.strip(), period, rows))
    return steps


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment line."""
    out: dict[str, str] = {}
    for num, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{source}: line {num}: expected key=value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise DataError(f"{source}: line {num}: empty key")
        out[key] = value.strip()
    return out


def read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))
