"""
Time-series panels and CSV ingestion.

A panel is an ``n x p`` array whose rows are observations ordered in time and
whose columns are the coordinate series.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from lrcov.errors import ConfigError, ParseError

__all__ = [
    "TimeSeriesPanel",
    "CenteredPanel",
    "as_array",
    "load_csv",
    "write_csv",
    "center",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Observed series ``y_1, ..., y_n`` stored row-wise.

    Parameters
    ----------
    data : ndarray
        ``n x p`` matrix of finite reals, row ``t`` is the observation at time ``t``.
    column_labels : sequence of str, optional
        One label per column.
    """

    data: np.ndarray
    column_labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise ConfigError(f"panel must be two-dimensional, got shape {a.shape}")
        n, p = a.shape
        if n < 2:
            raise ConfigError(f"panel needs at least 2 observations, got n={n}")
        if p < 1:
            raise ConfigError("panel needs at least one column")
        if not np.all(np.isfinite(a)):
            bad = np.argwhere(~np.isfinite(a))[0]
            raise ConfigError(
                f"non-finite value at row {bad[0] + 1}, column {bad[1] + 1}"
            )
        object.__setattr__(self, "data", _freeze(a))
        if self.column_labels is not None:
            labels = tuple(str(s) for s in self.column_labels)
            if len(labels) != p:
                raise ConfigError(f"expected {p} column labels, got {len(labels)}")
            object.__setattr__(self, "column_labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def select_columns(self, idx: Sequence[int]) -> "TimeSeriesPanel":
        idx = list(idx)
        labels = None
        if self.column_labels is not None:
            labels = tuple(self.column_labels[i] for i in idx)
        return TimeSeriesPanel(self.data[:, idx], labels)


@dataclass(frozen=True)
class CenteredPanel:
    """Panel with its column sample means removed."""

    data: np.ndarray
    means: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


PanelLike = Union[TimeSeriesPanel, CenteredPanel, np.ndarray]


def as_array(x: PanelLike) -> np.ndarray:
    """Return the underlying ``n x p`` float array of a panel-like input."""
    if isinstance(x, (TimeSeriesPanel, CenteredPanel)):
        return x.data
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def center(panel: PanelLike) -> CenteredPanel:
    """Subtract column sample means."""
    a = as_array(panel)
    means = a.mean(axis=0)
    return CenteredPanel(_freeze(a - means), _freeze(means))


def load_csv(path: Union[str, Path], has_header: bool = False) -> TimeSeriesPanel:
    """Read a comma-separated panel (rows = time, columns = variables).

    Rows and columns in error messages are 1-based and count data rows only.
    """
    path = Path(path)
    labels = None
    rows: list[list[float]] = []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        row_no = 0
        for fields in reader:
            if not fields or all(not f.strip() for f in fields):
                continue
            if has_header and labels is None:
                labels = [f.strip() for f in fields]
                width = len(labels)
                continue
            row_no += 1
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ParseError(
                    f"{path}: row {row_no} has {len(fields)} fields, expected {width}"
                )
            vals = []
            for col, f in enumerate(fields, start=1):
                try:
                    v = float(f)
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric value {f.strip()!r} at row {row_no}, column {col}"
                    ) from None
                if not np.isfinite(v):
                    raise ParseError(
                        f"{path}: missing or non-finite value at row {row_no}, column {col}"
                    )
                vals.append(v)
            rows.append(vals)
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least 2 data rows, found {len(rows)}")
    return TimeSeriesPanel(np.array(rows, dtype=float), labels)


def write_csv(
    panel: PanelLike,
    path: Union[str, Path],
    labels: Optional[Sequence[str]] = None,
) -> None:
    """Write a panel with 17 significant digits so float64 values round-trip."""
    a = as_array(panel)
    if labels is None and isinstance(panel, TimeSeriesPanel):
        labels = panel.column_labels
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if labels is not None:
            w.writerow(labels)
        for row in a:
            w.writerow(format(v, ".17g") for v in row)
