"""Estimation loss, support recovery rates and aggregation over replications."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from lrcov.errors import ConfigError
from lrcov.linalg import spectral_norm

__all__ = [
    "SupportStats",
    "Replication",
    "ReplicationSummary",
    "spectral_loss",
    "support_stats",
    "aggregate",
    "heatmap_pgm",
    "write_heatmap_pgm",
    "write_int_csv",
    "format_cell",
]


def spectral_loss(est: np.ndarray, truth: np.ndarray) -> float:
    """Spectral norm of ``est - truth``."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ConfigError(f"dimension mismatch: {est.shape} vs {truth.shape}")
    return spectral_norm(est - truth)


@dataclass(frozen=True)
class SupportStats:
    """Off-diagonal true/false positive rates and full-mask exact recovery.

    ``tpr`` (``fpr``) is ``None`` when the truth has no off-diagonal nonzeros
    (zeros).
    """

    tpr: Optional[float]
    fpr: Optional[float]
    exact_recovery: bool
    tp: int
    fp: int
    tn: int
    fn: int


def support_stats(est_support: np.ndarray, true_support: np.ndarray) -> SupportStats:
    est = np.asarray(est_support, dtype=bool)
    true = np.asarray(true_support, dtype=bool)
    if est.shape != true.shape:
        raise ConfigError(f"dimension mismatch: {est.shape} vs {true.shape}")
    off = ~np.eye(true.shape[0], dtype=bool)
    tp = int(np.sum(est & true & off))
    fn = int(np.sum(~est & true & off))
    fp = int(np.sum(est & ~true & off))
    tn = int(np.sum(~est & ~true & off))
    tpr = tp / (tp + fn) if tp + fn else None
    fpr = fp / (fp + tn) if fp + tn else None
    return SupportStats(tpr, fpr, bool(np.array_equal(est, true)), tp, fp, tn, fn)


@dataclass(frozen=True)
class Replication:
    loss: float
    stats: SupportStats
    support: np.ndarray
    delta: Optional[float] = None


@dataclass(frozen=True)
class ReplicationSummary:
    mean_loss: float
    se_loss: float
    mean_tpr: Optional[float]
    mean_fpr: Optional[float]
    exact_recovery_rate: float
    freq: np.ndarray
    reps: int
    undefined_tpr: int = 0
    undefined_fpr: int = 0
    mean_delta: Optional[float] = None
    sd_tpr: Optional[float] = None
    sd_fpr: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "mean_loss": self.mean_loss,
            "se_loss": self.se_loss,
            "mean_tpr": self.mean_tpr,
            "mean_fpr": self.mean_fpr,
            "exact_recovery_rate": self.exact_recovery_rate,
            "reps": self.reps,
            "undefined_tpr": self.undefined_tpr,
            "undefined_fpr": self.undefined_fpr,
            "mean_delta": self.mean_delta,
            "sd_tpr": self.sd_tpr,
            "sd_fpr": self.sd_fpr,
            "freq": self.freq.tolist(),
        }


def _mean(vals: list) -> Optional[float]:
    return float(np.mean(vals)) if vals else None


def _sd(vals: list) -> Optional[float]:
    if not vals:
        return None
    return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0


def aggregate(results: Iterable[Replication]) -> ReplicationSummary:
    """Means, sample standard deviation of the loss, and nonzero frequencies.

    Undefined rates are excluded from the means and counted separately.
    """
    results = list(results)
    if not results:
        raise ConfigError("cannot aggregate zero replications")
    losses = np.array([r.loss for r in results])
    sd = _sd(list(losses))
    tprs = [r.stats.tpr for r in results if r.stats.tpr is not None]
    fprs = [r.stats.fpr for r in results if r.stats.fpr is not None]
    freq = np.zeros(results[0].support.shape, dtype=np.int64)
    for r in results:
        freq += np.asarray(r.support, dtype=bool)
    deltas = [r.delta for r in results if r.delta is not None]
    return ReplicationSummary(
        mean_loss=float(losses.mean()),
        se_loss=sd,
        mean_tpr=_mean(tprs),
        mean_fpr=_mean(fprs),
        exact_recovery_rate=float(np.mean([r.stats.exact_recovery for r in results])),
        freq=freq,
        reps=len(results),
        undefined_tpr=len(results) - len(tprs),
        undefined_fpr=len(results) - len(fprs),
        mean_delta=_mean(deltas),
        sd_tpr=_sd(tprs),
        sd_fpr=_sd(fprs),
    )


def heatmap_pgm(freq: np.ndarray, reps: int) -> str:
    """Plain (P2) grayscale image where black marks entries selected in every run."""
    freq = np.asarray(freq)
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    gray = np.rint(255 * (1 - freq / reps)).astype(int)
    h, w = gray.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(str(v) for v in row) for row in gray]
    return "\n".join(lines) + "\n"


def write_heatmap_pgm(freq: np.ndarray, reps: int, path: Union[str, Path]) -> None:
    Path(path).write_text(heatmap_pgm(freq, reps))


def write_int_csv(mat: np.ndarray, path: Union[str, Path]) -> None:
    Path(path).write_text("\n".join(",".join(str(int(v)) for v in row) for row in np.asarray(mat)) + "\n")


def format_cell(mean: Optional[float], sd: Optional[float]) -> str:
    """Table cell ``mean(sd)`` with two decimals."""
    if mean is None or (isinstance(mean, float) and math.isnan(mean)):
        return "NA"
    if sd is None:
        return f"{mean:.2f}"
    return f"{mean:.2f}({sd:.2f})"
