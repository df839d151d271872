"""
Selection of the threshold level ``delta``.

Block cross-validation splits the time axis into ``K`` consecutive blocks.  Block
``B_k`` is the validation set and the training set is everything farther than
``buffer`` time steps from it.  The estimator fitted on the training rows is
compared with the validation covariance in squared Frobenius norm, and the
loss is averaged over folds for every ``delta`` on the grid
``{0, 1/M, ..., 4}``.

Ordinary cross-validation uses the same loss on a seeded random split of rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from lrcov.covariance import CovEstimate, sample_cov
from lrcov.errors import ConfigError
from lrcov.lrv import LrvMatrix
from lrcov.panel import TimeSeriesPanel, as_array
from lrcov.threshold import EstimatorSpec, fit_variances, threshold_matrix

__all__ = [
    "BlockCvConfig",
    "CvResult",
    "FoldFit",
    "block_partition",
    "random_partition",
    "fit_folds",
    "cv_curve",
    "block_cv_delta",
    "ordinary_cv_delta",
    "delta_grid",
]

logger = logging.getLogger(__name__)


def delta_grid(grid_m: int = 10) -> np.ndarray:
    """Grid ``j / M`` for ``j = 0, ..., 4M``."""
    if grid_m < 1:
        raise ConfigError(f"grid size M must be >= 1, got {grid_m}")
    return np.arange(4 * grid_m + 1) / grid_m


@dataclass(frozen=True)
class BlockCvConfig:
    k_blocks: int = 5
    buffer: int = 0
    grid_m: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_blocks < 2:
            raise ConfigError(f"need at least 2 blocks, got {self.k_blocks}")
        if self.buffer < 0:
            raise ConfigError(f"buffer must be >= 0, got {self.buffer}")
        if self.grid_m < 1:
            raise ConfigError(f"grid size M must be >= 1, got {self.grid_m}")

    @property
    def grid(self) -> np.ndarray:
        return delta_grid(self.grid_m)


@dataclass
class CvResult:
    best_delta: float
    grid: np.ndarray
    losses: np.ndarray
    per_fold: np.ndarray
    skipped_folds: list = field(default_factory=list)

    @property
    def curve(self) -> list[tuple[float, float]]:
        return [(float(d), float(r)) for d, r in zip(self.grid, self.losses)]

    def to_dict(self) -> dict:
        return {
            "best_delta": float(self.best_delta),
            "grid": [float(d) for d in self.grid],
            "losses": [float(r) for r in self.losses],
            "per_fold": [[float(v) for v in row] for row in self.per_fold],
            "skipped_folds": list(self.skipped_folds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CvResult":
        return cls(
            float(d["best_delta"]),
            np.asarray(d["grid"], dtype=float),
            np.asarray(d["losses"], dtype=float),
            np.asarray(d["per_fold"], dtype=float),
            list(d.get("skipped_folds", [])),
        )


def block_partition(n: int, k: int, buffer: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Consecutive-block folds as 0-based ``(train, validation)`` index arrays.

    Block lengths differ by at most one, longer blocks first.
    """
    if k < 2 or n < 2 * k:
        raise ConfigError(f"cannot split n={n} observations into {k} blocks of length >= 2")
    if buffer < 0:
        raise ConfigError("buffer must be >= 0")
    blocks = np.array_split(np.arange(n), k)
    if 2 * buffer + max(len(b) for b in blocks) >= n:
        raise ConfigError(f"buffer {buffer} leaves no training data for n={n}, k={k}")
    t = np.arange(n)
    folds = []
    for b in blocks:
        keep = (t < b[0] - buffer) | (t > b[-1] + buffer)
        folds.append((t[keep], b))
    return folds


def random_partition(n: int, folds: int, seed) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded random split of rows into ``folds`` groups of near-equal size."""
    if folds < 2 or folds > n:
        raise ConfigError(f"number of folds must be in [2, n={n}], got {folds}")
    perm = np.random.default_rng(seed).permutation(n)
    t = np.arange(n)
    out = []
    for g in np.array_split(perm, folds):
        val = np.sort(g)
        out.append((np.setdiff1d(t, val, assume_unique=True), val))
    return out


@dataclass
class FoldFit:
    """Everything needed to evaluate one fold's loss at any ``delta``."""

    cov: CovEstimate
    theta: Optional[LrvMatrix]
    theta_c: Optional[np.ndarray]
    sigma_val: np.ndarray


def fit_folds(panel, splits, spec: EstimatorSpec) -> list[Optional[FoldFit]]:
    """Fit the training-side variance inputs and validation covariance per fold.

    Folds whose training data cannot support the estimator are returned as
    ``None``.
    """
    x = as_array(panel)
    n = x.shape[0]
    fits: list[Optional[FoldFit]] = []
    for i, (train, val) in enumerate(splits):
        mask = np.zeros(n, dtype=bool)
        mask[train] = True
        try:
            cov, theta, theta_c = fit_variances(x, spec, mask)
        except ConfigError as exc:
            logger.warning("fold %d skipped: %s", i, exc)
            fits.append(None)
            continue
        off = ~np.eye(x.shape[1], dtype=bool)
        if theta is not None and np.all(theta.degenerate[off]):
            logger.warning("fold %d skipped: all long-run variances degenerate", i)
            fits.append(None)
            continue
        fits.append(FoldFit(cov, theta, theta_c, sample_cov(x[val]).sigma_hat))
    return fits


def cv_curve(
    fits: Sequence[Optional[FoldFit]],
    spec: EstimatorSpec,
    grid: Sequence[float],
    p_for_logp: Optional[int] = None,
) -> CvResult:
    """Average validation loss over folds for every grid value.

    The minimizer is returned; exact ties go to the larger ``delta``.
    """
    grid = np.asarray(grid, dtype=float)
    used = [i for i, f in enumerate(fits) if f is not None]
    skipped = [i for i, f in enumerate(fits) if f is None]
    if not used:
        raise ConfigError("all cross-validation folds are degenerate")
    per_fold = np.full((len(fits), grid.size), np.nan)
    for i in used:
        f = fits[i]
        for g, delta in enumerate(grid):
            t = threshold_matrix(f.cov, spec.with_delta(delta), f.theta, f.theta_c, p_for_logp)
            per_fold[i, g] = np.sum((t.estimate - f.sigma_val) ** 2)
    losses = np.mean(per_fold[used], axis=0)
    best = np.flatnonzero(losses == losses.min())[-1]
    return CvResult(float(grid[best]), grid, losses, per_fold, skipped)


def block_cv_delta(
    panel: Union[TimeSeriesPanel, np.ndarray],
    spec: EstimatorSpec,
    cfg: BlockCvConfig = BlockCvConfig(),
) -> CvResult:
    """Choose ``delta`` by block cross-validation over consecutive time blocks."""
    x = as_array(panel)
    splits = block_partition(x.shape[0], cfg.k_blocks, cfg.buffer)
    return cv_curve(fit_folds(x, splits, spec), spec, cfg.grid, x.shape[1])


def ordinary_cv_delta(
    panel: Union[TimeSeriesPanel, np.ndarray],
    spec: EstimatorSpec,
    folds: int = 5,
    grid: Optional[Sequence[float]] = None,
    seed=0,
) -> CvResult:
    """Choose ``delta`` by K-fold cross-validation on a random row split."""
    x = as_array(panel)
    grid = delta_grid(10) if grid is None else grid
    splits = random_partition(x.shape[0], folds, seed)
    return cv_curve(fit_folds(x, splits, spec), spec, grid, x.shape[1])
