"""Sample covariance and the entrywise product variance used by adaptive thresholding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from lrcov.linalg import symmetrize
from lrcov.panel import CenteredPanel, TimeSeriesPanel, as_array

__all__ = ["CovEstimate", "sample_cov", "cai_liu_variance"]


@dataclass(frozen=True)
class CovEstimate:
    """Sample covariance ``sigma_hat`` with the number of observations behind it."""

    sigma_hat: np.ndarray
    n: int

    @property
    def p(self) -> int:
        return self.sigma_hat.shape[0]


def sample_cov(panel: Union[TimeSeriesPanel, CenteredPanel, np.ndarray]) -> CovEstimate:
    """Covariance with the ``1/n`` normalization, centered at the column means."""
    x = as_array(panel)
    n = x.shape[0]
    xc = x - x.mean(axis=0)
    return CovEstimate(symmetrize(xc.T @ xc / n), n)


def cai_liu_variance(panel: Union[CenteredPanel, np.ndarray], cov: CovEstimate) -> np.ndarray:
    """Variance of the centered cross products around the sample covariance.

    Entry ``(i, j)`` is ``mean_t[(x_ti * x_tj - sigma_ij)^2]`` for a centered
    panel ``x``.
    """
    x = as_array(panel)
    sig = cov.sigma_hat
    p = x.shape[1]
    out = np.empty((p, p))
    for i in range(p):
        dev = x[:, i : i + 1] * x[:, i:] - sig[i, i:]
        out[i, i:] = np.mean(dev**2, axis=0)
        out[i:, i] = out[i, i:]
    return out
