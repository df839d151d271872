"""
Entrywise thresholding rules and the three thresholded covariance estimators.

Each off-diagonal sample covariance entry ``s_ij`` is replaced by
``rule(s_ij, lam_ij)`` with

* ``proposed``:  ``lam_ij = delta * sqrt(theta_ij * log p / n)``, ``theta`` the
  long-run variance of the product series;
* ``universal``: ``lam_ij = delta * sqrt(log p / n)``;
* ``cai-liu``:   ``lam_ij = delta * sqrt(theta_c_ij * log p / n)``, ``theta_c``
  the contemporaneous variance of the product series.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from lrcov.covariance import CovEstimate, cai_liu_variance, sample_cov
from lrcov.errors import ConfigError
from lrcov.lrv import KernelSpec, LrvMatrix, lrv_matrix
from lrcov.panel import TimeSeriesPanel, as_array, center

__all__ = [
    "RULES",
    "METHODS",
    "ThresholdRule",
    "EstimatorSpec",
    "ThresholdedCov",
    "apply_rule",
    "threshold_matrix",
    "support_of",
    "fit_variances",
    "estimate",
]

RULES = ("hard", "soft", "adaptive-lasso")
METHODS = ("proposed", "universal", "cai-liu")
_RULE_ALIASES = {"lasso": "adaptive-lasso", "adaptive_lasso": "adaptive-lasso", "alasso": "adaptive-lasso"}
_METHOD_ALIASES = {"cai_liu": "cai-liu", "cailiu": "cai-liu", "adaptive": "cai-liu", "lrv": "proposed"}


@dataclass(frozen=True)
class ThresholdRule:
    kind: str = "hard"
    eta: float = 4.0

    def __post_init__(self) -> None:
        kind = _RULE_ALIASES.get(str(self.kind).lower(), str(self.kind).lower())
        if kind not in RULES:
            raise ConfigError(f"unknown threshold rule {self.kind!r}; choose from {', '.join(RULES)}")
        object.__setattr__(self, "kind", kind)
        if kind == "adaptive-lasso" and not float(self.eta) >= 1:
            raise ConfigError(f"adaptive-lasso eta must be >= 1, got {self.eta}")

    def __str__(self) -> str:
        return f"adaptive-lasso(eta={self.eta:g})" if self.kind == "adaptive-lasso" else self.kind


@dataclass(frozen=True)
class EstimatorSpec:
    """Which thresholds to build and how to apply them.

    ``delta=None`` means the threshold level is still to be chosen (by
    cross-validation).  ``kernel`` is only used by the proposed method.
    """

    method: str = "proposed"
    rule: ThresholdRule = field(default_factory=ThresholdRule)
    delta: Optional[float] = None
    kernel: KernelSpec = field(default_factory=KernelSpec)
    threshold_diagonal: bool = False

    def __post_init__(self) -> None:
        m = _METHOD_ALIASES.get(str(self.method).lower(), str(self.method).lower())
        if m not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        object.__setattr__(self, "method", m)
        if isinstance(self.rule, str):
            object.__setattr__(self, "rule", ThresholdRule(self.rule))
        if self.delta is not None:
            d = float(self.delta)
            if not d >= 0 or not np.isfinite(d):
                raise ConfigError(f"delta must be a finite value >= 0, got {self.delta}")
            object.__setattr__(self, "delta", d)

    def with_delta(self, delta: float) -> "EstimatorSpec":
        return replace(self, delta=delta)

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "rule": self.rule.kind,
            "delta": self.delta,
            "threshold_diagonal": self.threshold_diagonal,
        }
        if self.rule.kind == "adaptive-lasso":
            d["eta"] = self.rule.eta
        if self.method == "proposed":
            d["kernel"] = self.kernel.to_dict()
        return d


@dataclass(frozen=True)
class ThresholdedCov:
    estimate: np.ndarray
    thresholds: np.ndarray
    support: np.ndarray
    spec: EstimatorSpec
    degenerate: np.ndarray = field(repr=False, default=None)


def _enforce_bias_bound(s: np.ndarray, z: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # rounding in |z| - lam can leave |s - z| one ulp above lam
    bad = np.abs(s - z) > lam
    while bad.any():
        s = np.where(bad, np.nextafter(s, z), s)
        bad = np.abs(s - z) > lam
    return s


def apply_rule(rule: Union[ThresholdRule, str], z, lam):
    """Apply a thresholding function entrywise.

    Every rule satisfies ``|s| <= |z|``, ``|s - z| <= lam`` and, apart from the
    hard rule at an exact tie ``|z| == lam``, ``s = 0`` whenever ``|z| <= lam``.
    """
    if isinstance(rule, str):
        rule = ThresholdRule(rule)
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ConfigError("threshold must be non-negative")
    az = np.abs(z)
    if rule.kind == "hard":
        s = np.where(az >= lam, z, 0.0)
        s = np.where(z == 0, 0.0, s)
    elif rule.kind == "soft":
        s = np.sign(z) * np.maximum(az - lam, 0.0)
        s = _enforce_bias_bound(s, z, lam)
    else:
        keep = az > lam
        # lam / |z| < 1 wherever it is used, so the power cannot overflow
        ratio = np.divide(lam, az, out=np.zeros(np.broadcast(lam, az).shape), where=keep)
        s = np.where(keep, z * (1.0 - ratio**rule.eta), 0.0)
        s = _enforce_bias_bound(s, z, lam)
    if s.ndim == 0:
        return float(s)
    return s


def _scale_matrix(method, p, theta, theta_c):
    if method == "universal":
        return np.ones((p, p)), np.zeros((p, p), dtype=bool)
    if method == "proposed":
        if theta is None:
            raise ConfigError("the proposed estimator requires long-run variances")
        if isinstance(theta, LrvMatrix):
            return theta.theta, theta.degenerate
        theta = np.asarray(theta, dtype=float)
        return theta, theta <= 0
    if theta_c is None:
        raise ConfigError("the cai-liu estimator requires product variances")
    theta_c = np.asarray(theta_c, dtype=float)
    return theta_c, theta_c <= 0


def threshold_matrix(
    cov: CovEstimate,
    spec: EstimatorSpec,
    theta: Optional[Union[LrvMatrix, np.ndarray]] = None,
    theta_c: Optional[np.ndarray] = None,
    p_for_logp: Optional[int] = None,
) -> ThresholdedCov:
    """Threshold a sample covariance.

    ``p_for_logp`` is the dimension entering ``log p`` (defaults to the
    covariance dimension); ``cov.n`` is the sample size in the denominator.
    Entries whose variance input is degenerate get a zero threshold.
    """
    if spec.delta is None:
        raise ConfigError("delta is not set; select it by cross-validation first")
    sig = cov.sigma_hat
    p = sig.shape[0]
    p_log = p if p_for_logp is None else int(p_for_logp)
    if p_log < 2:
        raise ConfigError("thresholding needs p >= 2 (log p must be positive)")
    scale, degenerate = _scale_matrix(spec.method, p, theta, theta_c)
    if scale.shape != (p, p):
        raise ConfigError(f"variance input has shape {scale.shape}, expected {(p, p)}")
    lam = spec.delta * np.sqrt(np.maximum(scale, 0.0) * np.log(p_log) / cov.n)
    lam = np.where(degenerate, 0.0, lam)
    if not spec.threshold_diagonal:
        np.fill_diagonal(lam, 0.0)
    est = apply_rule(spec.rule, sig, lam)
    if not spec.threshold_diagonal:
        np.fill_diagonal(est, np.diag(sig))
    return ThresholdedCov(est, lam, est != 0, spec, degenerate)


def support_of(t: ThresholdedCov) -> np.ndarray:
    return np.asarray(t.estimate) != 0


def fit_variances(panel, spec: EstimatorSpec, mask=None):
    """Sample covariance and the variance input required by ``spec.method``.

    With ``mask`` only the selected rows are used; the long-run variances then
    use lag pairs that lie entirely inside the mask.

    Returns
    -------
    cov : CovEstimate
    theta : LrvMatrix or None
    theta_c : ndarray or None
    """
    x = as_array(panel)
    if mask is None:
        mask = np.ones(x.shape[0], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    xt = x[mask]
    cov = sample_cov(xt)
    theta = theta_c = None
    if spec.method == "proposed":
        xc = np.where(mask[:, None], x - xt.mean(axis=0), 0.0)
        theta = lrv_matrix(xc, spec.kernel, mask)
    elif spec.method == "cai-liu":
        theta_c = cai_liu_variance(center(xt), cov)
    return cov, theta, theta_c


def estimate(panel: Union[TimeSeriesPanel, np.ndarray], spec: EstimatorSpec) -> ThresholdedCov:
    """Fit the thresholded estimator on a whole panel at a fixed ``delta``."""
    cov, theta, theta_c = fit_variances(panel, spec)
    return threshold_matrix(cov, spec, theta, theta_c)
