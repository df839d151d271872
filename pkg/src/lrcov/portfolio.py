"""
Markowitz portfolios, a linear shrinkage baseline, screening scores and a
rolling out-of-sample backtest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from lrcov.covariance import CovEstimate, sample_cov
from lrcov.errors import ConfigError, NumericalError
from lrcov.linalg import floor_eigenvalues, solve_spd, symmetrize
from lrcov.lrv import KernelSpec
from lrcov.panel import TimeSeriesPanel, as_array
from lrcov.threshold import EstimatorSpec, ThresholdRule, fit_variances, threshold_matrix
from lrcov.tuning import BlockCvConfig, block_partition, cv_curve, fit_folds, random_partition

__all__ = [
    "PortfolioScalars",
    "DegenerateTargetError",
    "portfolio_scalars",
    "mvp_weights",
    "gmvp_weights",
    "ShrinkageEstimate",
    "shrink_to_identity",
    "linear_shrinkage",
    "f_statistic_ranking",
    "abs_corr_score",
    "ESTIMATOR_NAMES",
    "parse_estimator",
    "BacktestConfig",
    "BacktestResult",
    "backtest",
]

logger = logging.getLogger(__name__)


class DegenerateTargetError(NumericalError):
    """The mean vector is proportional to the ones vector; no target can be imposed."""


class PortfolioScalars(NamedTuple):
    phi: float
    psi: float
    theta_p: float
    denom: float


def _solve_two(sigma, mu):
    p = sigma.shape[0]
    rhs = np.column_stack([np.ones(p), mu])
    sol = solve_spd(sigma, rhs)
    return sol[:, 0], sol[:, 1]


def portfolio_scalars(sigma: np.ndarray, mu: np.ndarray) -> PortfolioScalars:
    """``1'S^-1 1``, ``1'S^-1 mu``, ``mu'S^-1 mu`` and ``phi*theta - psi^2``."""
    mu = np.asarray(mu, dtype=float)
    inv_one, inv_mu = _solve_two(np.asarray(sigma, dtype=float), mu)
    phi = float(inv_one.sum())
    psi = float(inv_mu.sum())
    theta = float(mu @ inv_mu)
    return PortfolioScalars(phi, psi, theta, phi * theta - psi**2)


def mvp_weights(sigma: np.ndarray, mu: np.ndarray, gamma: float) -> np.ndarray:
    """Minimum-variance weights with ``w'1 = 1`` and ``w'mu = gamma``."""
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    inv_one, inv_mu = _solve_two(sigma, mu)
    phi = inv_one.sum()
    psi = inv_mu.sum()
    theta = mu @ inv_mu
    denom = phi * theta - psi**2
    if not denom > 1e-12 * max(abs(phi * theta), np.finfo(float).tiny):
        raise DegenerateTargetError("mean vector is (numerically) proportional to the ones vector")
    return ((theta - gamma * psi) / denom) * inv_one + ((gamma * phi - psi) / denom) * inv_mu


def gmvp_weights(sigma: np.ndarray) -> np.ndarray:
    """Global minimum-variance weights ``S^-1 1 / (1'S^-1 1)``."""
    sigma = np.asarray(sigma, dtype=float)
    inv_one = solve_spd(sigma, np.ones(sigma.shape[0]))
    return inv_one / inv_one.sum()


class ShrinkageEstimate(NamedTuple):
    sigma: np.ndarray
    alpha: float


def shrink_to_identity(sigma: np.ndarray, alpha: float) -> np.ndarray:
    """``(1 - alpha) S + alpha * (tr(S)/p) I``."""
    sigma = np.asarray(sigma, dtype=float)
    mu = np.trace(sigma) / sigma.shape[0]
    return symmetrize((1.0 - alpha) * sigma + alpha * mu * np.eye(sigma.shape[0]))


def linear_shrinkage(panel, alpha: Optional[float] = None) -> ShrinkageEstimate:
    """Ledoit-Wolf (2004) shrinkage of the sample covariance toward a scaled identity.

    The intensity is ``min(b2, d2) / d2`` where ``d2`` is the squared
    Frobenius distance of the sample covariance from ``mu I`` and ``b2`` the
    estimated estimation error of the sample covariance, both per dimension.
    Pass ``alpha`` to fix the intensity instead.
    """
    if isinstance(panel, CovEstimate):
        if alpha is None:
            raise ConfigError("estimating the shrinkage intensity needs the data, not only the covariance")
        return ShrinkageEstimate(shrink_to_identity(panel.sigma_hat, alpha), float(alpha))
    x = as_array(panel)
    n, p = x.shape
    if n < 2:
        raise ConfigError("linear shrinkage needs n >= 2")
    xc = x - x.mean(axis=0)
    s = xc.T @ xc / n
    if alpha is None:
        mu = np.trace(s) / p
        d2 = np.sum((s - mu * np.eye(p)) ** 2) / p
        # sum_t ||x_t x_t' - S||_F^2 = sum_t ||x_t||^4 - n ||S||_F^2
        row_sq = np.sum(xc**2, axis=1)
        b2_bar = (np.sum(row_sq**2) - n * np.sum(s**2)) / (n**2 * p)
        alpha = 0.0 if d2 <= 0 else float(np.clip(min(b2_bar, d2) / d2, 0.0, 1.0))
    elif not 0 <= alpha <= 1:
        raise ConfigError(f"shrinkage intensity must lie in [0, 1], got {alpha}")
    return ShrinkageEstimate(shrink_to_identity(s, alpha), float(alpha))


def f_statistic_ranking(panel, class_labels: Sequence) -> np.ndarray:
    """One-way ANOVA F statistic of every column across classes.

    Columns with zero pooled within-class variance score ``+inf``.
    """
    x = as_array(panel)
    labels = np.asarray(class_labels)
    n = x.shape[0]
    if labels.shape != (n,):
        raise ConfigError(f"expected {n} class labels, got {labels.size}")
    classes = np.unique(labels)
    k = classes.size
    if k < 2:
        raise ConfigError("need at least 2 classes")
    grand = x.mean(axis=0)
    between = np.zeros(x.shape[1])
    within = np.zeros(x.shape[1])
    for c in classes:
        xm = x[labels == c]
        if xm.shape[0] < 2:
            raise ConfigError(f"class {c!r} has fewer than 2 samples")
        between += xm.shape[0] * (xm.mean(axis=0) - grand) ** 2
        within += (xm.shape[0] - 1) * xm.var(axis=0, ddof=1)
    num = between / (k - 1)
    den = within / (n - k)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = num / den
    return np.where(den > 0, f, np.inf)


def abs_corr_score(panel) -> np.ndarray:
    """Mean absolute sample correlation of each column with all other columns.

    Constant columns get ``nan``.
    """
    x = as_array(panel)
    p = x.shape[1]
    if p < 2:
        raise ConfigError("need at least 2 columns")
    xc = x - x.mean(axis=0)
    sd = np.sqrt(np.sum(xc**2, axis=0))
    ok = sd > 0
    z = np.where(ok, xc / np.where(ok, sd, 1.0), 0.0)
    r = np.clip(z.T @ z, -1.0, 1.0)
    np.fill_diagonal(r, 0.0)
    score = np.abs(r).sum(axis=1) / (p - 1)
    return np.where(ok, score, np.nan)


ESTIMATOR_NAMES = (
    "sample",
    "linear-shrinkage",
    "proposed-hard",
    "proposed-soft",
    "proposed-lasso",
    "universal-hard",
    "universal-soft",
    "universal-lasso",
    "cai-liu-hard",
    "cai-liu-soft",
    "cai-liu-lasso",
)


def parse_estimator(name: str) -> Optional[EstimatorSpec]:
    """Map a backtest estimator name to a thresholding spec (``None`` for non-thresholding ones)."""
    if name not in ESTIMATOR_NAMES:
        raise ConfigError(f"unknown estimator {name!r}; valid names: {', '.join(ESTIMATOR_NAMES)}")
    if name in ("sample", "linear-shrinkage"):
        return None
    method, rule = name.rsplit("-", 1)
    return EstimatorSpec(method, ThresholdRule("adaptive-lasso" if rule == "lasso" else rule))


@dataclass(frozen=True)
class BacktestConfig:
    window: int
    hold: int = 20
    target_annual_return: float = 0.10
    trading_days: int = 250
    eigen_floor: float = 1e-6
    estimators: tuple = ("sample", "linear-shrinkage", "proposed-hard", "proposed-lasso")
    cv: BlockCvConfig = field(default_factory=BlockCvConfig)
    competitor_split: str = "contiguous"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    eta: float = 4.0

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ConfigError(f"window must be >= 2, got {self.window}")
        if self.hold < 1:
            raise ConfigError(f"holding period must be >= 1, got {self.hold}")
        for name in self.estimators:
            parse_estimator(name)


@dataclass
class BacktestResult:
    estimator: str
    portfolio: str
    daily_returns: np.ndarray
    annualized_risk: float
    sharpe: Optional[float]
    rebalance_log: list

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "portfolio": self.portfolio,
            "annualized_risk": self.annualized_risk,
            "sharpe": self.sharpe,
            "n_returns": int(self.daily_returns.size),
            "rebalances": len(self.rebalance_log),
        }


def _window_covariance(x: np.ndarray, name: str, cfg: BacktestConfig, seed: int) -> tuple[np.ndarray, dict]:
    if name == "sample":
        return sample_cov(x).sigma_hat, {}
    if name == "linear-shrinkage":
        est = linear_shrinkage(x)
        return est.sigma, {"alpha": est.alpha}
    spec = parse_estimator(name)
    rule = spec.rule if spec.rule.kind != "adaptive-lasso" else ThresholdRule("adaptive-lasso", cfg.eta)
    spec = EstimatorSpec(spec.method, rule, kernel=cfg.kernel)
    n = x.shape[0]
    if spec.method == "proposed" or cfg.competitor_split == "contiguous":
        splits = block_partition(n, cfg.cv.k_blocks, cfg.cv.buffer if spec.method == "proposed" else 0)
    else:
        splits = random_partition(n, cfg.cv.k_blocks, seed)
    cv = cv_curve(fit_folds(x, splits, spec), spec, cfg.cv.grid, x.shape[1])
    cov, theta, theta_c = fit_variances(x, spec)
    t = threshold_matrix(cov, spec.with_delta(cv.best_delta), theta, theta_c)
    return t.estimate, {"delta": cv.best_delta}


def _summarize(returns: np.ndarray, trading_days: int) -> tuple[float, Optional[float]]:
    if returns.size < 2:
        return float("nan"), None
    sd = float(np.std(returns, ddof=1))
    risk = float(np.sqrt(trading_days) * sd)
    # dispersion at the level of rounding error counts as zero
    if not sd > 64 * np.finfo(float).eps * np.max(np.abs(returns)):
        return risk, None
    return risk, float(np.sqrt(trading_days) * returns.mean() / sd)


def backtest(panel: Union[TimeSeriesPanel, np.ndarray], cfg: BacktestConfig) -> dict:
    """Rolling out-of-sample backtest with periodic rebalancing.

    At each rebalance time ``t`` the covariance is estimated from rows
    ``t-window .. t-1``, its eigenvalues are floored, and mean-variance (daily
    target ``target_annual_return / trading_days``) and global minimum-variance
    weights are held for the next ``hold`` rows.

    Returns
    -------
    dict
        ``{estimator: {"mvp": BacktestResult, "gmvp": BacktestResult}}``.
    """
    y = as_array(panel)
    total, p = y.shape
    if total < cfg.window + cfg.hold:
        raise ConfigError(f"need at least window + hold = {cfg.window + cfg.hold} rows, got {total}")
    gamma = cfg.target_annual_return / cfg.trading_days
    out = {}
    for name in cfg.estimators:
        rets = {"mvp": [], "gmvp": []}
        logs = {"mvp": [], "gmvp": []}
        for step, t in enumerate(range(cfg.window, total, cfg.hold)):
            train = y[t - cfg.window : t]
            held = y[t : min(t + cfg.hold, total)]
            sigma, info = _window_covariance(train, name, cfg, step)
            sigma = floor_eigenvalues(sigma, cfg.eigen_floor)
            mu = train.mean(axis=0)
            w_g = gmvp_weights(sigma)
            fallback = False
            try:
                w_m = mvp_weights(sigma, mu, gamma)
            except DegenerateTargetError:
                logger.info("rebalance at %d: degenerate target, using GMVP weights", t)
                w_m, fallback = w_g, True
            for kind, w in (("mvp", w_m), ("gmvp", w_g)):
                rets[kind].append(held @ w)
                logs[kind].append(
                    {
                        "t": t,
                        "l1": float(np.abs(w).sum()),
                        "max_abs": float(np.abs(w).max()),
                        "fallback": fallback and kind == "mvp",
                        **info,
                    }
                )
        out[name] = {}
        for kind in ("mvp", "gmvp"):
            r = np.concatenate(rets[kind])
            risk, sharpe = _summarize(r, cfg.trading_days)
            out[name][kind] = BacktestResult(name, kind, r, risk, sharpe, logs[kind])
    return out
