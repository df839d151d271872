"""
Kernel long-run variance of cross-product series.

For coordinates ``i`` and ``j`` of a centered panel the product series is
``z_t = y_it * y_jt``.  Its long-run variance is estimated by

.. math::

    \\hat\\theta_{ij} = \\sum_{k=-(n-1)}^{n-1} K(k / b_n) \\hat\\Gamma_{ij}(k)

where :math:`\\hat\\Gamma_{ij}(k)` is the lag-``k`` sample autocovariance of
``z`` around its full-sample mean with a ``1/n`` normalization.  The bandwidth
``b_n`` is chosen per pair, either fixed or by the Andrews (1991) AR(1)
plug-in rule.

All pairwise work is vectorized: autocovariances of many product series are
computed at once with zero-padded FFTs.  A boolean time mask restricts the
estimator to a subset of observations; lag products are then formed only from
pairs of time points that are both inside the mask, and the normalization is
the number of retained observations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy import fft as sfft

from lrcov.errors import ConfigError
from lrcov.panel import CenteredPanel, as_array

__all__ = [
    "KERNELS",
    "KernelSpec",
    "LrvMatrix",
    "LrvPair",
    "kernel_value",
    "autocovariance",
    "andrews_bandwidth",
    "lrv_pair",
    "lrv_columns",
    "lrv_matrix",
    "THETA_EPS",
    "RHO_CLAMP",
]

KERNELS = ("quadratic-spectral", "bartlett", "parzen", "tukey-hanning")
_ALIASES = {
    "qs": "quadratic-spectral",
    "quadratic_spectral": "quadratic-spectral",
    "tukey_hanning": "tukey-hanning",
    "th": "tukey-hanning",
    "newey-west": "bartlett",
}

# Andrews (1991) AR(1) plug-in constants and the exponent of n for each kernel.
_ANDREWS = {
    "bartlett": (1.1447, 1.0 / 3.0),
    "parzen": (2.6614, 0.2),
    "tukey-hanning": (1.7462, 0.2),
    "quadratic-spectral": (1.3221, 0.2),
}

THETA_EPS = 1e-12
RHO_CLAMP = 0.97
_MIN_BANDWIDTH = 1e-8
_CHUNK_ELEMS = 1 << 22


def _kind(kind: str) -> str:
    k = str(kind).strip().lower()
    k = _ALIASES.get(k, k)
    if k not in KERNELS:
        raise ConfigError(f"unknown kernel {kind!r}; choose from {', '.join(KERNELS)}")
    return k


@dataclass(frozen=True)
class KernelSpec:
    """Kernel and bandwidth rule.

    ``bandwidth=None`` selects the Andrews automatic bandwidth per pair.
    ``prewhiten`` is accepted for configuration compatibility only; prewhitened
    estimation is not implemented and requesting it raises ``ConfigError``.
    """

    kind: str = "quadratic-spectral"
    bandwidth: Optional[float] = None
    prewhiten: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _kind(self.kind))
        if self.bandwidth is not None:
            bw = float(self.bandwidth)
            if not bw > 0 or not np.isfinite(bw):
                raise ConfigError(f"fixed bandwidth must be positive, got {self.bandwidth}")
            object.__setattr__(self, "bandwidth", bw)
        if self.prewhiten:
            raise ConfigError("prewhitened long-run variance estimation is not supported")

    @property
    def automatic(self) -> bool:
        return self.bandwidth is None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bandwidth": "andrews" if self.bandwidth is None else self.bandwidth,
        }


class LrvPair(NamedTuple):
    theta: float
    bandwidth: float
    degenerate: bool


@dataclass(frozen=True)
class LrvMatrix:
    """Pairwise long-run variances with the bandwidth used for each pair.

    ``degenerate`` marks pairs whose product series is constant (theta set to
    zero); ``clamped`` marks pairs whose raw estimate was not positive and was
    raised to ``THETA_EPS``.
    """

    theta: np.ndarray
    bandwidths: np.ndarray
    degenerate: np.ndarray
    clamped: np.ndarray

    @property
    def p(self) -> int:
        return self.theta.shape[0]


def kernel_value(kind: Union[str, KernelSpec], x) -> np.ndarray:
    """Evaluate a HAC kernel; vectorized over ``x``."""
    k = kind.kind if isinstance(kind, KernelSpec) else _kind(kind)
    x = np.abs(np.asarray(x, dtype=float))
    if k == "bartlett":
        return np.clip(1.0 - x, 0.0, None)
    if k == "parzen":
        inner = 1.0 - 6.0 * x**2 + 6.0 * x**3
        outer = 2.0 * (1.0 - x) ** 3
        return np.where(x <= 0.5, inner, np.where(x <= 1.0, outer, 0.0))
    if k == "tukey-hanning":
        return np.where(x <= 1.0, 0.5 * (1.0 + np.cos(np.pi * x)), 0.0)
    return _qs(6.0 * np.pi / 5.0 * x)


def _qs(z: np.ndarray) -> np.ndarray:
    """Quadratic-spectral kernel as a function of ``z = 6*pi*x/5`` (z >= 0)."""
    shape = np.shape(z)
    z = np.array(z, dtype=float).reshape(-1)
    small = z < 1e-2
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = np.sin(z)
        out /= z
        out -= np.cos(z)
        out *= 3.0
        z **= 2
        out /= z
    out[np.isinf(z)] = 0.0
    if small.any():
        zs2 = z[small]
        out[small] = 1.0 - zs2 / 10.0 + zs2**2 / 280.0
    return out.reshape(shape)


def autocovariance(z, k: int) -> float:
    """Lag-``k`` sample autocovariance around the full-sample mean, scaled by ``1/n``."""
    z = np.asarray(z, dtype=float).ravel()
    n = z.size
    k = abs(int(k))
    if n < 2:
        raise ConfigError("autocovariance needs at least 2 observations")
    if k >= n:
        raise ConfigError(f"lag {k} out of range for a series of length {n}")
    d = z - z.mean()
    return float(np.dot(d[k:], d[: n - k]) / n)


def _bandwidth_from_rho(rho: np.ndarray, n_eff: float, kind: str) -> np.ndarray:
    const, expo = _ANDREWS[kind]
    rho = np.clip(rho, -RHO_CLAMP, RHO_CLAMP)
    if kind == "bartlett":
        alpha = 4.0 * rho**2 / ((1.0 - rho) ** 2 * (1.0 + rho) ** 2)
    else:
        alpha = 4.0 * rho**2 / (1.0 - rho) ** 4
    return np.maximum(const * (alpha * n_eff) ** expo, _MIN_BANDWIDTH)


def _ar1_coefficient(d: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Lag-one least-squares slope of centered columns, using in-mask pairs only."""
    pair = (mask[1:] & mask[:-1]).astype(float)[:, None]
    num = np.sum(d[1:] * d[:-1] * pair, axis=0)
    den = np.sum(d[:-1] ** 2 * pair, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return rho


def andrews_bandwidth(z, kind: Union[str, KernelSpec] = "quadratic-spectral") -> float:
    """Andrews AR(1) plug-in bandwidth for one series.

    The lag-one autoregression is fitted to the demeaned series and its
    coefficient clamped to ``[-0.97, 0.97]`` before the plug-in formula.
    """
    k = kind.kind if isinstance(kind, KernelSpec) else _kind(kind)
    z = np.asarray(z, dtype=float).ravel()
    if z.size < 4:
        raise ConfigError(f"bandwidth selection needs n >= 4, got {z.size}")
    d = z - z.mean()
    if np.all(d == 0):
        raise ConfigError("bandwidth selection is undefined for a constant series")
    rho = _ar1_coefficient(d[:, None], np.ones(z.size, dtype=bool))
    return float(_bandwidth_from_rho(rho, z.size, k)[0])


def _columns_chunk(z: np.ndarray, spec: KernelSpec, mask: np.ndarray, n_eff: int, nfft: int):
    n = z.shape[0]
    zbar = z[mask].mean(axis=0)
    d = np.where(mask[:, None], z - zbar, 0.0)
    scale = np.max(np.abs(z[mask]), axis=0)
    spec_f = sfft.rfft(d, n=nfft, axis=0)
    gam = sfft.irfft(spec_f.real**2 + spec_f.imag**2, n=nfft, axis=0)[:n] / n_eff
    # constant (or numerically constant) product series on the mask
    degenerate = np.all(d == 0, axis=0) | (gam[0] <= (1e-14 * scale) ** 2)

    if spec.bandwidth is None:
        bw = _bandwidth_from_rho(_ar1_coefficient(d, mask), n_eff, spec.kind)
    else:
        bw = np.full(z.shape[1], spec.bandwidth)

    lags = np.arange(1, n, dtype=float)
    if spec.kind != "quadratic-spectral":
        # compact support: lags beyond 6*b carry zero weight
        kmax = int(min(n - 1, np.ceil(6.0 * bw.max())))
        lags = lags[:kmax]
    if spec.kind == "quadratic-spectral":
        w = _qs(lags[:, None] * (6.0 * np.pi / 5.0 / bw)[None, :])
    else:
        w = kernel_value(spec.kind, lags[:, None] / bw[None, :])
    theta = gam[0] + 2.0 * np.sum(w * gam[1 : 1 + lags.size], axis=0)

    theta = np.where(degenerate, 0.0, theta)
    clamped = (~degenerate) & (theta <= 0)
    theta = np.where(clamped, THETA_EPS, theta)
    return theta, bw, degenerate, clamped


def lrv_columns(z, spec: KernelSpec = KernelSpec(), mask=None):
    """Long-run variance of every column of ``z`` (rows are time).

    Parameters
    ----------
    z : ndarray
        ``n x m`` matrix of series, e.g. cross products of centered coordinates.
    spec : KernelSpec
        Kernel and bandwidth rule.
    mask : ndarray of bool, optional
        Observations to use.  Lag-``k`` products are only formed between
        times ``t`` and ``t - k`` that are both in the mask.

    Returns
    -------
    theta, bandwidths, degenerate, clamped : ndarray
        One entry per column.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    n, m = z.shape
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (n,):
        raise ConfigError(f"mask must have length {n}")
    n_eff = int(mask.sum())
    if n_eff < 4:
        raise ConfigError(f"long-run variance needs at least 4 observations, got {n_eff}")
    nfft = sfft.next_fast_len(2 * n, real=True)
    step = max(1, _CHUNK_ELEMS // (2 * nfft))
    out = [np.empty(m), np.empty(m), np.empty(m, dtype=bool), np.empty(m, dtype=bool)]
    for start in range(0, m, step):
        sl = slice(start, min(m, start + step))
        for dst, src in zip(out, _columns_chunk(z[:, sl], spec, mask, n_eff, nfft)):
            dst[sl] = src
    return tuple(out)


def lrv_pair(zi, zj, spec: KernelSpec = KernelSpec()) -> LrvPair:
    """Long-run variance of the product of two centered coordinate series.

    A constant product series yields ``theta = 0`` with ``degenerate=True``.
    """
    zi = np.asarray(zi, dtype=float).ravel()
    zj = np.asarray(zj, dtype=float).ravel()
    if zi.shape != zj.shape:
        raise ConfigError("series must have equal length")
    theta, bw, deg, _ = lrv_columns((zi * zj)[:, None], spec)
    return LrvPair(float(theta[0]), float(bw[0]), bool(deg[0]))


def lrv_matrix(panel: Union[CenteredPanel, np.ndarray], spec: KernelSpec = KernelSpec(), mask=None) -> LrvMatrix:
    """Long-run variances of all cross products of a centered panel.

    The input columns are assumed centered (over ``mask`` when one is given).
    """
    x = as_array(panel)
    n, p = x.shape
    iu, ju = np.triu_indices(p)
    theta = np.empty((p, p))
    bws = np.empty((p, p))
    deg = np.empty((p, p), dtype=bool)
    clamp = np.empty((p, p), dtype=bool)
    nfft = sfft.next_fast_len(2 * n, real=True)
    step = max(1, _CHUNK_ELEMS // (2 * nfft))
    for start in range(0, iu.size, step):
        a, b = iu[start : start + step], ju[start : start + step]
        t, bw, dg, cl = lrv_columns(x[:, a] * x[:, b], spec, mask)
        for dst, src in ((theta, t), (bws, bw), (deg, dg), (clamp, cl)):
            dst[a, b] = src
            dst[b, a] = src
    return LrvMatrix(theta, bws, deg, clamp)
