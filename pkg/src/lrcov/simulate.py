"""
Covariance designs and a stationary Gaussian VAR(1) sampler.

Every design fixes a stationary covariance ``Sigma_y`` and a diagonal
coefficient matrix ``C``; the innovation covariance is then
``Sigma_eps = Sigma_y - C Sigma_y C'`` so that ``Sigma_y`` is the stationary
covariance of ``y_t = C y_{t-1} + eps_t``.

Random numbers come from numpy's PCG64 generator seeded through
``SeedSequence``; identical seeds give bitwise-identical draws on any platform
numpy supports.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from lrcov.errors import ConfigError, ConstructionError, NumericalError
from lrcov.linalg import symmetrize
from lrcov.panel import TimeSeriesPanel

__all__ = [
    "SimInstance",
    "SimModelSpec",
    "build_model1",
    "build_model2",
    "build_adversarial",
    "build_instance",
    "sample_var1",
    "make_rng",
    "config_hash",
]

Seed = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def config_hash(*parts) -> int:
    """Stable 32-bit hash of a configuration, used to derive seed streams."""
    return zlib.crc32("|".join(str(p) for p in parts).encode())


@dataclass(frozen=True)
class SimInstance:
    kind: str
    sigma_true: np.ndarray
    phi: np.ndarray
    sigma_eps: np.ndarray
    support_true: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.sigma_true.shape[0]


@dataclass(frozen=True)
class SimModelSpec:
    """Parameters of a simulation design.

    Only the fields relevant to ``kind`` are used.  The adversarial defaults
    ``rho=0.9`` and ``c_a=6`` are working values, not values fixed by theory.
    """

    kind: str = "model2"
    p: int = 100
    n: int = 500
    bernoulli_p: float = 0.2
    unif_lo: float = 0.3
    unif_hi: float = 0.8
    band: int = 10
    rho: float = 0.9
    c_a: float = 6.0
    s1: int = 8

    def key(self) -> tuple:
        if self.kind == "model1":
            return (self.kind, self.p, self.bernoulli_p, self.unif_lo, self.unif_hi)
        if self.kind == "model2":
            return (self.kind, self.p, self.band)
        return (self.kind, self.p, self.n, self.rho, self.c_a, self.s1)


def _finish(kind, sigma, phi_diag, meta) -> SimInstance:
    sigma = symmetrize(sigma)
    phi = np.diag(phi_diag)
    eps = symmetrize(sigma - phi @ sigma @ phi.T)
    try:
        np.linalg.cholesky(eps)
    except np.linalg.LinAlgError:
        raise ConstructionError(f"{kind}: innovation covariance is not positive definite") from None
    support = sigma != 0
    np.fill_diagonal(support, True)
    return SimInstance(kind, sigma, phi, eps, support, meta)


def _two_block_coeffs(p: int) -> np.ndarray:
    h = p // 2
    return np.r_[np.full(h, 0.5), np.full(h, 0.8)]


def _check_even(p: int) -> None:
    if p < 4 or p % 2:
        raise ConfigError(f"p must be even and >= 4, got {p}")


def build_model1(
    p: int,
    seed: Seed = None,
    bernoulli_p: float = 0.2,
    unif_lo: float = 0.3,
    unif_hi: float = 0.8,
) -> SimInstance:
    """Sparse design without ordering.

    ``Sigma_y = diag(A1, 4I)`` with ``A1 = B + eps*I``, ``B`` symmetric with
    independent ``unif(lo, hi) * Bernoulli(bernoulli_p)`` entries on and below
    the diagonal, and ``eps = max(-lambda_min(B), 0) + 0.01``.
    """
    _check_even(p)
    rng = make_rng(seed)
    h = p // 2
    il = np.tril_indices(h)
    vals = rng.uniform(unif_lo, unif_hi, il[0].size) * (rng.random(il[0].size) < bernoulli_p)
    b = np.zeros((h, h))
    b[il] = vals
    b = np.tril(b) + np.tril(b, -1).T
    shift = max(-np.linalg.eigvalsh(b)[0], 0.0) + 0.01
    a1 = b + shift * np.eye(h)
    sigma = np.zeros((p, p))
    sigma[:h, :h] = a1
    sigma[h:, h:] = 4.0 * np.eye(h)
    return _finish("model1", sigma, _two_block_coeffs(p), {"eps_shift": shift})


def build_model2(p: int, band: int = 10) -> SimInstance:
    """Banded design ``Sigma_y = diag(A1, 4I)`` with ``A1_ij = (1 - |i-j|/band)_+``."""
    _check_even(p)
    h = p // 2
    d = np.abs(np.subtract.outer(np.arange(h), np.arange(h)))
    a1 = np.clip(1.0 - d / band, 0.0, None)
    sigma = np.zeros((p, p))
    sigma[:h, :h] = a1
    sigma[h:, h:] = 4.0 * np.eye(h)
    return _finish("model2", sigma, _two_block_coeffs(p), {})


def build_adversarial(p: int, n: int, rho: float = 0.9, c_a: float = 6.0, s1: int = 8) -> SimInstance:
    """Design on which universal and contemporaneous-variance thresholds fail.

    The first ``s0 = floor(s1/4)`` coordinates are white noise with common
    correlation ``a_n = c_a * sqrt(log p / n)``; the remaining coordinates are
    independent unit-variance AR(1) series with coefficient ``rho``, whose
    cross products have long-run variance ``(1 + rho^2) / (1 - rho^2)``.
    """
    if not 0 < rho < 1:
        raise ConfigError(f"rho must lie in (0, 1), got {rho}")
    if s1 < 8:
        raise ConfigError(f"s1 must be >= 8, got {s1}")
    s0 = s1 // 4
    if p <= s0 + 1:
        raise ConfigError(f"p={p} too small for s0={s0}")
    a_n = c_a * np.sqrt(np.log(p) / n)
    if not a_n < 1:
        raise ConfigError(f"a_n = {a_n:.4f} >= 1; the first block would not be positive definite")
    sigma = np.eye(p)
    sigma[:s0, :s0] = (1 - a_n) * np.eye(s0) + a_n
    phi = np.r_[np.zeros(s0), np.full(p - s0, rho)]
    theta0 = (1 + rho**2) / (1 - rho**2)
    meta = {"s0": s0, "a_n": float(a_n), "theta0": float(theta0), "rho": rho, "c_a": c_a}
    return _finish("adversarial", sigma, phi, meta)


def build_instance(spec: SimModelSpec, seed: Seed = None) -> SimInstance:
    if spec.kind == "model1":
        return build_model1(spec.p, seed, spec.bernoulli_p, spec.unif_lo, spec.unif_hi)
    if spec.kind == "model2":
        return build_model2(spec.p, spec.band)
    if spec.kind == "adversarial":
        return build_adversarial(spec.p, spec.n, spec.rho, spec.c_a, spec.s1)
    raise ConfigError(f"unknown model {spec.kind!r}; choose model1, model2 or adversarial")


def sample_var1(inst: SimInstance, n: int, seed: Seed = None) -> TimeSeriesPanel:
    """Draw ``y_1..y_n`` from the stationary Gaussian VAR(1) of ``inst``.

    ``y_0`` is drawn from ``N(0, Sigma_y)`` so the sample is stationary from
    the first row.
    """
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    rng = make_rng(seed)
    p = inst.p
    try:
        l_eps = np.linalg.cholesky(inst.sigma_eps)
        l_y = np.linalg.cholesky(inst.sigma_true)
    except np.linalg.LinAlgError:
        raise NumericalError("Cholesky factorization failed for the simulation design") from None
    phi = inst.phi
    diagonal = np.count_nonzero(phi - np.diag(np.diag(phi))) == 0
    c = np.diag(phi)
    y = np.empty((n, p))
    prev = l_y @ rng.standard_normal(p)
    shocks = rng.standard_normal((n, p)) @ l_eps.T
    for t in range(n):
        prev = (c * prev if diagonal else phi @ prev) + shocks[t]
        y[t] = prev
    return TimeSeriesPanel(y)
