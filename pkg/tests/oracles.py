"""Slow, loop-based reference implementations used only by the tests."""

import math

import numpy as np


def jacobi_eigenvalues(a, tol=1e-14, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float)
    p = a.shape[0]
    if p == 1:
        return a.ravel().copy()
    fro = np.sqrt(np.sum(a**2))
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * max(fro, 1e-300):
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                if a[i, j] == 0.0:
                    continue
                tau = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
                if abs(tau) > 1e150:
                    t = 1.0 / (2.0 * tau)
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ri, rj = a[i].copy(), a[j].copy()
                a[i], a[j] = c * ri - s * rj, s * ri + c * rj
                ci, cj = a[:, i].copy(), a[:, j].copy()
                a[:, i], a[:, j] = c * ci - s * cj, s * ci + c * cj
    return np.sort(np.diag(a))[::-1]


def brute_cov(x):
    """Covariance with 1/n normalization by explicit triple loop."""
    n, p = x.shape
    means = [sum(x[t, i] for t in range(n)) / n for i in range(p)]
    out = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            out[i, j] = sum((x[t, i] - means[i]) * (x[t, j] - means[j]) for t in range(n)) / n
    return out


def brute_cai_liu(x):
    n, p = x.shape
    xc = x - x.mean(axis=0)
    s = brute_cov(x)
    out = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            out[i, j] = sum((xc[t, i] * xc[t, j] - s[i, j]) ** 2 for t in range(n)) / n
    return out


def kernel(kind, x):
    x = abs(x)
    if kind == "quadratic-spectral":
        if x == 0:
            return 1.0
        z = 6 * math.pi * x / 5
        return 25 / (12 * math.pi**2 * x**2) * (math.sin(z) / z - math.cos(z))
    if kind == "bartlett":
        return max(1 - x, 0.0)
    if kind == "parzen":
        if x <= 0.5:
            return 1 - 6 * x**2 + 6 * x**3
        return 2 * (1 - x) ** 3 if x <= 1 else 0.0
    if kind == "tukey-hanning":
        return (1 + math.cos(math.pi * x)) / 2 if x <= 1 else 0.0
    raise ValueError(kind)


def direct_lrv(z, kind, bandwidth):
    """Kernel-weighted sum of 1/n autocovariances over every lag."""
    z = np.asarray(z, dtype=float)
    n = z.size
    d = z - z.mean()
    total = 0.0
    for k in range(-(n - 1), n):
        m = abs(k)
        gam = float(np.dot(d[m:], d[: n - m])) / n
        total += kernel(kind, k / bandwidth) * gam
    return total


def andrews_qs_bandwidth(z):
    """AR(1) plug-in bandwidth for the quadratic-spectral kernel."""
    d = np.asarray(z, dtype=float) - np.mean(z)
    rho = float(np.dot(d[1:], d[:-1]) / np.dot(d[:-1], d[:-1]))
    rho = min(max(rho, -0.97), 0.97)
    alpha = 4 * rho**2 / (1 - rho) ** 4
    return 1.3221 * (alpha * d.size) ** 0.2
