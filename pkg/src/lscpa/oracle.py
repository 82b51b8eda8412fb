"""Independent analytic and brute-force validators.

Nothing in here imports from the channel, link or engine modules; the
routines are deliberately separate implementations so that a bug on the
simulation path cannot be mirrored by the check.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import InsufficientSamples

_SERIES_LIMIT = 12.0


def _j0_series(x: float) -> float:
    q = -(x * x) / 4.0
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)) and k > 2:
            return total


def _j0_asymptotic(x: float) -> float:
    # Hankel expansion; a_k = prod_{j<=k} (2j-1)^2 / (k! 8^k)
    p = 0.0
    q = 0.0
    a = 1.0
    prev = math.inf
    k = 0
    while True:
        t = a / x**k
        if t > prev or t < 1e-18:
            break
        prev = t
        if k % 2 == 0:
            p += (-1) ** (k // 2) * t
        else:
            q -= (-1) ** (k // 2) * t
        k += 1
        a *= (2 * k - 1) ** 2 / (k * 8.0)
    chi = x - math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero.

    Power series below |x| = 12, Hankel asymptotic expansion above.
    Absolute error stays below 1e-9 on [0, 100].
    """
    x = abs(float(x))
    if x < _SERIES_LIMIT:
        return _j0_series(x)
    return _j0_asymptotic(x)


def regularized_lower_gamma(a: int, x: float) -> float:
    """P(a, x) for integer shape ``a >= 1``."""
    if a < 1 or int(a) != a:
        raise ValueError(f"shape must be a positive integer, got {a}")
    if x <= 0:
        return 0.0
    if x < a + 1:
        # P(a,x) = e^-x x^a / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k))
        term = 1.0
        total = 1.0
        n = a
        while term > 1e-17 * total:
            n += 1
            term *= x / n
            total += term
        return math.exp(-x + a * math.log(x) - math.lgamma(a + 1)) * total
    # Q(a,x) = e^-x sum_{k<a} x^k / k!
    term = 1.0
    total = 1.0
    for k in range(1, a):
        term *= x / k
        total += term
    return 1.0 - math.exp(-x) * total


def mrt_outage_analytic(M: int, mean_snr: float, rate_threshold: float) -> float:
    """Outage of an M-antenna MRT link with perfect CSIT in i.i.d. Rayleigh fading.

    The beamformed SNR is ``mean_snr * ||h||^2`` with ``||h||^2 ~ Gamma(M, 1)``.
    """
    if rate_threshold <= 0:
        return 0.0
    x = (2.0**rate_threshold - 1.0) / mean_snr
    return regularized_lower_gamma(int(M), x)


class CorrelationEstimate(NamedTuple):
    rho: float
    imag: float
    stderr: float
    n: int


def empirical_correlation(a, b) -> CorrelationEstimate:
    """Normalized sample cross-correlation E[a conj(b)] / sqrt(E|a|^2 E|b|^2)."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise ValueError("sample streams must have equal length")
    n = a.size
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    z = a * np.conj(b)
    norm = math.sqrt(float(np.mean(np.abs(a) ** 2)) * float(np.mean(np.abs(b) ** 2)))
    mean = complex(np.mean(z)) / norm
    stderr = float(np.std(z.real, ddof=1)) / norm / math.sqrt(n)
    return CorrelationEstimate(mean.real, mean.imag, stderr, n)


def _quadrature_cells(points: int, span: float = 5.0):
    """Cell-midpoint values and exact cell masses for one N(0, 1/2) quadrature."""
    sigma = math.sqrt(0.5)
    edges = np.linspace(-span * sigma, span * sigma, points + 1)
    cdf = np.array([0.5 * (1.0 + math.erf(e / (sigma * math.sqrt(2.0)))) for e in edges])
    mass = np.diff(cdf)
    mass /= mass.sum()
    mid = 0.5 * (edges[:-1] + edges[1:])
    return mid, mass


def tiny_bruteforce_outage(M: int, points: int, mean_snr: float, rate_threshold: float) -> float:
    """Outage by exhaustive summation over a quantized complex-Gaussian grid.

    Each real/imaginary component is replaced by ``points`` cells; every
    combination of cells is enumerated (M <= 2).
    """
    if M not in (1, 2):
        raise ValueError("brute force only supports M in {1, 2}")
    if rate_threshold <= 0:
        return 0.0
    threshold = (2.0**rate_threshold - 1.0) / mean_snr
    mid, mass = _quadrature_cells(points)
    # one antenna: all (re, im) pairs
    v1 = (mid[:, None] ** 2 + mid[None, :] ** 2).ravel()
    m1 = (mass[:, None] * mass[None, :]).ravel()
    if M == 1:
        return float(m1[v1 < threshold].sum())
    order = np.argsort(v1, kind="stable")
    vs, cm = v1[order], np.concatenate(([0.0], np.cumsum(m1[order])))
    # pairs (i, j) with v_i + v_j < t, summed exactly via sorted partial masses
    idx = np.searchsorted(vs, threshold - v1, side="left")
    return float(np.sum(m1 * cm[idx]))
