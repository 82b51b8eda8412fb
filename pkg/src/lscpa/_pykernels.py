"""Pure-numpy implementations of the per-trial beamforming kernels.

Both functions work on a batch of ``n`` trials. Channel tensors have shape
``(n, M, R)``: M BS antennas, R receive antennas. Receive antenna ``r`` sees
``sum_m H[m, r] w[m]``; combining is maximum-ratio over ``r``.
"""

from __future__ import annotations

import numpy as np


def _dominant_direction(h_est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors ``u`` (n, M) spanning the dominant left singular direction, and sigma_1^2."""
    n, M, R = h_est.shape
    if R == 1:
        u = h_est[:, :, 0]
        lam = np.einsum("nm,nm->n", u.real, u.real) + np.einsum("nm,nm->n", u.imag, u.imag)
        return u / np.sqrt(lam)[:, None], lam
    if R == 2:
        h0, h1 = h_est[:, :, 0], h_est[:, :, 1]
        a = np.einsum("nm,nm->n", h0.real, h0.real) + np.einsum("nm,nm->n", h0.imag, h0.imag)
        c = np.einsum("nm,nm->n", h1.real, h1.real) + np.einsum("nm,nm->n", h1.imag, h1.imag)
        b = np.einsum("nm,nm->n", h0.conj(), h1)
        half = 0.5 * (a - c)
        lam = 0.5 * (a + c) + np.sqrt(half * half + (b * b.conj()).real)
        # two algebraically equivalent eigenvector forms; keep the better conditioned one
        v0a, v1a = b, (lam - a).astype(complex)
        v0b, v1b = (lam - c).astype(complex), b.conj()
        use_a = (np.abs(v0a) ** 2 + np.abs(v1a) ** 2) >= (np.abs(v0b) ** 2 + np.abs(v1b) ** 2)
        v0 = np.where(use_a, v0a, v0b)
        v1 = np.where(use_a, v1a, v1b)
        flat = (np.abs(v0) ** 2 + np.abs(v1) ** 2) == 0.0
        if np.any(flat):
            v0 = np.where(flat, 1.0 + 0j, v0)
            v1 = np.where(flat, 0j, v1)
        u = v0[:, None] * h0 + v1[:, None] * h1
        norm = np.sqrt(np.einsum("nm,nm->n", u.real, u.real) + np.einsum("nm,nm->n", u.imag, u.imag))
        return u / norm[:, None], lam
    uu, s, _ = np.linalg.svd(h_est, full_matrices=False)
    return uu[:, :, 0], s[:, 0] ** 2


def mrt_gains(h_true: np.ndarray, h_est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """MRT beam from ``h_est`` applied to ``h_true``.

    Returns:
        ``(gain_true, gain_est)``: combined beamforming gain on the true
        channel and the gain the transmitter predicts from its estimate.
    """
    u, lam = _dominant_direction(h_est)
    y = np.einsum("nmr,nm->nr", h_true, u.conj())
    return (y.real**2 + y.imag**2).sum(axis=1), lam


def random_gains(h_true: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Combined gain of fixed beams ``w`` (n, M) on ``h_true``."""
    y = np.einsum("nmr,nm->nr", h_true, w)
    return (y.real**2 + y.imag**2).sum(axis=1)
