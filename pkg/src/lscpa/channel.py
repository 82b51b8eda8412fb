"""Large-scale gain and spatially correlated small-scale Rayleigh fading."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError


@dataclass(frozen=True)
class ChannelRealization:
    small_scale: np.ndarray  # (M, N_r), unit-variance entries
    large_scale_gain: float
    los: bool
    position_stamp: float
    time_stamp: float


@dataclass(frozen=True)
class MismatchModel:
    mismatch_distance: float
    wavelength: float

    @property
    def correlation(self) -> float:
        return jakes_correlation(self.mismatch_distance, self.wavelength)


def pathloss_gain(distance, exponent: float, reference: float = 1.0):
    """Linear power gain ``(distance / reference) ** -exponent``.

    Raises:
        DomainError: if ``distance < reference`` or ``reference <= 0``.
    """
    if reference <= 0:
        raise DomainError(f"reference distance must be > 0, got {reference}")
    d = np.asarray(distance, dtype=float)
    if np.any(d < reference):
        raise DomainError(f"distance {distance} is below the reference distance {reference}")
    g = (d / reference) ** (-exponent)
    return float(g) if g.ndim == 0 else g


def spatial_mismatch(separation: float, speed: float, delay: float) -> float:
    """Distance between the PA sounding point and the RA position after ``delay``."""
    return abs(separation - speed * delay)


def jakes_correlation(mismatch, wavelength: float):
    """Correlation ``J0(2 pi d / lambda)`` between channels ``d`` metres apart."""
    if wavelength <= 0:
        raise DomainError(f"wavelength must be > 0, got {wavelength}")
    r = special.j0(2.0 * math.pi * (np.asarray(mismatch, dtype=float) / wavelength))
    return float(r) if np.ndim(r) == 0 else r


def draw_iid_rayleigh(shape, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    z = rng.standard_normal((*np.atleast_1d(shape), 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def correlate(base: np.ndarray, rho, innovation: np.ndarray) -> np.ndarray:
    """``rho * base + sqrt(1 - rho^2) * innovation`` with a caller-supplied innovation.

    ``rho`` may be a scalar or broadcast against the leading axes of ``base``.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) > 1):
        raise DomainError("correlation must satisfy |rho| <= 1")
    if rho.ndim:
        rho = rho.reshape(rho.shape + (1,) * (base.ndim - rho.ndim))
    return rho * base + np.sqrt(1.0 - rho * rho) * innovation


def draw_correlated(base: np.ndarray, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Fresh channel with correlation ``rho`` to ``base`` and the same marginal."""
    if abs(rho) > 1:
        raise DomainError(f"correlation must satisfy |rho| <= 1, got {rho}")
    return correlate(base, rho, draw_iid_rayleigh(np.shape(base), rng))
