"""Beamforming, received SNR, rate selection and decoding for one transmission."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateChannel, PolicyMismatch


class CsitSource(enum.Enum):
    SELF_PA = "self_pa"
    FRONT_PA = "front_pa"
    PERFECT = "perfect"
    NONE = "none"


@dataclass(frozen=True)
class CsitEstimate:
    matrix: np.ndarray | None
    source: CsitSource
    rho: float
    acquisition_delay: float

    def __post_init__(self):
        if self.source is CsitSource.NONE and self.matrix is not None:
            raise ValueError("a NONE estimate carries no matrix")
        if self.source is CsitSource.PERFECT and self.rho != 1.0:
            raise ValueError("a PERFECT estimate must have rho == 1")


@dataclass(frozen=True)
class LinkOutcome:
    snr: float
    rate: float
    success: bool
    delivered_bits: float
    e2e_delay: float = 0.0


@dataclass(frozen=True)
class CapacityAdaptive:
    backoff: float = 1.0


@dataclass(frozen=True)
class FixedRate:
    rate: float


def mrt_beamformer(estimate: np.ndarray) -> np.ndarray:
    """Unit-norm transmit beam maximizing the combined gain on ``estimate``.

    ``estimate`` is (M,) or (M, N_r). The beam is the conjugated dominant
    left singular vector, so ``|h^T w| = ||h||`` for a single receive antenna.
    """
    h = np.asarray(estimate, dtype=complex)
    if h.ndim == 1:
        h = h[:, None]
    if not np.any(h):
        raise DegenerateChannel("cannot beamform on an all-zero estimate")
    if h.shape[1] == 1:
        return np.conj(h[:, 0]) / np.linalg.norm(h[:, 0])
    u = np.linalg.svd(h, full_matrices=False)[0][:, 0]
    # fix the global phase so the result is deterministic
    k = int(np.argmax(np.abs(u)))
    u = u * (abs(u[k]) / u[k])
    return np.conj(u)


def random_beamformer(M: int, rng: np.random.Generator) -> np.ndarray:
    """Isotropically distributed unit vector in C^M."""
    z = rng.standard_normal((M, 2))
    w = z[:, 0] + 1j * z[:, 1]
    return w / np.linalg.norm(w)


def received_snr(truth: np.ndarray, w: np.ndarray, tx_power: float, large_scale: float, noise: float) -> float:
    """SNR after MRC over the receive antennas: ``P G / N * sum_r |h_r^T w|^2``."""
    h = np.asarray(truth, dtype=complex)
    if h.ndim == 1:
        h = h[:, None]
    y = h.T @ np.asarray(w, dtype=complex)
    return float(tx_power * large_scale / noise * np.sum(np.abs(y) ** 2))


def select_rate(csit: CsitEstimate, link_budget: float, policy: CapacityAdaptive | FixedRate) -> float:
    """Committed rate in bits/symbol.

    ``link_budget`` is ``P G / N``. Capacity-adaptive selection treats the
    estimate as the true channel, scaled by ``policy.backoff``.
    """
    if isinstance(policy, FixedRate):
        return float(policy.rate)
    if csit.source is CsitSource.NONE or csit.matrix is None:
        raise PolicyMismatch("capacity-adaptive rate needs a channel estimate")
    w = mrt_beamformer(csit.matrix)
    gamma_hat = received_snr(csit.matrix, w, link_budget, 1.0, 1.0)
    return math.log2(1.0 + policy.backoff * gamma_hat)


# absorbs rounding when the committed rate equals capacity exactly
DECODE_TOLERANCE = 1e-9


def decode(rate: float, snr: float, codeword_length: int, e2e_delay: float = 0.0) -> LinkOutcome:
    ok = math.log2(1.0 + snr) >= rate - DECODE_TOLERANCE
    return LinkOutcome(snr, rate, ok, rate * codeword_length if ok else 0.0, e2e_delay)


# ---------------------------------------------------------------------------
# Rate policies on pilot samples
# ---------------------------------------------------------------------------

def rate_grid(step: float, upper: float) -> np.ndarray:
    n = max(1, int(math.ceil(upper / step)))
    return np.round(step * np.arange(1, n + 1), 10)


def best_fixed_rate(gain_samples: np.ndarray, states: Sequence[tuple[float, float]], step: float = 0.1) -> float:
    """Grid-searched fixed rate maximizing expected delivered rate.

    Args:
        gain_samples: pilot draws of the combined beam gain (unit link budget).
        states: ``(weight, link_budget)`` pairs describing what the
            transmitter knows about the large-scale state.
        step: grid resolution in bits/symbol.
    """
    g = np.sort(np.asarray(gain_samples, dtype=float))
    n = g.size
    top = max(math.log2(1.0 + b * g[-1]) for _, b in states)
    grid = rate_grid(step, top)
    score = np.zeros_like(grid)
    for weight, budget in states:
        # fraction of pilot draws with capacity >= R
        need = (2.0**grid - 1.0) / budget
        ok = 1.0 - np.searchsorted(g, need, side="left") / n
        score += weight * grid * ok
    return float(grid[int(np.argmax(score))])


def best_backoff(gain_true: np.ndarray, gain_est: np.ndarray, budget: float,
                 grid: np.ndarray | None = None) -> float:
    """Backoff factor maximizing pilot throughput for capacity-adaptive rates on stale CSIT."""
    if grid is None:
        grid = np.round(np.arange(1, 101) * 0.01, 2)
    cap = np.log2(1.0 + budget * np.asarray(gain_true))
    ge = np.asarray(gain_est)
    best, best_val = 1.0, -1.0
    for beta in grid:
        r = np.log2(1.0 + beta * budget * ge)
        val = float(np.mean(np.where(cap >= r, r, 0.0)))
        if val > best_val:
            best, best_val = float(beta), val
    return best
