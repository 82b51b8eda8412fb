"""Control plane: blocker reports, blockage prediction, BS association and CSIT sourcing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .channel import jakes_correlation, spatial_mismatch
from .errors import AdaptiveInfeasible, ShapeMismatch
from .link import CsitEstimate, CsitSource
from .scenario import TimingConfig, ValidatedScenario, VehicleSpec

CP = "CP"
NCP = "NCP"


@dataclass(frozen=True)
class BlockerReport:
    reporter_ue: str
    blocker_position: float
    blocker_speed: float
    reported_at: float = 0.0

    def __post_init__(self):
        if self.reported_at < 0:
            raise ValueError("reported_at must be >= 0")
        if self.blocker_speed < 0:
            raise ValueError("blocker_speed must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Linear longitudinal motion ``x(t) = initial_position + speed * t``."""

    initial_position: float
    speed: float

    def position(self, t: float) -> float:
        return self.initial_position + self.speed * t


@dataclass(frozen=True)
class SlotGrid:
    count: int
    duration: float
    start: float = 0.0

    def midpoint(self, k: int) -> float:
        return self.start + (k + 0.5) * self.duration

    @property
    def end(self) -> float:
        return self.start + self.count * self.duration


@dataclass(frozen=True)
class PredictionTable:
    """Set of (ue, bs, slot) triples predicted blocked; anything absent is clear."""

    blocked_entries: frozenset = frozenset()

    def blocked(self, ue: str, bs: int, slot: int) -> bool:
        return (ue, bs, slot) in self.blocked_entries

    def blocked_slots(self, ue: str, bs: int) -> list[int]:
        return sorted(k for (u, b, k) in self.blocked_entries if u == ue and b == bs)

    def __len__(self) -> int:
        return len(self.blocked_entries)


def predict_blockage_interval(report: BlockerReport, ue: Trajectory | VehicleSpec, shadow_halflength: float,
                              horizon: float = math.inf) -> tuple[float, float] | None:
    """Times ``t >= reported_at`` at which the blocker is within the shadow of the UE.

    The blocker is at ``report.blocker_position`` at ``report.reported_at``;
    the UE follows ``x_u(t) = ue.initial_position + ue.speed * t``. A
    permanent shadow is capped at ``horizon``.
    """
    t0 = report.reported_at
    offset = report.blocker_position - (ue.initial_position + ue.speed * t0)
    rel = report.blocker_speed - ue.speed
    s = shadow_halflength
    if rel == 0.0:
        return (t0, horizon) if abs(offset) <= s else None
    a, b = sorted(((-s - offset) / rel, (s - offset) / rel))
    lo, hi = max(t0 + a, t0), min(t0 + b, horizon)
    if hi < lo:
        return None
    return (lo, hi)


def build_prediction_table(reports: Iterable[BlockerReport], trajectories: Mapping[str, Trajectory | VehicleSpec],
                           grid: SlotGrid, shadow_halflength: float,
                           shadowed_bs: Callable[[str, int], Sequence[int]] | None = None) -> PredictionTable:
    """Mark slot ``k`` blocked for ``(ue, bs)`` when its midpoint lies in a predicted interval.

    ``shadowed_bs(ue, k)`` names the BS links a blocker alongside the UE
    obstructs in slot ``k``; by default only BS 0.
    """
    if shadowed_bs is None:
        shadowed_bs = lambda ue, k: (0,)  # noqa: E731
    entries = set()
    reports = list(reports)
    for ue, traj in trajectories.items():
        for rep in reports:
            iv = predict_blockage_interval(rep, traj, shadow_halflength, grid.end)
            if iv is None:
                continue
            for k in range(grid.count):
                if iv[0] <= grid.midpoint(k) <= iv[1]:
                    entries.update((ue, bs, k) for bs in shadowed_bs(ue, k))
    return PredictionTable(frozenset(entries))


def observe_blockers(sc: ValidatedScenario, reporter: str, t: float = 0.0,
                     rng: np.random.Generator | None = None) -> list[BlockerReport]:
    """Reports the reporter sends for every configured blocker at time ``t``.

    With ``blockage.speed_error_std > 0`` and an ``rng``, reported speeds carry
    Gaussian estimation error.
    """
    std = sc.config.blockage.speed_error_std
    out = []
    for b in sc.config.blockage.blockers:
        v = b.speed
        if std > 0 and rng is not None:
            v = max(0.0, v + std * rng.standard_normal())
        out.append(BlockerReport(reporter, b.initial_position + b.speed * t, v, t))
    return out


def actually_blocked(sc: ValidatedScenario, ue: VehicleSpec, t: float) -> bool:
    """True when some blocker is within the shadow half-length of ``ue`` at time ``t``."""
    s = sc.config.blockage.shadow_halflength
    xu = ue.initial_position + ue.speed * t
    return any(abs(b.initial_position + b.speed * t - xu) <= s for b in sc.config.blockage.blockers)


def scenario_prediction_table(sc: ValidatedScenario, reports: Iterable[BlockerReport]) -> PredictionTable:
    """Prediction table for the served UEs, with the shadow on each UE's nearest-BS link."""
    grid = SlotGrid(sc.config.engine.slots, sc.slot_duration)
    ues = {v.id: v for v in sc.served}

    def nearest(ue: str, k: int) -> tuple[int]:
        return (sc.nearest_bs(ues[ue], grid.midpoint(k)),)

    return build_prediction_table(reports, ues, grid, sc.config.blockage.shadow_halflength, nearest)


# ---------------------------------------------------------------------------
# Association
# ---------------------------------------------------------------------------

def associate_batch(gain_los: np.ndarray, blocked: np.ndarray, cooperative: bool) -> np.ndarray:
    """Serving BS per row of ``blocked`` (n, n_bs).

    ``gain_los`` (n_bs,) ranks the BSs; ties go to the lowest index. CP picks
    the best BS not flagged blocked, or the best overall when all are.
    NCP always picks the best overall.
    """
    g = np.asarray(gain_los, dtype=float)
    blocked = np.atleast_2d(np.asarray(blocked, dtype=bool))
    best = int(np.argmax(g))
    if not cooperative:
        return np.full(blocked.shape[0], best, dtype=np.intp)
    masked = np.where(blocked, -np.inf, g[None, :])
    pick = np.argmax(masked, axis=1)
    return np.where(blocked.all(axis=1), best, pick).astype(np.intp)


def associate(sc: ValidatedScenario, ue: VehicleSpec, slot: int, table: PredictionTable, mode: str) -> int:
    t = (slot + 0.5) * sc.slot_duration
    gains = np.array([sc.large_scale_gain(d, los=True) for d in sc.distances(ue, t)])
    blocked = np.array([table.blocked(ue.id, j, slot) for j in range(gains.size)])
    return int(associate_batch(gains, blocked[None, :], mode == CP)[0])


@dataclass(frozen=True)
class HandoverEvent:
    slot: int
    ue: str
    from_bs: int
    to_bs: int
    reason: str


@dataclass
class AssociationState:
    mode: str
    serving_bs: dict[str, int] = field(default_factory=dict)
    handover_log: list[HandoverEvent] = field(default_factory=list)

    def update(self, slot: int, ue: str, bs: int, reason: str = "") -> None:
        prev = self.serving_bs.get(ue)
        if prev is not None and prev != bs:
            if self.mode == NCP:
                raise ValueError("NCP association cannot change the serving BS")
            self.handover_log.append(HandoverEvent(slot, ue, prev, bs, reason))
        self.serving_bs[ue] = bs


def handover_log_csv(log: Sequence[HandoverEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "ue", "from_bs", "to_bs", "reason"])
    for e in log:
        w.writerow([e.slot, e.ue, e.from_bs, e.to_bs, e.reason])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# CSIT source
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CsitChoice:
    source: CsitSource
    acquisition_delay: float
    rho: float


def select_csit_source(source: str, separation: float, speed: float, wavelength: float, timing: TimingConfig,
                       gap: float | None = None, delay_mode: str | None = None) -> CsitChoice:
    """Acquisition delay and correlation for a CSIT source.

    Args:
        source: ``"self_pa"``, ``"front_pa"`` or ``"none"``.
        separation: PA-to-RA distance on the vehicle (m).
        gap: distance to the vehicle ahead, for ``"front_pa"``.
        delay_mode: overrides ``timing.delay_mode``.

    Raises:
        AdaptiveInfeasible: when the delay needed for the RA to reach the
            sounding point is below the minimum processing delay.
    """
    dmin = timing.min_processing_delay
    mode = delay_mode or timing.delay_mode
    if source == "none":
        return CsitChoice(CsitSource.NONE, dmin, 0.0)
    if source == "front_pa":
        if gap is None or gap < 0:
            raise ValueError("front-vehicle CSIT needs a gap >= 0")
        need = gap / speed if speed > 0 else math.inf
        if need < dmin:
            raise AdaptiveInfeasible(speed, gap / dmin if dmin > 0 else math.inf, need, dmin)
        return CsitChoice(CsitSource.FRONT_PA, need, 1.0)
    if source != "self_pa":
        raise ValueError(f"unknown CSIT source {source!r}")
    if mode == "non_adaptive":
        rho = jakes_correlation(spatial_mismatch(separation, speed, dmin), wavelength)
        return CsitChoice(CsitSource.SELF_PA, dmin, float(rho))
    need = separation / speed if speed > 0 else math.inf
    if need < dmin:
        raise AdaptiveInfeasible(speed, separation / dmin if dmin > 0 else math.inf, need, dmin)
    return CsitChoice(CsitSource.SELF_PA, need, 1.0)


def max_adaptive_speed(separation: float, timing: TimingConfig) -> float:
    """Highest speed at which the RA reaches the sounding point within the minimum delay."""
    return separation / timing.min_processing_delay if timing.min_processing_delay > 0 else math.inf


def combine_csit(estimates: Sequence[CsitEstimate], strategy: str = "select_best") -> CsitEstimate:
    """Merge several estimates of the same channel.

    ``select_best`` keeps the highest correlation (ties: shortest delay).
    ``linear_mmse`` (experimental) weights estimate ``i`` by
    ``rho_i / (1 - rho_i^2)`` and reports the correlation of the blend,
    assuming independent estimation errors.
    """
    if not estimates:
        raise ValueError("need at least one estimate")
    shapes = {None if e.matrix is None else np.shape(e.matrix) for e in estimates}
    if len(shapes) > 1:
        raise ShapeMismatch(f"estimates disagree on shape: {sorted(map(str, shapes))}")
    best = min(estimates, key=lambda e: (-e.rho, e.acquisition_delay))
    if strategy == "select_best" or len(estimates) == 1 or best.rho >= 1.0 or best.matrix is None:
        return best
    if strategy != "linear_mmse":
        raise ValueError(f"unknown combining strategy {strategy!r}")
    rho = np.array([e.rho for e in estimates])
    a = rho / (1.0 - rho**2)
    signal = float(np.sum(a * rho))
    scale = math.sqrt(signal**2 + float(np.sum(a**2 * (1.0 - rho**2))))
    if scale == 0.0:
        return best
    mat = sum(ai * np.asarray(e.matrix) for ai, e in zip(a, estimates)) / scale
    return CsitEstimate(mat, best.source, signal / scale, max(e.acquisition_delay for e in estimates))
