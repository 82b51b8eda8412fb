"""Slot-driven Monte Carlo driver.

Trials are processed in fixed-size blocks. Block ``b`` draws from its own
generator seeded by ``(seed, b)``, so results do not depend on how blocks are
scheduled across workers; partial sums are reduced in block order.

Every method consumes the same random shapes in the same order, so two
methods run with the same seed see the same blockage draws and the same
small-scale fading (coupled realizations). Per slot and served UE the draws
are: blockage uniforms ``(n, n_bs)``, channel estimate ``(n, M, 2)``,
estimation innovation ``(n, M, 2)`` and a random beam ``(n, M)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .channel import correlate, draw_iid_rayleigh
from .link import DECODE_TOLERANCE, best_backoff, best_fixed_rate
from .protocol import (
    CP,
    NCP,
    AssociationState,
    HandoverEvent,
    actually_blocked,
    associate_batch,
    observe_blockers,
    scenario_prediction_table,
    select_csit_source,
)
from .scenario import ScenarioConfig, ValidatedScenario, validate

RA_DRAW = 2  # receive-antenna columns drawn per trial, whatever the method uses
PILOT_KEY = 1 << 40
REPORT_KEY = (1 << 40) + 1


@dataclass(frozen=True)
class MethodSpec:
    id: str
    cooperative: bool
    num_ra: int
    csit: str  # "self_pa", "front_pa" or "none"
    delay_mode: str | None  # None: take timing.delay_mode
    label: str


METHODS: dict[str, MethodSpec] = {
    m.id: m
    for m in (
        MethodSpec("M1", True, 2, "self_pa", "adaptive", "CP-MIMO-perfect CSIT"),
        MethodSpec("M2", True, 1, "self_pa", "adaptive", "CP-MISO-perfect CSIT"),
        MethodSpec("M3", True, 1, "self_pa", "non_adaptive", "CP-MISO-mismatched CSIT"),
        MethodSpec("M4", False, 1, "self_pa", "adaptive", "NCP-MISO-perfect CSIT"),
        MethodSpec("M5", True, 2, "none", None, "CP-MIMO-no CSIT"),
        MethodSpec("M6", True, 1, "none", None, "CP-MISO-no CSIT"),
        MethodSpec("M7", False, 1, "none", None, "NCP-MISO-no CSIT"),
        MethodSpec("F6_SELF_PA", True, 1, "self_pa", None, "One RA, self PA"),
        MethodSpec("F6_FRONT_PA", True, 2, "front_pa", None, "Two RAs, front vehicle PA"),
    )
}


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlotMetrics:
    slot_index: int
    ue: str
    serving_bs: int
    blocked: bool
    snr: float
    rate: float
    success: bool
    delivered_bits: float
    e2e_delay: float


@dataclass(frozen=True)
class SlotSummary:
    slot_index: int
    ue: str
    throughput: float  # bits/s
    success_rate: float
    outage: float
    blocked_fraction: float
    serving_share: tuple[float, ...]


@dataclass(frozen=True)
class AggregateResult:
    method: str
    trials: int
    e2e_throughput: float  # bits/s
    throughput_halfwidth: float
    throughput_bits_per_symbol: float
    outage_probability: float
    outage_halfwidth: float
    outage_events: int
    under_sampled: bool
    timeline: tuple[SlotSummary, ...]
    e2e_delays: Mapping[str, float]
    rho: Mapping[str, float]
    handover_log: tuple[HandoverEvent, ...] = ()
    policy: Mapping[str, object] = field(default_factory=dict)

    def slot_sums(self) -> np.ndarray:
        """Per-slot throughput summed over the served UEs."""
        n = 1 + max(s.slot_index for s in self.timeline)
        out = np.zeros(n)
        for s in self.timeline:
            out[s.slot_index] += s.throughput
        return out


# ---------------------------------------------------------------------------
# Run plan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _UePlan:
    id: str
    e2e_delay: float
    rho: float
    gain_los: np.ndarray  # (slots, n_bs)
    gain_nlos: np.ndarray
    nearest: np.ndarray  # (slots,)
    serving: np.ndarray | None  # (slots,) when association is deterministic
    actual_blocked: np.ndarray  # (slots, n_bs)
    state_policy: np.ndarray  # (slots, n_bs, 2): rate or backoff per (bs, los)
    ncp_rate: np.ndarray  # (slots,) mixture rate for NCP without CSIT


@dataclass(frozen=True)
class RunPlan:
    scenario: ValidatedScenario
    method: MethodSpec
    ues: tuple[_UePlan, ...]
    slots: int
    n_bs: int
    M: int
    L: int
    snr_scale: float
    policy_kind: str  # "capacity" or "fixed"
    outage_threshold: float
    handover_log: tuple[HandoverEvent, ...]


def _rng(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def _pilot_gains(M: int, num_ra: int, rho: float, csit: bool, trials: int, seed: int):
    rng = _rng(seed, PILOT_KEY)
    h = draw_iid_rayleigh((trials, M, RA_DRAW), rng)[:, :, :num_ra]
    e = draw_iid_rayleigh((trials, M, RA_DRAW), rng)[:, :, :num_ra]
    w = draw_iid_rayleigh((trials, M), rng)
    if csit:
        return kernels.mrt_gains(correlate(h, rho, e), h)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return kernels.random_gains(h, w), None


def build_plan(sc: ValidatedScenario, method: str | MethodSpec | None = None) -> RunPlan:
    """Resolve association, CSIT delays and rate policies ahead of the trials.

    Raises:
        AdaptiveInfeasible: if the method's CSIT delay cannot be met.
    """
    cfg = sc.config
    spec = METHODS[cfg.method.id] if method is None else (method if isinstance(method, MethodSpec) else METHODS[method])
    mcfg, blk, eng = cfg.method, cfg.blockage, cfg.engine
    n_bs, slots = len(sc.geometry.bs_positions), eng.slots
    mids = (np.arange(slots) + 0.5) * sc.slot_duration
    snr = sc.snr_scale
    policy_kind = "fixed" if (spec.csit == "none" or mcfg.fixed_rate is not None) else "capacity"

    table = None
    if blk.model == "kinematic":
        ahead = [v for v in cfg.vehicles if not v.served] or list(cfg.vehicles)
        reporter = max(ahead, key=lambda v: v.initial_position)
        rng = _rng(eng.seed, REPORT_KEY) if blk.speed_error_std > 0 else None
        table = scenario_prediction_table(sc, observe_blockers(sc, reporter.id, 0.0, rng))

    assoc = AssociationState(CP if spec.cooperative else NCP)
    ues = []
    for v in sc.served:
        choice = select_csit_source(spec.csit, v.antenna_separation, v.speed, sc.wavelength, sc.timing,
                                    gap=sc.front_gap(v) if spec.csit == "front_pa" else None,
                                    delay_mode=spec.delay_mode)
        dists = np.array([sc.distances(v, t) for t in mids])
        g_los = np.vectorize(lambda d: sc.large_scale_gain(d, True))(dists).reshape(slots, n_bs)
        g_nlos = np.vectorize(lambda d: sc.large_scale_gain(d, False))(dists).reshape(slots, n_bs)
        nearest = np.array([sc.nearest_bs(v, t) for t in mids], dtype=np.intp)

        actual = np.zeros((slots, n_bs), dtype=bool)
        serving = None
        if blk.model != "bernoulli":
            predicted = np.zeros((slots, n_bs), dtype=bool)
            for k in range(slots):
                if blk.model == "kinematic":
                    actual[k, nearest[k]] = actually_blocked(sc, v, mids[k])
                    predicted[k] = [table.blocked(v.id, j, k) for j in range(n_bs)]
            serving = np.array([associate_batch(g_los[k], predicted[k][None], spec.cooperative)[0]
                                for k in range(slots)], dtype=np.intp)
            for k in range(slots):
                reason = "predicted blockage" if predicted[k, nearest[k]] else "blockage cleared"
                assoc.update(k, v.id, int(serving[k]), reason)

        # rate policy per large-scale state
        policy = np.ones((slots, n_bs, 2))
        ncp_rate = np.zeros(slots)
        if mcfg.fixed_rate is not None:
            policy[:] = mcfg.fixed_rate
            ncp_rate[:] = mcfg.fixed_rate
        else:
            needs_search = spec.csit == "none" or (choice.rho < 1.0 and mcfg.backoff == "auto")
            if spec.csit != "none" and not needs_search:
                policy[:] = 1.0 if choice.rho >= 1.0 else float(mcfg.backoff)
            else:
                gt, ge = _pilot_gains(sc.radio.bs_antennas, spec.num_ra, choice.rho, spec.csit != "none",
                                      mcfg.pilot_trials, eng.seed)
                cache: dict[float, float] = {}
                for k in range(slots):
                    for j in range(n_bs):
                        for los, g in ((1, g_los[k, j]), (0, g_nlos[k, j])):
                            b = snr * g
                            if b not in cache:
                                cache[b] = (best_fixed_rate(gt, [(1.0, b)], mcfg.rate_grid_step)
                                            if spec.csit == "none" else best_backoff(gt, ge, b))
                            policy[k, j, los] = cache[b]
                    if spec.csit == "none":
                        j = nearest[k]
                        p = blk.probability if blk.model == "bernoulli" else 0.0
                        states = [(1.0 - p, snr * g_los[k, j])] + ([(p, snr * g_nlos[k, j])] if p > 0 else [])
                        ncp_rate[k] = best_fixed_rate(gt, states, mcfg.rate_grid_step)

        ues.append(_UePlan(v.id, sc.transmission_time + choice.acquisition_delay, choice.rho,
                           g_los, g_nlos, nearest, serving, actual, policy, ncp_rate))

    return RunPlan(sc, spec, tuple(ues), slots, n_bs, sc.radio.bs_antennas, sc.timing.codeword_length, snr,
                   policy_kind, mcfg.outage_threshold, tuple(assoc.handover_log))


# ---------------------------------------------------------------------------
# Block simulation
# ---------------------------------------------------------------------------

@dataclass
class _Partial:
    n: int
    bits: np.ndarray  # (slots, ues)
    success: np.ndarray
    outage: np.ndarray
    blocked: np.ndarray
    serving: np.ndarray  # (slots, ues, n_bs)
    trial_bits: float
    trial_bits_sq: float

    def __add__(self, other: "_Partial") -> "_Partial":
        return _Partial(self.n + other.n, self.bits + other.bits, self.success + other.success,
                        self.outage + other.outage, self.blocked + other.blocked, self.serving + other.serving,
                        self.trial_bits + other.trial_bits, self.trial_bits_sq + other.trial_bits_sq)


def _slot_draws(plan: RunPlan, n: int, rng: np.random.Generator):
    u = rng.random((n, plan.n_bs))
    h = draw_iid_rayleigh((n, plan.M, RA_DRAW), rng)
    e = draw_iid_rayleigh((n, plan.M, RA_DRAW), rng)
    w = draw_iid_rayleigh((n, plan.M), rng)
    return u, h, e, w


def _evaluate(plan: RunPlan, ue: _UePlan, k: int, n: int, draws):
    """Per-trial serving BS, blockage, SNR, rate and success for one (slot, UE)."""
    u, h, e, w = draws
    spec, blk = plan.method, plan.scenario.config.blockage
    rows = np.arange(n)
    if blk.model == "bernoulli":
        if blk.scope == "per_link":
            blocked = u < blk.probability
        else:
            blocked = np.zeros((n, plan.n_bs), dtype=bool)
            near = ue.nearest[k]
            blocked[:, near] = u[:, near] < blk.probability
        # CP sees the slot's draw before associating
        serving = associate_batch(ue.gain_los[k], blocked, spec.cooperative)
    else:
        blocked = np.broadcast_to(ue.actual_blocked[k], (n, plan.n_bs))
        serving = np.full(n, ue.serving[k], dtype=np.intp)
    los = ~blocked[rows, serving]
    budget = plan.snr_scale * np.where(los, ue.gain_los[k, serving], ue.gain_nlos[k, serving])

    h_est = h[:, :, : spec.num_ra]
    if spec.csit == "none":
        w = w / np.linalg.norm(w, axis=1, keepdims=True)
        gain = kernels.random_gains(h_est, w)
        gain_est = None
    else:
        truth = correlate(h_est, ue.rho, e[:, :, : spec.num_ra])
        gain, gain_est = kernels.mrt_gains(truth, h_est)
    snr = budget * gain

    pol = ue.state_policy[k, serving, los.astype(np.intp)]
    if plan.policy_kind == "capacity":
        rate = np.log2(1.0 + pol * budget * gain_est)
    elif spec.csit == "none" and not spec.cooperative and plan.scenario.config.method.fixed_rate is None:
        rate = np.full(n, ue.ncp_rate[k])
    else:
        rate = pol
    cap = np.log2(1.0 + snr)
    success = cap >= rate - DECODE_TOLERANCE
    return serving, ~los, snr, rate, success, cap


def _simulate_block(plan: RunPlan, block: int, n: int) -> _Partial:
    rng = _rng(plan.scenario.config.engine.seed, block)
    S, U = plan.slots, len(plan.ues)
    bits = np.zeros((S, U))
    succ = np.zeros((S, U))
    outg = np.zeros((S, U))
    blkd = np.zeros((S, U))
    serv = np.zeros((S, U, plan.n_bs))
    trial = np.zeros(n)
    for k in range(S):
        for i, ue in enumerate(plan.ues):
            serving, blocked, snr, rate, success, cap = _evaluate(plan, ue, k, n, _slot_draws(plan, n, rng))
            b = np.where(success, rate * plan.L, 0.0)
            trial += b
            bits[k, i] = b.sum()
            succ[k, i] = success.sum()
            outg[k, i] = np.count_nonzero(cap < plan.outage_threshold)
            blkd[k, i] = blocked.sum()
            serv[k, i] = np.bincount(serving, minlength=plan.n_bs)
    return _Partial(n, bits, succ, outg, blkd, serv, float(trial.sum()), float(np.dot(trial, trial)))


_WORKER_PLAN: RunPlan | None = None


def _init_worker(plan: RunPlan) -> None:
    global _WORKER_PLAN
    _WORKER_PLAN = plan


def _worker_block(args: tuple[int, int]) -> _Partial:
    return _simulate_block(_WORKER_PLAN, *args)


def _blocks(trials: int, size: int) -> list[tuple[int, int]]:
    return [(b, min(size, trials - b * size)) for b in range(math.ceil(trials / size))]


# ---------------------------------------------------------------------------
# Public drivers
# ---------------------------------------------------------------------------

def _with_engine(sc: ValidatedScenario, method: str | None, trials: int | None, base_seed: int | None,
                 workers: int | None) -> ValidatedScenario:
    cfg = sc.config
    eng = replace(cfg.engine, **{k: v for k, v in (("trials", trials), ("seed", base_seed), ("workers", workers))
                                 if v is not None})
    meth = cfg.method if method is None else replace(cfg.method, id=method)
    if eng == cfg.engine and meth == cfg.method:
        return sc
    return validate(cfg.replace(engine=eng, method=meth))


def run_monte_carlo(scenario: ValidatedScenario | ScenarioConfig, method: str | None = None, trials: int | None = None,
                    base_seed: int | None = None, workers: int | None = None) -> AggregateResult:
    """Aggregate throughput and outage over ``trials`` independent trials.

    Arguments left as ``None`` come from the scenario config. Results are
    bit-identical for any ``workers``.
    """
    sc = scenario if isinstance(scenario, ValidatedScenario) else validate(scenario)
    sc = _with_engine(sc, method, trials, base_seed, workers)
    plan = build_plan(sc)
    eng = sc.config.engine
    jobs = _blocks(eng.trials, eng.block_size)
    if eng.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(eng.workers, len(jobs)), initializer=_init_worker,
                                 initargs=(plan,)) as pool:
            parts = list(pool.map(_worker_block, jobs))
    else:
        parts = [_simulate_block(plan, b, n) for b, n in jobs]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return _aggregate(plan, total)


def _aggregate(plan: RunPlan, t: _Partial) -> AggregateResult:
    n = t.n
    delays = np.array([u.e2e_delay for u in plan.ues])
    trial_delay = plan.slots * float(delays.sum())
    mean_b = t.trial_bits / n
    var_b = max(t.trial_bits_sq / n - mean_b**2, 0.0) * n / max(n - 1, 1)
    thr = mean_b / trial_delay if trial_delay > 0 else 0.0
    hw = 1.96 * math.sqrt(var_b / n) / trial_delay if trial_delay > 0 else 0.0
    obs = n * plan.slots * len(plan.ues)
    events = int(round(t.outage.sum()))
    p_out = events / obs
    timeline = tuple(
        SlotSummary(k, ue.id, float(t.bits[k, i] / (n * ue.e2e_delay)) if ue.e2e_delay > 0 else 0.0,
                    float(t.success[k, i] / n), float(t.outage[k, i] / n), float(t.blocked[k, i] / n),
                    tuple(float(x) / n for x in t.serving[k, i]))
        for k in range(plan.slots) for i, ue in enumerate(plan.ues)
    )
    bw = plan.scenario.radio.bandwidth
    policy = {"kind": plan.policy_kind}
    if plan.policy_kind == "fixed":
        policy["rates"] = sorted({float(x) for u in plan.ues for x in np.unique(u.state_policy)})
    else:
        policy["backoff"] = sorted({float(x) for u in plan.ues for x in np.unique(u.state_policy)})
    return AggregateResult(
        method=plan.method.id,
        trials=n,
        e2e_throughput=thr,
        throughput_halfwidth=hw,
        throughput_bits_per_symbol=thr / bw,
        outage_probability=p_out,
        outage_halfwidth=1.96 * math.sqrt(p_out * (1 - p_out) / obs),
        outage_events=events,
        under_sampled=events < 100,
        timeline=timeline,
        e2e_delays={u.id: u.e2e_delay for u in plan.ues},
        rho={u.id: u.rho for u in plan.ues},
        handover_log=plan.handover_log,
        policy=policy,
    )


def run_slot(scenario: ValidatedScenario, method: str | None, slot_index: int, rng: np.random.Generator,
             ue: str | None = None, plan: RunPlan | None = None) -> SlotMetrics:
    """One transmission for one UE in one slot, drawing from ``rng``."""
    sc = _with_engine(scenario, method, None, None, None)
    plan = plan or build_plan(sc)
    uplan = plan.ues[0] if ue is None else next(u for u in plan.ues if u.id == ue)
    serving, blocked, snr, rate, success, _ = _evaluate(plan, uplan, slot_index, 1, _slot_draws(plan, 1, rng))
    ok = bool(success[0])
    return SlotMetrics(slot_index, uplan.id, int(serving[0]), bool(blocked[0]), float(snr[0]), float(rate[0]), ok,
                       float(rate[0]) * plan.L if ok else 0.0, uplan.e2e_delay)


def snr_samples(scenario: ValidatedScenario, method: str | None = None, trials: int | None = None,
                base_seed: int | None = None) -> np.ndarray:
    """Per-observation received SNR divided by the transmit SNR scale.

    Because association and beamforming do not depend on transmit power,
    ``P * samples`` is the SNR sample at any power ``P``; this gives whole
    outage-versus-SNR curves from one run.
    """
    sc = _with_engine(scenario, method, trials, base_seed, None)
    plan = build_plan(sc)
    out = []
    for b, n in _blocks(sc.config.engine.trials, sc.config.engine.block_size):
        rng = _rng(sc.config.engine.seed, b)
        for k in range(plan.slots):
            for ue in plan.ues:
                _, _, snr, _, _, _ = _evaluate(plan, ue, k, n, _slot_draws(plan, n, rng))
                out.append(snr / plan.snr_scale)
    return np.concatenate(out)


def e2e_throughput(slots: Sequence[SlotMetrics]) -> float:
    if not slots:
        raise ValueError("need at least one slot")
    delay = sum(s.e2e_delay for s in slots)
    return sum(s.delivered_bits for s in slots) / delay if delay > 0 else 0.0


def outage_probability(slots: Sequence[SlotMetrics], threshold: float) -> float:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if not slots:
        raise ValueError("need at least one slot")
    return sum(math.log2(1.0 + s.snr) < threshold for s in slots) / len(slots)


def sum_throughput_timeline(scenario: ValidatedScenario, variants: Mapping[str, str], trials: int | None = None,
                            base_seed: int | None = None, workers: int | None = None) -> dict[str, np.ndarray]:
    """Per-slot sum throughput of the served UEs for each ``{label: method id}``."""
    return {label: run_monte_carlo(scenario, m, trials, base_seed, workers).slot_sums()
            for label, m in variants.items()}
