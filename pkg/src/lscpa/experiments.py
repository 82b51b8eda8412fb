"""Figure presets, parameter sweeps and result files.

Each preset fixes a base scenario per curve, a sweep axis and its grid.
:func:`reproduce` runs every curve and writes ``<out>/<preset>/<curve>.csv``
plus ``manifest.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .engine import METHODS, run_monte_carlo, snr_samples
from .errors import AdaptiveInfeasible, EmptyMethodSet, UnknownPreset
from .protocol import max_adaptive_speed
from .scenario import (
    SPEED_OF_LIGHT,
    BlockageConfig,
    BlockerSpec,
    EngineConfig,
    Geometry,
    MethodConfig,
    Physical,
    RadioConfig,
    ScenarioConfig,
    TimingConfig,
    TransmitSnr,
    VehicleSpec,
    config_to_dict,
    validate,
)

AXES = ("snr_db", "speed_kmh", "gap_m", "tx_power_dbm", "slot")


def apply_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Scenario with one swept parameter set to ``value``."""
    if axis == "snr_db":
        return cfg.replace(radio=replace(cfg.radio, power=TransmitSnr(float(value))))
    if axis == "tx_power_dbm":
        power = cfg.radio.power
        if not isinstance(power, Physical):
            raise ValueError("tx_power_dbm axis needs a physical power model")
        return cfg.replace(radio=replace(cfg.radio, power=replace(power, tx_power_dbm=float(value))))
    if axis == "speed_kmh":
        return cfg.replace(vehicles=tuple(replace(v, speed=value / 3.6) for v in cfg.vehicles))
    if axis == "gap_m":
        served = [v for v in cfg.vehicles if v.served]
        ref = max(v.initial_position for v in served)
        out = []
        for v in cfg.vehicles:
            if not v.served:
                v = replace(v, initial_position=ref + float(value))
            out.append(v)
        return cfg.replace(vehicles=tuple(out))
    raise ValueError(f"unknown axis {axis!r}; expected one of {AXES}")


def parse_axis(spec: str) -> tuple[str, list[float]]:
    """``"name=start:stop:step"`` or ``"name=v1,v2,..."`` to ``(name, values)``."""
    name, _, body = spec.partition("=")
    if not body:
        raise ValueError(f"axis spec {spec!r} must look like name=start:stop:step or name=v1,v2")
    if ":" in body:
        start, stop, step = (float(x) for x in body.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 10) for i in range(n)]
    else:
        values = [float(x) for x in body.split(",") if x.strip()]
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError(f"axis {name!r}: values must be finite")
    return name.strip(), values


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

THROUGHPUT_COLUMNS = ("point", "method", "status", "throughput_bps", "throughput_halfwidth_bps",
                      "throughput_bits_per_symbol", "outage", "outage_halfwidth", "outage_events", "under_sampled",
                      "e2e_delay_s", "rho", "trials")


def _row(axis_value: float, result) -> dict[str, Any]:
    delays = list(result.e2e_delays.values())
    rhos = list(result.rho.values())
    return {
        "point": axis_value,
        "method": result.method,
        "status": "ok",
        "throughput_bps": result.e2e_throughput,
        "throughput_halfwidth_bps": result.throughput_halfwidth,
        "throughput_bits_per_symbol": result.throughput_bits_per_symbol,
        "outage": result.outage_probability,
        "outage_halfwidth": result.outage_halfwidth,
        "outage_events": result.outage_events,
        "under_sampled": int(result.under_sampled),
        "e2e_delay_s": float(np.mean(delays)),
        "rho": float(np.mean(rhos)),
        "trials": result.trials,
    }


def sweep(cfg: ScenarioConfig, axis: str, values: Sequence[float], methods: Sequence[str],
          trials: int | None = None, seed: int | None = None, workers: int | None = None) -> list[dict[str, Any]]:
    """One Monte Carlo run per (point, method); rows sorted by point then method order.

    Points where the adaptive delay is infeasible produce a row with status
    ``infeasible`` and no metrics.
    """
    if not methods:
        raise EmptyMethodSet("sweep needs at least one method")
    eng = replace(cfg.engine, **{k: v for k, v in (("trials", trials), ("seed", seed), ("workers", workers))
                                 if v is not None})
    rows = []
    for x in sorted(float(v) for v in values):
        for m in methods:
            point_cfg = apply_axis(cfg, axis, x).replace(engine=eng, method=replace(cfg.method, id=m))
            try:
                res = run_monte_carlo(validate(point_cfg))
            except AdaptiveInfeasible:
                rows.append({"point": x, "method": m, "status": "infeasible"})
                continue
            rows.append(_row(x, res))
    return rows


def rows_to_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _lam(f: float) -> float:
    return SPEED_OF_LIGHT / f


@dataclass(frozen=True)
class Curve:
    name: str
    method: str
    config: ScenarioConfig


@dataclass(frozen=True)
class FigurePreset:
    id: str
    description: str
    axis: str
    grid: tuple[float, ...]
    curves: tuple[Curve, ...]
    trials: int
    kind: str = "throughput"  # "throughput", "outage" or "timeline"

    def manifest(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "axis": self.axis,
            "grid": list(self.grid),
            "kind": self.kind,
            "default_trials": self.trials,
            "curves": {c.name: {"method": c.method, "config": config_to_dict(c.config)} for c in self.curves},
        }


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


def _fig2_config(fixed_rate: float | None = None) -> ScenarioConfig:
    f = 28e9
    return ScenarioConfig(
        radio=RadioConfig(f, 50e6, 32, TransmitSnr(50.0)),
        timing=TimingConfig(min_processing_delay=5e-3, codeword_length=8000),
        geometry=Geometry(),
        vehicles=(
            VehicleSpec("UE2", 50 / 3.6, 30.0, lane=1, num_pa=2, num_ra=2, antenna_separation=6.6 * _lam(f)),
            VehicleSpec("UE1", 50 / 3.6, 40.0, lane=1, num_pa=1, num_ra=1, antenna_separation=6.6 * _lam(f),
                        served=False),
        ),
        blockage=BlockageConfig("bernoulli", 0.33, scope="nearest"),
        method=MethodConfig("M2", fixed_rate=fixed_rate, outage_threshold=0.3),
        engine=EngineConfig(trials=100_000, seed=0, slots=1),
    )


def _fig4_config() -> ScenarioConfig:
    f = 28e9
    lam = _lam(f)
    platoon, truck = 50 / 3.6, 20 / 3.6
    return ScenarioConfig(
        radio=RadioConfig(f, 50e6, 32, TransmitSnr(50.0)),
        timing=TimingConfig(slot_duration=0.2, min_processing_delay=5e-3, codeword_length=8000),
        geometry=Geometry(),
        vehicles=(
            VehicleSpec("UE0", platoon, 37.5, lane=1, num_pa=1, num_ra=1, antenna_separation=6.6 * lam, served=False),
            VehicleSpec("UE1", platoon, 32.5, lane=1, num_pa=1, num_ra=1, antenna_separation=6.6 * lam),
            VehicleSpec("UE2", platoon, 27.5, lane=1, num_pa=1, num_ra=1, antenna_separation=6.6 * lam),
        ),
        # the truck is alongside UE1 around 0.4 s and alongside UE2 around 1.0 s
        blockage=BlockageConfig("kinematic", blockers=(BlockerSpec(35.0 + 5.0 / 6.0, truck, lane=0),),
                                shadow_halflength=5.0 / 3.0),
        method=MethodConfig("M2"),
        engine=EngineConfig(trials=20_000, seed=0, slots=7, static_large_scale=True),
    )


def _fig5_config(f: float, bandwidth: float, sep: float) -> ScenarioConfig:
    return ScenarioConfig(
        radio=RadioConfig(f, bandwidth, 32, Physical(50.0, -174.0)),
        timing=TimingConfig(min_processing_delay=5e-3, codeword_length=10000),
        vehicles=(VehicleSpec("UE2", 50 / 3.6, 30.0, lane=1, num_pa=1, num_ra=1, antenna_separation=sep * _lam(f)),),
        engine=EngineConfig(trials=20_000, seed=0, slots=1),
    )


def _fig6_config(f: float, antennas: int, sep: float) -> ScenarioConfig:
    return ScenarioConfig(
        radio=RadioConfig(f, 10e6, antennas, Physical(40.0, -174.0)),
        timing=TimingConfig(min_processing_delay=5e-3, codeword_length=8000, delay_mode="non_adaptive"),
        vehicles=(
            VehicleSpec("UE2", 80 / 3.6, 30.0, lane=1, num_pa=1, num_ra=1, antenna_separation=sep * _lam(f)),
            VehicleSpec("UE1", 80 / 3.6, 70.0, lane=1, num_pa=1, num_ra=1, antenna_separation=sep * _lam(f),
                        served=False),
        ),
        engine=EngineConfig(trials=20_000, seed=0, slots=1),
    )


def _presets() -> dict[str, FigurePreset]:
    fig2 = _fig2_config()
    fig3 = _fig2_config(fixed_rate=0.3)
    fig4 = _fig4_config()
    mmw5, sub5 = _fig5_config(28e9, 80e6, 6.6), _fig5_config(2.8e9, 70e6, 0.6)
    mmw6, sub6 = _fig6_config(28e9, 64, 6.6), _fig6_config(6e9, 4, 0.6)
    seven = ("M1", "M2", "M3", "M4", "M5", "M6", "M7")
    return {
        "fig2": FigurePreset("fig2", "E2E throughput vs transmit SNR, 33% Bernoulli blockage", "snr_db",
                             _grid(30.0, 60.0, 2.5), tuple(Curve(m, m, fig2) for m in seven), 100_000),
        "fig3": FigurePreset("fig3", "Outage probability vs transmit SNR at 0.3 bit/symbol", "snr_db",
                             _grid(10.0, 90.0, 2.5), tuple(Curve(m, m, fig3) for m in seven), 1_000_000,
                             kind="outage"),
        "fig4": FigurePreset("fig4", "Per-slot sum throughput of UE1 and UE2 with a passing truck", "slot",
                             tuple(float(k) for k in range(7)),
                             (Curve("variant1_lscpa_self_pa", "M2", fig4), Curve("variant2_ncp_self_pa", "M4", fig4),
                              Curve("variant3_lscpa_no_csit", "M5", fig4), Curve("variant4_ncp_no_csit", "M7", fig4)),
                             20_000, kind="timeline"),
        "fig5": FigurePreset("fig5", "E2E throughput vs speed, adaptive and non-adaptive delay", "speed_kmh",
                             _grid(5.0, 150.0, 5.0),
                             (Curve("adaptive_28GHz", "M2", mmw5), Curve("non_adaptive_28GHz", "M3", mmw5),
                              Curve("adaptive_2.8GHz", "M2", sub5), Curve("non_adaptive_2.8GHz", "M3", sub5)),
                             20_000),
        "fig6": FigurePreset("fig6", "E2E throughput vs gap to the front vehicle", "gap_m",
                             (5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0),
                             (Curve("self_pa_28GHz", "F6_SELF_PA", mmw6), Curve("front_pa_28GHz", "F6_FRONT_PA", mmw6),
                              Curve("self_pa_6GHz", "F6_SELF_PA", sub6), Curve("front_pa_6GHz", "F6_FRONT_PA", sub6)),
                             20_000),
    }


PRESETS: dict[str, FigurePreset] = _presets()


def get_preset(preset_id: str) -> FigurePreset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise UnknownPreset(f"unknown preset {preset_id!r}; available: {sorted(PRESETS)}") from None


# ---------------------------------------------------------------------------
# Per-kind curve runners
# ---------------------------------------------------------------------------

OUTAGE_COLUMNS = ("point", "method", "outage", "outage_halfwidth", "outage_events", "under_sampled", "trials")
TIMELINE_COLUMNS = ("point", "method", "sum_throughput_bps", "ue_throughputs_bps", "blocked_ues", "serving_bs",
                    "trials")


def outage_curve(samples: np.ndarray, snr_db: Sequence[float], threshold: float) -> list[dict[str, Any]]:
    """Outage at each transmit SNR from power-normalized SNR samples."""
    g = np.sort(samples)
    need = 2.0**threshold - 1.0
    n = g.size
    rows = []
    for x in snr_db:
        events = int(np.searchsorted(g, need / 10 ** (x / 10), side="left"))
        p = events / n
        rows.append({"point": float(x), "outage": p, "outage_halfwidth": 1.96 * math.sqrt(p * (1 - p) / n),
                     "outage_events": events, "under_sampled": int(events < 100), "trials": n})
    return rows


def snr_for_outage(samples: np.ndarray, target: float, threshold: float) -> float:
    """Transmit SNR (dB) at which the outage probability equals ``target``."""
    q = float(np.quantile(samples, target))
    if q <= 0:
        return math.inf
    return 10 * math.log10((2.0**threshold - 1.0) / q)


def _curve_rows(preset: FigurePreset, curve: Curve, trials: int, seed: int, workers: int) -> list[dict[str, Any]]:
    cfg = curve.config
    if preset.kind == "outage":
        sc = validate(cfg.replace(engine=replace(cfg.engine, trials=trials, seed=seed),
                                  method=replace(cfg.method, id=curve.method)))
        rows = outage_curve(snr_samples(sc), preset.grid, cfg.method.outage_threshold)
        for r in rows:
            r["method"] = curve.method
        return rows
    if preset.kind == "timeline":
        sc = validate(cfg.replace(engine=replace(cfg.engine, trials=trials, seed=seed, workers=workers),
                                  method=replace(cfg.method, id=curve.method)))
        res = run_monte_carlo(sc)
        rows = []
        for k in range(cfg.engine.slots):
            per = [s for s in res.timeline if s.slot_index == k]
            rows.append({
                "point": float(k), "method": curve.method,
                "sum_throughput_bps": sum(s.throughput for s in per),
                "ue_throughputs_bps": ";".join(_fmt(s.throughput) for s in per),
                "blocked_ues": ";".join(s.ue for s in per if s.blocked_fraction > 0.5),
                "serving_bs": ";".join(str(int(np.argmax(s.serving_share))) for s in per),
                "trials": res.trials,
            })
        return rows
    rows = sweep(cfg, preset.axis, preset.grid, [curve.method], trials, seed, workers)
    if preset.axis == "speed_kmh" and METHODS[curve.method].delay_mode == "adaptive":
        rows = _truncate_at_feasibility(cfg, curve.method, rows, trials, seed, workers)
    return rows


def _truncate_at_feasibility(cfg: ScenarioConfig, method: str, rows: list[dict[str, Any]], trials: int, seed: int,
                             workers: int) -> list[dict[str, Any]]:
    """Drop infeasible points and close the curve with a row at the feasibility speed."""
    served = next(v for v in cfg.vehicles if v.served)
    vmax_kmh = max_adaptive_speed(served.antenna_separation, cfg.timing) * 3.6
    kept = [r for r in rows if r["status"] == "ok" and r["point"] < vmax_kmh]
    marker = sweep(cfg, "speed_kmh", [vmax_kmh], [method], trials, seed, workers)[0]
    marker["status"] = "feasibility_limit"
    return kept + [marker]


def reproduce(preset_id: str, trials: int | None = None, seed: int = 0, out_dir: str | Path | None = None,
              workers: int = 1) -> dict[str, list[dict[str, Any]]]:
    """Run every curve of a preset; write CSVs and a manifest when ``out_dir`` is given.

    Raises:
        UnknownPreset: for an id not in :data:`PRESETS`.
    """
    preset = get_preset(preset_id)
    n = preset.trials if trials is None else int(trials)
    tables = {c.name: _curve_rows(preset, c, n, seed, workers) for c in preset.curves}
    if out_dir is not None:
        write_results(preset, tables, Path(out_dir), n, seed)
    return tables


def _columns(kind: str) -> tuple[str, ...]:
    return {"outage": OUTAGE_COLUMNS, "timeline": TIMELINE_COLUMNS}.get(kind, THROUGHPUT_COLUMNS)


def write_results(preset: FigurePreset, tables: dict[str, list[dict[str, Any]]], root: Path, trials: int,
                  seed: int) -> Path:
    target = root / preset.id
    target.mkdir(parents=True, exist_ok=True)
    for name, rows in tables.items():
        (target / f"{name}.csv").write_text(rows_to_csv(rows, _columns(preset.kind)))
    manifest = {"preset": preset.manifest(), "seed": seed, "trials": trials, "software_version": __version__}
    (target / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return target


def default_out_dir() -> Path:
    return Path(os.environ.get("LSCPA_OUT_DIR", "results"))
