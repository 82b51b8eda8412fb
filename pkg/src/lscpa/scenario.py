"""Scenario configuration, JSON ingestion and validation.

A scenario is described by a JSON document with the top-level keys
``radio``, ``timing``, ``geometry``, ``vehicles``, ``blockage``, ``method``
and ``engine``. :func:`load_config` parses it into frozen dataclasses and
:func:`validate` checks every invariant and computes the derived radio
constants, returning an immutable :class:`ValidatedScenario`.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import ConstraintViolation, GeometryCalibrationError

SPEED_OF_LIGHT = 299_792_458.0

DELAY_MODES = ("adaptive", "non_adaptive")
BLOCKAGE_MODELS = ("none", "bernoulli", "kinematic")
BERNOULLI_SCOPES = ("nearest", "per_link")


# ---------------------------------------------------------------------------
# Config types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransmitSnr:
    """Transmit power given as SNR in dB against unit-variance noise."""

    snr_db: float


@dataclass(frozen=True)
class Physical:
    tx_power_dbm: float
    noise_density_dbm_hz: float = -174.0
    # free-space intercept (lambda / 4 pi d0)^2 on top of the distance law
    frequency_intercept: bool = True


@dataclass(frozen=True)
class RadioConfig:
    carrier_frequency: float
    bandwidth: float
    bs_antennas: int
    power: TransmitSnr | Physical
    pathloss_exponent_los: float = 2.8
    pathloss_exponent_nlos: float = 3.9
    reference_distance: float = 1.0


@dataclass(frozen=True)
class TimingConfig:
    slot_duration: float | None = None
    min_processing_delay: float = 5e-3
    codeword_length: int = 8000
    delay_mode: str = "adaptive"


@dataclass(frozen=True)
class VehicleSpec:
    id: str
    speed: float
    initial_position: float
    lane: int = 1
    num_pa: int = 1
    num_ra: int = 1
    antenna_separation: float = 0.0
    served: bool = True


@dataclass(frozen=True)
class Geometry:
    bs_positions: tuple[tuple[float, float, float], ...] = ((0.0, 0.0, 5.0), (60.0, 0.0, 5.0))
    lane_offsets: tuple[float, ...] = (5.0, 8.5)
    ue_antenna_height: float = 1.6


@dataclass(frozen=True)
class BlockerSpec:
    initial_position: float
    speed: float
    lane: int = 0


@dataclass(frozen=True)
class BlockageConfig:
    model: str = "none"
    probability: float = 0.0
    scope: str = "nearest"
    blockers: tuple[BlockerSpec, ...] = ()
    shadow_halflength: float = 5.0
    speed_error_std: float = 0.0


@dataclass(frozen=True)
class MethodConfig:
    id: str = "M2"
    backoff: float | str = "auto"
    fixed_rate: float | None = None
    outage_threshold: float = 0.3
    rate_grid_step: float = 0.1
    pilot_trials: int = 4000
    combine: str = "select_best"


@dataclass(frozen=True)
class EngineConfig:
    trials: int = 1000
    seed: int = 0
    slots: int = 1
    block_size: int = 4096
    workers: int = 1
    static_large_scale: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    radio: RadioConfig
    timing: TimingConfig = field(default_factory=TimingConfig)
    geometry: Geometry = field(default_factory=Geometry)
    vehicles: tuple[VehicleSpec, ...] = ()
    blockage: BlockageConfig = field(default_factory=BlockageConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------

_TOP_KEYS = {"radio", "timing", "geometry", "vehicles", "blockage", "method", "engine"}


def _check_keys(section: str, data: Mapping[str, Any], allowed: set[str]) -> None:
    if not isinstance(data, Mapping):
        raise ConstraintViolation(f"{section}: expected an object, got {type(data).__name__}")
    unknown = set(data) - allowed
    if unknown:
        raise ConstraintViolation(f"{section}: unknown keys {sorted(unknown)}")


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _parse_power(data: Mapping[str, Any]) -> TransmitSnr | Physical:
    mode = data.get("mode")
    if mode == "transmit_snr":
        _check_keys("radio.power", data, {"mode", "snr_db"})
        return TransmitSnr(float(data["snr_db"]))
    if mode == "physical":
        _check_keys("radio.power", data, {"mode", "tx_power_dbm", "noise_density_dbm_hz", "frequency_intercept"})
        return Physical(
            tx_power_dbm=float(data["tx_power_dbm"]),
            noise_density_dbm_hz=float(data.get("noise_density_dbm_hz", -174.0)),
            frequency_intercept=bool(data.get("frequency_intercept", True)),
        )
    raise ConstraintViolation(f"radio.power.mode must be 'transmit_snr' or 'physical', got {mode!r}")


def _parse_vehicle(data: Mapping[str, Any], wavelength: float) -> VehicleSpec:
    allowed = _fields(VehicleSpec) | {"antenna_separation_wavelengths"}
    _check_keys(f"vehicles[{data.get('id', '?')}]", data, allowed)
    kwargs = dict(data)
    if "antenna_separation_wavelengths" in kwargs:
        if "antenna_separation" in kwargs:
            raise ConstraintViolation("give antenna_separation or antenna_separation_wavelengths, not both")
        kwargs["antenna_separation"] = float(kwargs.pop("antenna_separation_wavelengths")) * wavelength
    kwargs["id"] = str(kwargs["id"])
    return VehicleSpec(**kwargs)


def config_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed JSON document.

    Unknown keys at any level raise :class:`ConstraintViolation`.
    """
    _check_keys("config", doc, _TOP_KEYS)
    if "radio" not in doc:
        raise ConstraintViolation("config: missing required key 'radio'")

    radio_doc = dict(doc["radio"])
    _check_keys("radio", radio_doc, _fields(RadioConfig))
    radio_doc["power"] = _parse_power(radio_doc.get("power", {"mode": "transmit_snr", "snr_db": 50.0}))
    radio = RadioConfig(**radio_doc)
    wavelength = SPEED_OF_LIGHT / radio.carrier_frequency if radio.carrier_frequency > 0 else math.nan

    timing_doc = doc.get("timing", {})
    _check_keys("timing", timing_doc, _fields(TimingConfig))
    timing = TimingConfig(**timing_doc)

    geo_doc = dict(doc.get("geometry", {}))
    _check_keys("geometry", geo_doc, _fields(Geometry))
    if "bs_positions" in geo_doc:
        geo_doc["bs_positions"] = tuple(tuple(float(v) for v in p) for p in geo_doc["bs_positions"])
    if "lane_offsets" in geo_doc:
        geo_doc["lane_offsets"] = tuple(float(v) for v in geo_doc["lane_offsets"])
    geometry = Geometry(**geo_doc)

    vehicles = tuple(_parse_vehicle(v, wavelength) for v in doc.get("vehicles", []))

    blk_doc = dict(doc.get("blockage", {}))
    _check_keys("blockage", blk_doc, _fields(BlockageConfig))
    if "blockers" in blk_doc:
        blockers = []
        for b in blk_doc["blockers"]:
            _check_keys("blockage.blockers[]", b, _fields(BlockerSpec))
            blockers.append(BlockerSpec(**b))
        blk_doc["blockers"] = tuple(blockers)
    blockage = BlockageConfig(**blk_doc)

    method_doc = doc.get("method", {})
    if isinstance(method_doc, str):
        method_doc = {"id": method_doc}
    _check_keys("method", method_doc, _fields(MethodConfig))
    method = MethodConfig(**method_doc)

    engine_doc = doc.get("engine", {})
    _check_keys("engine", engine_doc, _fields(EngineConfig))
    engine = EngineConfig(**engine_doc)

    return ScenarioConfig(radio, timing, geometry, vehicles, blockage, method, engine)


def config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    """Inverse of :func:`config_from_dict` (JSON-ready)."""
    doc = dataclasses.asdict(config)
    power = config.radio.power
    if isinstance(power, TransmitSnr):
        doc["radio"]["power"] = {"mode": "transmit_snr", "snr_db": power.snr_db}
    else:
        doc["radio"]["power"] = {"mode": "physical", **dataclasses.asdict(power)}
    doc["geometry"]["bs_positions"] = [list(p) for p in config.geometry.bs_positions]
    doc["geometry"]["lane_offsets"] = list(config.geometry.lane_offsets)
    return doc


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConstraintViolation(f"config file not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConstraintViolation(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# Derived constants
# ---------------------------------------------------------------------------

def noise_power(noise_density: float, bandwidth: float) -> float:
    """Noise power in dBm for a density in dBm/Hz over ``bandwidth`` Hz."""
    if bandwidth <= 0:
        raise ConstraintViolation(f"bandwidth must be > 0, got {bandwidth}")
    return noise_density + 10.0 * math.log10(bandwidth)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class ValidatedScenario:
    """Immutable scenario handle with derived constants.

    Safe to share between worker processes; nothing here is mutated after
    :func:`validate` returns.
    """

    config: ScenarioConfig
    wavelength: float
    symbol_duration: float
    transmission_time: float
    slot_duration: float
    tx_power: float
    noise: float
    noise_power_dbm: float | None
    intercept: float

    @property
    def radio(self) -> RadioConfig:
        return self.config.radio

    @property
    def timing(self) -> TimingConfig:
        return self.config.timing

    @property
    def geometry(self) -> Geometry:
        return self.config.geometry

    @property
    def vehicles(self) -> tuple[VehicleSpec, ...]:
        return self.config.vehicles

    @property
    def served(self) -> tuple[VehicleSpec, ...]:
        return tuple(v for v in self.config.vehicles if v.served)

    @property
    def snr_scale(self) -> float:
        """Transmit power over noise power, linear."""
        return self.tx_power / self.noise

    @property
    def horizon(self) -> float:
        return self.config.engine.slots * self.slot_duration

    def vehicle(self, vid: str) -> VehicleSpec:
        for v in self.config.vehicles:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def ue_xyz(self, vehicle: VehicleSpec, t: float = 0.0) -> tuple[float, float, float]:
        if self.config.engine.static_large_scale:
            t = 0.0
        x = vehicle.initial_position + vehicle.speed * t
        return (x, self.geometry.lane_offsets[vehicle.lane], self.geometry.ue_antenna_height)

    def distances(self, vehicle: VehicleSpec, t: float = 0.0) -> list[float]:
        x, y, h = self.ue_xyz(vehicle, t)
        return [math.dist((x, y, h), bs) for bs in self.geometry.bs_positions]

    def nearest_bs(self, vehicle: VehicleSpec, t: float = 0.0) -> int:
        d = self.distances(vehicle, t)
        return min(range(len(d)), key=lambda i: (d[i], i))

    def large_scale_gain(self, distance: float, los: bool) -> float:
        from .channel import pathloss_gain

        alpha = self.radio.pathloss_exponent_los if los else self.radio.pathloss_exponent_nlos
        d0 = self.radio.reference_distance
        return self.intercept * pathloss_gain(max(distance, d0), alpha, d0)

    def front_gap(self, vehicle: VehicleSpec) -> float | None:
        """Longitudinal distance to the nearest vehicle ahead in the same lane."""
        ahead = [
            v.initial_position - vehicle.initial_position
            for v in self.config.vehicles
            if v.id != vehicle.id and v.lane == vehicle.lane and v.initial_position > vehicle.initial_position
        ]
        return min(ahead) if ahead else None


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConstraintViolation(message)


def _check_calibration(sc: ValidatedScenario) -> None:
    """LoS to some other BS must beat NLoS to the nearest BS over the operating window."""
    bs = sc.geometry.bs_positions
    if sc.config.blockage.model == "none" or len(bs) < 2:
        return
    step = 0.5
    for v in sc.served:
        travel = 0.0 if sc.config.engine.static_large_scale else v.speed * sc.horizon
        n = max(1, int(math.ceil(travel / step)))
        for k in range(n + 1):
            t = sc.horizon * k / n if travel > 0 else 0.0
            d = sc.distances(v, t)
            near = min(range(len(d)), key=lambda i: (d[i], i))
            nlos_near = sc.large_scale_gain(d[near], los=False)
            best_other = max(sc.large_scale_gain(d[i], los=True) for i in range(len(d)) if i != near)
            if best_other <= nlos_near:
                x = sc.ue_xyz(v, t)[0]
                raise GeometryCalibrationError(
                    f"vehicle {v.id} at x={x:.1f} m: adjacent-BS LoS gain "
                    f"{10 * math.log10(best_other):.1f} dB does not exceed nearest-BS NLoS gain "
                    f"{10 * math.log10(nlos_near):.1f} dB"
                )


def validate(config: ScenarioConfig) -> ValidatedScenario:
    """Check every invariant and return the immutable scenario handle.

    Raises:
        ConstraintViolation: naming the failing invariant.
        GeometryCalibrationError: when cooperative switching would not be
            beneficial somewhere in the operating window.
    """
    r, tm, g, b, m, e = config.radio, config.timing, config.geometry, config.blockage, config.method, config.engine

    _require(r.carrier_frequency > 0, f"radio.carrier_frequency must be > 0, got {r.carrier_frequency}")
    _require(r.bandwidth > 0, f"radio.bandwidth must be > 0, got {r.bandwidth}")
    _require(int(r.bs_antennas) == r.bs_antennas and r.bs_antennas >= 1, f"radio.bs_antennas must be an integer >= 1, got {r.bs_antennas}")
    _require(r.pathloss_exponent_los > 0, "radio.pathloss_exponent_los must be > 0")
    _require(
        r.pathloss_exponent_nlos > r.pathloss_exponent_los,
        f"radio.pathloss_exponent_nlos ({r.pathloss_exponent_nlos}) must exceed pathloss_exponent_los ({r.pathloss_exponent_los})",
    )
    _require(r.reference_distance > 0, "radio.reference_distance must be > 0")

    _require(int(tm.codeword_length) == tm.codeword_length and tm.codeword_length >= 1, "timing.codeword_length must be an integer >= 1")
    _require(tm.min_processing_delay >= 0, "timing.min_processing_delay must be >= 0")
    _require(tm.delay_mode in DELAY_MODES, f"timing.delay_mode must be one of {DELAY_MODES}, got {tm.delay_mode!r}")
    transmission_time = tm.codeword_length / r.bandwidth
    slot = tm.slot_duration if tm.slot_duration is not None else transmission_time + tm.min_processing_delay
    _require(slot >= transmission_time, f"timing.slot_duration {slot} s is shorter than the codeword transmission time {transmission_time} s")

    _require(len(g.bs_positions) >= 1, "geometry.bs_positions needs at least one BS")
    _require(all(len(p) == 3 for p in g.bs_positions), "geometry.bs_positions entries must be (x, y, height)")
    xs = [p[0] for p in g.bs_positions]
    _require(all(a < c for a, c in zip(xs, xs[1:])), "geometry.bs_positions must be strictly increasing in x")
    _require(len(g.lane_offsets) >= 1, "geometry.lane_offsets needs at least one lane")

    _require(len(config.vehicles) >= 1, "vehicles: at least one vehicle required")
    ids = [v.id for v in config.vehicles]
    _require(len(set(ids)) == len(ids), f"vehicles: duplicate ids {ids}")
    _require(any(v.served for v in config.vehicles), "vehicles: at least one served vehicle required")
    for v in config.vehicles:
        _require(v.speed >= 0, f"vehicle {v.id}: speed must be >= 0")
        _require(v.num_pa >= 0 and v.num_ra >= 0 and v.num_pa + v.num_ra >= 1, f"vehicle {v.id}: num_pa + num_ra must be >= 1")
        _require(v.num_pa == 0 or v.antenna_separation > 0, f"vehicle {v.id}: antenna_separation must be > 0 when num_pa >= 1")
        _require(0 <= v.lane < len(g.lane_offsets), f"vehicle {v.id}: lane {v.lane} out of range")

    _require(b.model in BLOCKAGE_MODELS, f"blockage.model must be one of {BLOCKAGE_MODELS}, got {b.model!r}")
    _require(0.0 <= b.probability <= 1.0, f"blockage.probability must be in [0, 1], got {b.probability}")
    _require(b.scope in BERNOULLI_SCOPES, f"blockage.scope must be one of {BERNOULLI_SCOPES}")
    _require(b.shadow_halflength > 0, "blockage.shadow_halflength must be > 0")
    _require(b.speed_error_std >= 0, "blockage.speed_error_std must be >= 0")
    for bl in b.blockers:
        _require(bl.speed >= 0, "blockage.blockers[].speed must be >= 0")
        _require(0 <= bl.lane < len(g.lane_offsets), f"blocker lane {bl.lane} out of range")
        # trucks keep to the outer lane
        _require(bl.lane == 0, f"blocker lane must be the outer lane (0), got {bl.lane}")
    if b.model == "kinematic":
        _require(len(b.blockers) >= 1, "kinematic blockage needs at least one blocker")

    from .engine import METHODS  # local import: engine depends on this module

    _require(m.id in METHODS, f"method.id must be one of {sorted(METHODS)}, got {m.id!r}")
    _require(m.backoff == "auto" or (isinstance(m.backoff, (int, float)) and 0 < m.backoff <= 1), "method.backoff must be 'auto' or in (0, 1]")
    _require(m.fixed_rate is None or m.fixed_rate >= 0, "method.fixed_rate must be >= 0")
    _require(m.outage_threshold >= 0, "method.outage_threshold must be >= 0")
    _require(m.rate_grid_step > 0, "method.rate_grid_step must be > 0")
    _require(m.pilot_trials >= 100, "method.pilot_trials must be >= 100")
    _require(m.combine in ("select_best", "linear_mmse"), "method.combine must be 'select_best' or 'linear_mmse'")

    _require(e.trials >= 1, "engine.trials must be >= 1")
    _require(e.slots >= 1, "engine.slots must be >= 1")
    _require(e.block_size >= 1, "engine.block_size must be >= 1")
    _require(e.workers >= 1, "engine.workers must be >= 1")

    wavelength = SPEED_OF_LIGHT / r.carrier_frequency
    if isinstance(r.power, TransmitSnr):
        tx, noise, n_dbm, intercept = db_to_linear(r.power.snr_db), 1.0, None, 1.0
    else:
        n_dbm = noise_power(r.power.noise_density_dbm_hz, r.bandwidth)
        tx, noise = db_to_linear(r.power.tx_power_dbm), db_to_linear(n_dbm)
        intercept = (wavelength / (4 * math.pi * r.reference_distance)) ** 2 if r.power.frequency_intercept else 1.0

    sc = ValidatedScenario(
        config=config,
        wavelength=wavelength,
        symbol_duration=1.0 / r.bandwidth,
        transmission_time=transmission_time,
        slot_duration=slot,
        tx_power=tx,
        noise=noise,
        noise_power_dbm=n_dbm,
        intercept=intercept,
    )
    _check_calibration(sc)
    return sc


def kmh(speed_kmh: float) -> float:
    return speed_kmh / 3.6


def default_vehicle(speed: float = 50 / 3.6, separation_wavelengths: float = 6.6, carrier_frequency: float = 28e9,
                    position: float = 30.0, num_ra: int = 1, num_pa: int = 1, vid: str = "UE2") -> VehicleSpec:
    lam = SPEED_OF_LIGHT / carrier_frequency
    return VehicleSpec(vid, speed, position, lane=1, num_pa=num_pa, num_ra=num_ra,
                       antenna_separation=separation_wavelengths * lam)


def bs_row(count: int, spacing: float = 60.0, height: float = 5.0, start: float = 0.0) -> tuple[tuple[float, float, float], ...]:
    return tuple((start + i * spacing, 0.0, height) for i in range(count))


__all__: Sequence[str] = [
    "SPEED_OF_LIGHT", "TransmitSnr", "Physical", "RadioConfig", "TimingConfig", "VehicleSpec",
    "Geometry", "BlockerSpec", "BlockageConfig", "MethodConfig", "EngineConfig", "ScenarioConfig",
    "ValidatedScenario", "config_from_dict", "config_to_dict", "load_config", "validate", "noise_power",
    "db_to_linear", "kmh", "default_vehicle", "bs_row",
]
