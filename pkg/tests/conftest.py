import math
from dataclasses import replace

import pytest

from lscpa.scenario import (
    BlockageConfig,
    EngineConfig,
    Geometry,
    MethodConfig,
    RadioConfig,
    ScenarioConfig,
    TransmitSnr,
    default_vehicle,
    validate,
)


def single_link(M=2, snr_db=0.0, method="M2", fixed_rate=None, trials=1000, seed=0, num_ra=1):
    """One BS, one UE, no blockage."""
    return ScenarioConfig(
        radio=RadioConfig(28e9, 50e6, M, TransmitSnr(snr_db)),
        geometry=Geometry(bs_positions=((30.0, 0.0, 5.0),)),
        vehicles=(default_vehicle(num_ra=num_ra, num_pa=num_ra),),
        method=MethodConfig(method, fixed_rate=fixed_rate),
        engine=EngineConfig(trials=trials, seed=seed),
    )


def unit_mean_snr(cfg, target_db=0.0):
    """Same config with transmit SNR set so that P * G equals ``target_db``."""
    sc = validate(cfg)
    g = sc.large_scale_gain(sc.distances(sc.served[0])[0], True)
    return cfg.replace(radio=replace(cfg.radio, power=TransmitSnr(target_db - 10 * math.log10(g))))


def two_bs(method="M2", p=0.33, snr_db=50.0, trials=2000, seed=0, fixed_rate=None, scope="nearest"):
    return ScenarioConfig(
        radio=RadioConfig(28e9, 50e6, 32, TransmitSnr(snr_db)),
        vehicles=(default_vehicle(num_ra=2, num_pa=2),),
        blockage=BlockageConfig("bernoulli", p, scope=scope),
        method=MethodConfig(method, fixed_rate=fixed_rate),
        engine=EngineConfig(trials=trials, seed=seed),
    )


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
