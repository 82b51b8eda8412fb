"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import LscpaError
from .experiments import PRESETS, default_out_dir, parse_axis, reproduce, rows_to_csv, sweep, THROUGHPUT_COLUMNS
from .scenario import load_config, validate


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lscpa", description="Predictor-antenna V2I Monte Carlo simulator")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on this)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", type=Path)

    f = sub.add_parser("reproduce", help="run a figure preset")
    f.add_argument("--figure", required=True, choices=sorted(PRESETS))
    f.add_argument("--trials", type=int)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", type=Path)

    s = sub.add_parser("sweep", help="sweep one parameter of a scenario")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--axis", required=True, help="name=start:stop:step or name=v1,v2,...")
    s.add_argument("--methods", help="comma-separated method ids (default: the config's method)")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", type=Path)

    sub.add_parser("validate", help="quick oracle and invariant checks")
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    eng = replace(cfg.engine, workers=args.workers, **{k: v for k, v in (("trials", args.trials), ("seed", args.seed))
                                                      if v is not None})
    sc = validate(cfg.replace(engine=eng))
    from .engine import run_monte_carlo

    res = run_monte_carlo(sc)
    doc = asdict(res)
    doc["timeline"] = [asdict(s) for s in res.timeline]
    doc["handover_log"] = [asdict(e) for e in res.handover_log]
    out = (args.out or default_out_dir()) / "run"
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")
    print(f"method {res.method}: throughput {res.e2e_throughput:.6g} bps (+/- {res.throughput_halfwidth:.3g}), "
          f"outage {res.outage_probability:.6g}, trials {res.trials}")
    print(f"wrote {out / 'result.json'}")
    return 0


def _cmd_reproduce(args) -> int:
    out = args.out or default_out_dir()
    reproduce(args.figure, args.trials, args.seed, out, workers=args.workers)
    print(f"wrote {out / args.figure}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    axis, values = parse_axis(args.axis)
    methods = args.methods.split(",") if args.methods else [cfg.method.id]
    validate(cfg)
    rows = sweep(cfg, axis, values, methods, args.trials, args.seed, args.workers)
    text = rows_to_csv(rows, THROUGHPUT_COLUMNS)
    out = (args.out or default_out_dir()) / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{axis}.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def _validation_checks() -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    from scipy import special

    from . import _pykernels, kernels, oracle
    from .channel import correlate, draw_iid_rayleigh, jakes_correlation, spatial_mismatch
    from .engine import run_monte_carlo
    from .protocol import max_adaptive_speed
    from .scenario import (SPEED_OF_LIGHT, EngineConfig, Geometry, MethodConfig, RadioConfig,
                           ScenarioConfig, TimingConfig, TransmitSnr, default_vehicle)

    lam = SPEED_OF_LIGHT / 28e9

    def bessel():
        x = np.linspace(0, 60, 601)
        err = max(abs(oracle.bessel_j0(v) - special.j0(v)) for v in x)
        return err < 1e-10, f"max |J0 - scipy| = {err:.1e}"

    def feasibility():
        v = max_adaptive_speed(6.6 * lam, TimingConfig()) * 3.6
        return abs(v - 50.88) < 0.005, f"{v:.4f} km/h"

    def mismatch():
        d = spatial_mismatch(6.6 * lam, 50 / 3.6, 5e-3)
        rho = jakes_correlation(d, lam)
        ok = abs(d - 1.22e-3) < 1e-5 and abs(rho - oracle.bessel_j0(2 * math.pi * d / lam)) < 1e-6
        return ok, f"{d * 1e3:.4f} mm, rho {rho:.6f}"

    def outage():
        cfg = ScenarioConfig(RadioConfig(28e9, 50e6, 1, TransmitSnr(0.0)), vehicles=(default_vehicle(),),
                             geometry=Geometry(bs_positions=((30.0, 0.0, 5.0),)),
                             method=MethodConfig("M2", fixed_rate=0.3), engine=EngineConfig(trials=200_000))
        sc = validate(cfg)
        g = sc.large_scale_gain(sc.distances(sc.served[0])[0], True)
        # transmit SNR chosen so the mean per-antenna received SNR is 0 dB
        sc = validate(cfg.replace(radio=replace(cfg.radio, power=TransmitSnr(-10 * math.log10(g)))))
        res = run_monte_carlo(sc)
        ref = oracle.mrt_outage_analytic(1, 1.0, 0.3)
        se = math.sqrt(ref * (1 - ref) / res.trials)
        return abs(res.outage_probability - ref) < 3 * se, f"MC {res.outage_probability:.5f} vs {ref:.5f}"

    def quadrature():
        a, b = oracle.tiny_bruteforce_outage(1, 100, 1.0, 0.3), oracle.mrt_outage_analytic(1, 1.0, 0.3)
        return abs(a - b) / b < 0.02, f"{a:.5f} vs {b:.5f}"

    def correlation():
        rng = np.random.default_rng(0)
        base = draw_iid_rayleigh(200_000, rng)
        est = oracle.empirical_correlation(base, correlate(base, 0.875, draw_iid_rayleigh(200_000, rng)))
        return abs(est.rho - 0.875) < 0.01, f"rho {est.rho:.4f}"

    def backends():
        rng = np.random.default_rng(1)
        h, e = draw_iid_rayleigh((64, 8, 2), rng), draw_iid_rayleigh((64, 8, 2), rng)
        a, b = kernels.mrt_gains(h, e)[0], _pykernels.mrt_gains(h, e)[0]
        err = float(np.max(np.abs(a - b) / b))
        return err < 1e-10, f"{kernels.BACKEND} vs python rel {err:.1e}"

    return [("bessel_j0", bessel), ("adaptive_max_speed", feasibility), ("mismatch_anchor", mismatch),
            ("rayleigh_outage", outage), ("bruteforce_quadrature", quadrature), ("fading_correlation", correlation),
            ("kernel_backends", backends)]


def _cmd_validate(args) -> int:
    failed = 0
    print(f"{'check':<24} {'result':<6} detail")
    for name, fn in _validation_checks():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(f"{name:<24} {'PASS' if ok else 'FAIL':<6} {detail}")
    return 1 if failed else 0


_COMMANDS = {"run": _cmd_run, "reproduce": _cmd_reproduce, "sweep": _cmd_sweep, "validate": _cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (LscpaError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
