"""Compare the compiled and numpy beamforming kernels.

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from lscpa import _pykernels
from lscpa.channel import draw_iid_rayleigh

try:
    from lscpa import _ckernels
except ImportError:
    _ckernels = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':<14} {'M':>3} {'R':>2} " + " ".join(f"{b:>10}" for b, _ in backends) + "   speedup")
    for M, R in ((1, 1), (32, 1), (32, 2), (8, 4)):
        h = draw_iid_rayleigh((args.n, M, R), rng)
        e = draw_iid_rayleigh((args.n, M, R), rng)
        w = draw_iid_rayleigh((args.n, M), rng)
        for name, call in (("mrt_gains", lambda k: k.mrt_gains(h, e)), ("random_gains", lambda k: k.random_gains(h, w))):
            ts = [min(timeit.repeat(lambda: call(k), number=1, repeat=args.repeat)) for _, k in backends]
            ref = np.asarray(call(_pykernels)[0] if name == "mrt_gains" else call(_pykernels))
            for _, k in backends[1:]:
                got = np.asarray(call(k)[0] if name == "mrt_gains" else call(k))
                assert np.allclose(got, ref, rtol=1e-9), f"{name} backends disagree"
            speed = f"{ts[0] / ts[1]:8.2f}x" if len(ts) > 1 else "       -"
            print(f"{name:<14} {M:>3} {R:>2} " + " ".join(f"{t * 1e3:>8.1f}ms" for t in ts) + f"  {speed}")


if __name__ == "__main__":
    main()
