"""Backend selection for the beamforming kernels.

The compiled extension ``lscpa._ckernels`` is used when it has been built;
otherwise the numpy implementation in ``lscpa._pykernels`` is used. Setting
``LSCPA_PURE_PYTHON=1`` forces the numpy backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("LSCPA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass


def mrt_gains(h_true: np.ndarray, h_est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _impl.mrt_gains(np.ascontiguousarray(h_true, dtype=complex), np.ascontiguousarray(h_est, dtype=complex))


def random_gains(h_true: np.ndarray, w: np.ndarray) -> np.ndarray:
    return _impl.random_gains(np.ascontiguousarray(h_true, dtype=complex), np.ascontiguousarray(w, dtype=complex))
