"""Hot numeric kernels with two interchangeable backends.

The numba backend is the default; set ``GRIDCAR_NUMBA=0`` (or run without
numba installed) to select the pure-numpy fallback. Both backends implement
identical semantics; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

_want_numba = os.environ.get("GRIDCAR_NUMBA", "1") not in ("0", "false", "no")

if _want_numba:
    try:
        from ._numba import (footprint_collisions, raycast_batch,
                             scan_loglik, step_kinematics_batch)
        BACKEND = "numba"
    except ImportError:
        _want_numba = False

if not _want_numba:
    from ._numpy import (footprint_collisions, raycast_batch,
                         scan_loglik, step_kinematics_batch)
    BACKEND = "numpy"

__all__ = [
    "BACKEND",
    "footprint_collisions",
    "raycast_batch",
    "scan_loglik",
    "step_kinematics_batch",
]
