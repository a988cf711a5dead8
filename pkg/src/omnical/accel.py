"""Kernel backend selection: numba-jitted by default, pure numpy on request.

Set OMNICAL_NO_NUMBA=1 (or true/yes) to force the pure-numpy path, e.g. on
platforms without a working numba install. `omnical bench` compares the two.
"""

import os

from . import _kernels_numpy

_flag = os.environ.get("OMNICAL_NO_NUMBA", "").strip().lower()
if _flag in {"1", "true", "yes"}:
    _impl = _kernels_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = _kernels_numpy
        BACKEND = "numpy"

solve_zero_sum = _impl.solve_zero_sum
binary_oracle_case = _impl.binary_oracle_case
