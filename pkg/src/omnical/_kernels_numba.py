"""Numba-jitted wrappers around the shared kernel source."""

from numba import njit

from . import _kernels_numpy as _impl

solve_zero_sum = njit(cache=True)(_impl.solve_zero_sum)
binary_oracle_case = njit(cache=True)(_impl.binary_oracle_case)
