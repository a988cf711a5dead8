"""Benchmark the numba kernels against the pure-numpy fallback.

Times the zero-sum game solver on pipeline-shaped and random matrices, and
the binary oracle scan, under both backends in one process. The numba column
excludes the one-off JIT compile (a warmup call precedes timing).
"""

from __future__ import annotations

import json
import time

import numpy as np

from . import _kernels_numpy
from .core import build_simplex_net
from .oracles import default_iteration_cap

try:
    from . import _kernels_numba
except ImportError:
    _kernels_numba = None


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases():
    rng = np.random.default_rng(7)
    net3 = build_simplex_net(3, 0.25)
    f = rng.uniform(-1.0, 1.0, size=net3.points.shape)
    g = np.einsum("sj,sj->s", f, net3.points)
    M_pipeline = np.ascontiguousarray(g[None, :] - f.T)
    M_random = rng.uniform(-1.0, 1.0, size=(4, 50))
    grid = np.sort(build_simplex_net(2, 0.05).points[:, 1])
    u = rng.dirichlet(np.ones(grid.shape[0]), size=2000)
    return [
        ("game 3x%d eps=0.25" % len(net3), "solve_zero_sum",
         (M_pipeline, 0.25, default_iteration_cap(3, 0.25), 32)),
        ("game 4x50 eps=0.01", "solve_zero_sum",
         (M_random, 0.01, default_iteration_cap(4, 0.01), 64)),
        ("binary oracle x2000", "binary_oracle_case_many", (grid, u)),
    ]


def _call(impl, name, payload):
    if name == "solve_zero_sum":
        return lambda: impl.solve_zero_sum(*payload)
    grid, u = payload

    def many():
        for i in range(u.shape[0]):
            impl.binary_oracle_case(grid, u[i], 0.7, 0.3, 0.1)

    return many


def run_benchmarks(repeats: int = 5, out: str | None = None) -> list[dict]:
    rows = []
    backends = [("numpy", _kernels_numpy)]
    if _kernels_numba is not None:
        backends.append(("numba", _kernels_numba))
    for label, kernel, payload in _cases():
        row = {"case": label}
        for name, impl in backends:
            fn = _call(impl, kernel, payload)
            fn()  # warmup; compiles the numba path
            row[name] = _time(fn, repeats)
        if "numba" in row:
            row["speedup"] = row["numpy"] / row["numba"]
        rows.append(row)
    width = max(len(r["case"]) for r in rows)
    header = f"{'case':<{width}}  numpy (s)   numba (s)   speedup"
    print(header)
    print("-" * len(header))
    for r in rows:
        numba_s = f"{r['numba']:.6f}" if "numba" in r else "n/a"
        speed = f"{r['speedup']:.1f}x" if "speedup" in r else "n/a"
        print(f"{r['case']:<{width}}  {r['numpy']:.6f}    {numba_s}    {speed}")
    if out:
        with open(out, "w") as fh:
            json.dump(rows, fh, indent=1, sort_keys=True)
    return rows
