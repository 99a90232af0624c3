"""Kernel benchmark: MAC counts and wall-clock for both forward paths.

For every (n, shape) the two paths are first checked for agreement on
one random double-precision input; rows whose check fails are flagged
and not timed. MAC counts come straight from the flops_* formulas, so
the reported direct/separable ratio is the formula ratio by construction.
"""

from __future__ import annotations

import time

import numpy as np

from .errors import ParameterError
from .metrics import format_shape
from .stft import (
    build_basis,
    flops_direct,
    flops_separable,
    stft_forward_direct,
    stft_forward_separable,
)

EQUIV_RTOL = 1e-10

_PATHS = (
    ("direct", stft_forward_direct, flops_direct),
    ("separable", stft_forward_separable, flops_separable),
)


def _time(fn, x, basis, reps: int):
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(x, basis)
        samples.append(time.perf_counter() - t0)
    arr = np.asarray(samples)
    return float(arr.mean()), float(arr.std())


def run_bench(ns, shapes, reps: int = 3, seed: int = 0):
    """Benchmark rows following the benchmark CSV schema."""
    if reps < 0:
        raise ParameterError(f"reps must be >= 0, got {reps}")
    rng = np.random.default_rng(seed)
    rows = []
    for n in sorted(set(int(n) for n in ns)):
        basis = build_basis(n)
        for shape in sorted(set(tuple(s) for s in shapes)):
            B, C, H, W = shape
            x = rng.standard_normal(shape)
            direct = stft_forward_direct(x, basis)
            sep = stft_forward_separable(x, basis)
            scale = max(float(np.abs(direct).max()), 1e-300)
            ok = float(np.abs(direct - sep).max()) <= EQUIV_RTOL * scale
            for path, fn, flops in _PATHS:
                row = {
                    "path": path,
                    "n": n,
                    "shape": format_shape(shape),
                    "macs": flops(n, C, H, W),
                    "mean_seconds": None,
                    "stddev_seconds": None,
                    "status": "ok" if ok else "equivalence-failed",
                }
                if ok and reps > 0:
                    row["mean_seconds"], row["stddev_seconds"] = _time(
                        fn, x, basis, reps)
                rows.append((shape, row))
    # (n, shape, path) order; shapes compare numerically, paths alphabetically
    rows.sort(key=lambda item: (item[1]["n"], item[0], item[1]["path"]))
    return [row for _, row in rows]
