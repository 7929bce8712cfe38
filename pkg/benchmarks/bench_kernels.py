#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

Runs the two hot kernels (per-disease cosine similarity, similarity-weighted
symptom scores) over a sweep of graph sizes and prints a comparison table.
The engine picks its backend from the DOPI_NUMBA env flag; this script calls
both implementations directly so one process covers both.

Usage: python benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from dopi import kernels

SIZES = [(50, 10), (200, 50), (1000, 200), (5000, 500)]


def _time(fn, *args, repeats: int) -> float:
    fn(*args)  # warm-up (jit compile / cache load)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    if not kernels._HAS_NUMBA:
        print("numba backend unavailable (DOPI_NUMBA off or numba missing); "
              "only the numpy path will be timed")

    rng = np.random.default_rng(0)
    header = f"{'symptoms x diseases':>20}  {'kernel':>16}  {'numpy (us)':>12}  {'numba (us)':>12}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n_s, n_d in SIZES:
        weights = rng.random((n_s, n_d))
        patient = (rng.random(n_s) < 0.1).astype(float)
        sims = rng.random(n_d)
        rows = [
            ("cosine_sims", kernels.cosine_sims_np,
             getattr(kernels, "_cosine_sims_nb", None), (weights, patient)),
            ("weighted_scores", kernels.weighted_scores_np,
             getattr(kernels, "_weighted_scores_nb", None), (weights, sims)),
        ]
        for name, np_fn, nb_fn, fnargs in rows:
            t_np = _time(np_fn, *fnargs, repeats=args.repeats)
            if nb_fn is not None:
                t_nb = _time(nb_fn, *fnargs, repeats=args.repeats)
                np.testing.assert_allclose(np_fn(*fnargs), nb_fn(*fnargs), rtol=1e-12)
                speedup = f"{t_np / t_nb:6.2f}x"
                nb_cell = f"{t_nb * 1e6:12.2f}"
            else:
                speedup, nb_cell = "-", "-".rjust(12)
            print(f"{f'{n_s} x {n_d}':>20}  {name:>16}  {t_np * 1e6:12.2f}  {nb_cell}  {speedup:>8}")


if __name__ == "__main__":
    main()
