#!/usr/bin/env python
"""Compare the numba and numpy kernels.

Per-kernel timings use both backends in one process (each is importable
regardless of the GRAPH2TEXT_NUMBA flag). ``--end-to-end`` also times a
short training run under each flag in a subprocess, since the flag is read
at import time.

    python benchmarks/bench_kernels.py --rows 512 --cols 64
    python benchmarks/bench_kernels.py --end-to-end
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from graph2text import kernels

TRAIN_SNIPPET = """
import time
from graph2text.pipeline import linearize_sample
from graph2text.toy.synth import gen_directional_facts
from graph2text.toy.train import TrainConfig, train
data = [linearize_sample(s) for s in gen_directional_facts(200, 12, 0)]
start = time.perf_counter()
train(data, data[:40], TrainConfig(epochs=2, seed=0), {"embed_dim": 64, "ff_dim": 128})
print(time.perf_counter() - start)
"""


def kernel_cases(rows: int, cols: int, rng: np.random.Generator) -> dict:
    x = rng.standard_normal((rows, cols))
    dy = rng.standard_normal((rows, cols))
    gamma, beta = rng.standard_normal(cols), rng.standard_normal(cols)
    a = kernels.numpy_kernels.softmax_rows(x)
    _, xhat, rstd = kernels.numpy_kernels.layer_norm(x, gamma, beta, 1e-5)
    targets = rng.integers(0, cols, size=rows)
    weights = np.ones(rows)
    return {
        "softmax_rows": (x,),
        "softmax_rows_backward": (a, dy),
        "layer_norm": (x, gamma, beta, 1e-5),
        "layer_norm_backward": (dy, xhat, rstd, gamma),
        "gelu": (x,),
        "gelu_backward": (x, dy),
        "cross_entropy": (x, targets, weights),
    }


def best_time(fn, args, repeats: int, number: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), repeat=repeats, number=number)) / number


def bench_kernels(rows: int, cols: int, repeats: int, number: int) -> list:
    cases = kernel_cases(rows, cols, np.random.default_rng(0))
    results = []
    for name, args in cases.items():
        np_fn = getattr(kernels.numpy_kernels, name)
        nb_fn = getattr(kernels.numba_kernels, name)
        nb_fn(*args)  # compile (or load from cache) outside the timing
        t_np = best_time(np_fn, args, repeats, number)
        t_nb = best_time(nb_fn, args, repeats, number)
        results.append((name, t_np, t_nb))
    return results


def bench_end_to_end() -> dict:
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, GRAPH2TEXT_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env, capture_output=True, text=True, check=True)
        out["numba" if flag == "1" else "numpy"] = float(proc.stdout.strip().splitlines()[-1])
    return out


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=256, help="rows per kernel call (batch x positions)")
    parser.add_argument("--cols", type=int, default=64, help="row width (embedding or vocabulary size)")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--number", type=int, default=200, help="calls per timing repeat")
    parser.add_argument("--end-to-end", action="store_true", help="also time a 2-epoch toy training run per backend")
    args = parser.parse_args(argv)

    print(f"active backend: {kernels.BACKEND}; shape ({args.rows}, {args.cols})")
    print(f"{'kernel':<24}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for name, t_np, t_nb in bench_kernels(args.rows, args.cols, args.repeats, args.number):
        print(f"{name:<24}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}{t_np / t_nb:>9.2f}x")
    if args.end_to_end:
        times = bench_end_to_end()
        print(f"toy training, 2 epochs: numpy {times['numpy']:.2f}s, numba {times['numba']:.2f}s "
              f"({times['numpy'] / times['numba']:.2f}x)")


if __name__ == "__main__":
    main()
