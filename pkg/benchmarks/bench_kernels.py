"""Compare the compiled and numpy segment kernels.

Runs both implementations on the same inputs, checks the outputs are
identical, and reports the median time per call. A final section times
one full training epoch on ESOL with each backend in a subprocess.

    python benchmarks/bench_kernels.py [--no-epoch]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit
from pathlib import Path

import numpy as np

from hignn.tensor import _kernels_py

try:
    from hignn.tensor import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

ROOT = Path(__file__).resolve().parents[1]

# (rows, columns, segments): edge-to-atom and atom-to-graph shapes of a batch
SHAPES = [(1_000, 64, 400), (10_000, 64, 4_000), (100_000, 64, 40_000), (5_000, 64, 32)]

EPOCH_SCRIPT = """
import time
from hignn.tensor import BACKEND
from hignn.data import load_csv, featurize_all, make_split
from hignn.model import ModelConfig, HignnModel
from hignn.config import TrainConfig
from hignn.train import train_model
ds = load_csv({path!r})
samples = featurize_all(ds.smiles)
split = make_split(ds, "random", seed=0)
t = time.perf_counter()
train_model(HignnModel(ModelConfig()), ds, samples, split, TrainConfig(epochs=1))
print(BACKEND, time.perf_counter() - t)
"""


def _median_time(fn, repeat=7):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench_kernels():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'rows':>8}{'cols':>6}{'segs':>7}{'numpy ms':>11}{'cython ms':>11}{'speedup':>9}")
    for rows, cols, segs in SHAPES:
        src = rng.standard_normal((rows, cols))
        index = np.sort(rng.integers(0, segs, rows)).astype(np.int64)
        for name in ("scatter_add_rows", "segment_max_rows"):
            py = getattr(_kernels_py, name)
            t_py = _median_time(lambda: py(src, index, segs))
            if _kernels_c is None:
                print(f"{name:<18}{rows:>8}{cols:>6}{segs:>7}{t_py * 1e3:>11.3f}{'n/a':>11}{'':>9}")
                continue
            c = getattr(_kernels_c, name)
            a, b = py(src, index, segs), c(src, index, segs)
            same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) \
                else np.array_equal(a, b)
            if not same:
                raise SystemExit(f"{name}: backends disagree")
            t_c = _median_time(lambda: c(src, index, segs))
            print(f"{name:<18}{rows:>8}{cols:>6}{segs:>7}{t_py * 1e3:>11.3f}{t_c * 1e3:>11.3f}"
                  f"{t_py / t_c:>8.1f}x")


def bench_epoch():
    data = ROOT / "data" / "esol.csv"
    code = EPOCH_SCRIPT.format(path=str(data))
    for backend in ("python", "cython"):
        env = dict(os.environ, HIGNN_KERNELS=backend)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"ESOL epoch (d=64, K=3) with {out[0]} kernels: {float(out[1]):.2f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--no-epoch", action="store_true", help="skip the training-epoch timing")
    args = parser.parse_args()
    bench_kernels()
    if not args.no_epoch:
        bench_epoch()


if __name__ == "__main__":
    main()
