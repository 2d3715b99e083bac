"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--epochs 50]

Prints per-kernel timings (best of ``--repeat``) and the wall time of a short
AlphaMatch training run under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from alphamatch import _pykernels
from alphamatch.verification import random_simplex

try:
    from alphamatch import _ckernels
except ImportError:
    _ckernels = None


def kernel_cases(rng):
    m, D, H, K, n = 64, 2, 16, 3, 2
    X = rng.normal(size=(m, D))
    W1, b1 = rng.normal(size=(H, D)), rng.normal(size=H)
    W2, b2 = rng.normal(size=(K, H)), rng.normal(size=K)
    A, Z = _pykernels.mlp_forward(X, W1, b1, W2, b2, False)
    G = rng.normal(size=(m, K))
    Gam, P = random_simplex(rng, K, m), random_simplex(rng, K, m)
    P3 = random_simplex(rng, K, m * (n + 1)).reshape(m, n + 1, K)
    w = np.array([0.5, 0.25, 0.25])
    return {
        "softmax_rows": lambda k: k.softmax_rows(Z),
        "mlp_forward": lambda k: k.mlp_forward(X, W1, b1, W2, b2, False),
        "mlp_backward": lambda k: k.mlp_backward(X, A, G, W2, False),
        "alpha_rows": lambda k: k.alpha_rows(Gam, P, 1.5),
        "barycenter_rows": lambda k: k.barycenter_rows(P3, w, 1.5),
    }


def bench_kernels(repeat, number=2000):
    rng = np.random.default_rng(0)
    rows = []
    for name, fn in kernel_cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=number, repeat=repeat)) / number
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=number, repeat=repeat)) / number if _ckernels else float("nan")
        rows.append((name, t_py, t_c))
    return rows


TRAIN_SNIPPET = """
import time
from alphamatch.data import make_two_moons, ssl_split
from alphamatch.trainers import TrainerConfig, train
xs, ys = make_two_moons(1000, 0.1, 0)
L, U, T = ssl_split(xs, ys, 4, 200, 0)
t = time.perf_counter()
train(TrainerConfig(epochs={epochs}), L, U, T)
print(time.perf_counter() - t)
"""


def bench_training(epochs):
    out = {}
    for backend in ("python", "cython"):
        env = dict(os.environ, ALPHAMATCH_BACKEND=backend)
        res = subprocess.run(
            [sys.executable, "-c", TRAIN_SNIPPET.format(epochs=epochs)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        out[backend] = float(res.stdout)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=50)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; only the numpy fallback is available")
    print(f"{'kernel':18s} {'numpy (us)':>12s} {'cython (us)':>12s} {'speedup':>8s}")
    for name, t_py, t_c in bench_kernels(args.repeat):
        print(f"{name:18s} {t_py * 1e6:12.2f} {t_c * 1e6:12.2f} {t_py / t_c:8.2f}x")
    if _ckernels is not None:
        t = bench_training(args.epochs)
        print(f"\nAlphaMatch, {args.epochs} epochs on two-moons (n=1000):")
        print(f"  numpy  {t['python']:.2f} s\n  cython {t['cython']:.2f} s\n  speedup {t['python'] / t['cython']:.2f}x")


if __name__ == "__main__":
    main()
