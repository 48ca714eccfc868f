"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--M 1024]

Prints one line per kernel with the best-of-``repeat`` time for each
backend and the speedup.  The first numba call is made before timing so
JIT compilation is not counted.
"""

import argparse
import time

import numpy as np

from pelastica import _kernels as kern
from pelastica.flatcore import FlatCoreSpec, build, model_boundary
from pelastica.optimize import _reg, discretize, relax
from pelastica.special import PContext, amplitude_pair, sech_p


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(M):
    ctx = PContext(3.0)
    x = np.linspace(-ctx.K, ctx.K, 20001)
    rng = np.random.default_rng(0)
    steps = rng.normal(size=(M, 3))
    steps /= np.linalg.norm(steps, axis=1, keepdims=True)
    X = np.vstack((np.zeros(3), np.cumsum(steps, axis=0)))
    V = rng.normal(size=X.shape)
    noisy = X + 1e-4 * V
    noisy[0], noisy[-1] = X[0], X[-1]
    spec = FlatCoreSpec(3, 2, [[0, 1], [0, 1]], [1, 0, 1])
    pl = discretize(build(spec), 256, loops=2, K=ctx.K)
    b = model_boundary(spec)
    return {
        "amplitude_pair (20k points)": lambda: amplitude_pair(ctx, x),
        "sech_p (20k points)": lambda: sech_p(ctx, x),
        f"energy+gradient (M={M})": lambda: kern.polyline_energy_grad(X, 1.0, 3.0, True),
        f"project_tangent (M={M})": lambda: kern.project_tangent(X, V, _reg(1.0)),
        f"retract (M={M})": lambda: kern.retract(noisy, 1.0, 1e-11, 50, _reg(1.0)),
        "relax 200 iterations (M=256)": lambda: relax(pl, b, max_iter=200),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--M", type=int, default=1024)
    args = ap.parse_args()
    if not kern.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, fn in cases(args.M).items():
        with kern.use_backend("numpy"):
            t_np = best_of(fn, args.repeat)
        with kern.use_backend("numba"):
            t_nb = best_of(fn, args.repeat)
        print(f"{name:34s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
