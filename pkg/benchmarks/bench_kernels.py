"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 128 256 512 1024] [--repeat 5]

Prints one row per (kernel, n) with the best-of-``repeat`` wall time of each
backend, their ratio and the max abs difference between the two results.
"""
import argparse
import timeit

import numpy as np

from sqgpatch import _kernels_py
from sqgpatch.contour import ellipse

try:
    from sqgpatch import _ckernels
except ImportError:
    _ckernels = None


def cases(n):
    c = ellipse(1.0, 0.5, n).curve
    f = np.vstack([c.tangent, np.sin(np.arange(n) * 2 * np.pi / n)[None, :]])
    pts = np.array([[1.5, 0.2], [0.1, 0.9], [-2.0, -0.3]])
    return {
        "transport_remainder": (c.pos, c.speed, f),
        "normal_remainder": (c.pos, c.speed, c.tangent, c.normal),
        "arc_chord_table": (c.pos, c.speed),
        "arc_chord_sup": (c.pos, c.speed),
        "offcurve_sum": (pts, c.pos, c.tangent),
    }


def best_time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512, 1024])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .`")
    print(f"{'kernel':<22} {'n':>5} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'max diff':>10}")
    for n in args.sizes:
        for name, fargs in cases(n).items():
            py, cy = getattr(_kernels_py, name), getattr(_ckernels, name)
            diff = float(np.max(np.abs(np.asarray(py(*fargs)) - np.asarray(cy(*fargs)))))
            tp = best_time(py, fargs, args.repeat)
            tc = best_time(cy, fargs, args.repeat)
            print(f"{name:<22} {n:>5} {1e3 * tp:10.3f} {1e3 * tc:10.3f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
