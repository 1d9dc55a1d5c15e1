"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--pairs 500000]
"""
import argparse
import timeit

import numpy as np

from quantbeam import _kernels_py

try:
    from quantbeam import _kernels
except ImportError:  # extension not built
    _kernels = None


def _cases(n_samples, n_pairs, n_beams, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n_samples)
    w = rng.standard_normal((n_beams, 8, 8)) + 1j * rng.standard_normal((n_beams, 8, 8))
    w /= np.linalg.norm(w.reshape(n_beams, -1), axis=1)[:, None, None]
    sector = rng.integers(0, n_beams, n_pairs)
    u = rng.uniform(-1, 1, n_pairs)
    v = rng.uniform(-0.3, 0.3, n_pairs)
    return {
        "quantize_midrise": lambda mod: mod.quantize_midrise(x, 0.58602, 8),
        "array_gain": lambda mod: mod.array_gain(w, sector, u, v, 0.5),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--samples", type=int, default=2_000_000)
    ap.add_argument("--pairs", type=int, default=500_000)
    ap.add_argument("--beams", type=int, default=504)
    args = ap.parse_args()

    cases = _cases(args.samples, args.pairs, args.beams)
    print(f"{'kernel':<18}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases.items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:<18}{t_py * 1e3:12.1f}{'n/a':>12}{'':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        ref, got = fn(_kernels_py), fn(_kernels)
        err = float(np.max(np.abs(ref - got)))
        print(f"{name:<18}{t_py * 1e3:12.1f}{t_cy * 1e3:12.1f}{t_py / t_cy:9.1f}x   max|diff| {err:.1e}")


if __name__ == "__main__":
    main()
