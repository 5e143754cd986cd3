"""Time the combined activation kernels on the numba and numpy backends.

Usage: python benchmarks/bench_kernels.py [--rows 4096] [--width 64] [--repeat 50]
"""
import argparse
import timeit

import numpy as np

from mononet._kernels import HAVE_NUMBA, combined_grad_kernel, combined_kernel


def bench(fn, h, kind, backend, repeat):
    fn(h, kind, h.shape[1] // 3, h.shape[1] // 3, backend=backend)  # warm-up / jit compile
    t = timeit.repeat(lambda: fn(h, kind, h.shape[1] // 3, h.shape[1] // 3, backend=backend),
                      number=1, repeat=repeat)
    return min(t)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=4096)
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    h = np.random.default_rng(0).normal(size=(args.rows, args.width))
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    print(f"{'kernel':<10} {'kind':<5} " + " ".join(f"{b + ' ms':>10}" for b in backends) + "   speedup")
    for name, fn in (("forward", combined_kernel), ("gradient", combined_grad_kernel)):
        for kind in (0, 1, 2):
            times = [bench(fn, h, kind, b, args.repeat) * 1e3 for b in backends]
            speed = f"{times[0] / times[1]:8.2f}x" if len(times) == 2 else "     n/a"
            print(f"{name:<10} {('relu', 'elu', 'selu')[kind]:<5} " + " ".join(f"{t:10.3f}" for t in times)
                  + "  " + speed)


if __name__ == "__main__":
    main()
