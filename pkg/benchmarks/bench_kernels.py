"""Timing comparison of the NumPy and Numba kernel paths.

The MMD value+gradient kernel and the pairwise squared-distance kernels
dominate a training step, so this is the pair worth racing. Run:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 32,64,128,256 --dim 64 --repeats 7
"""
import argparse
import timeit

import numpy as np

from mindisc import _kernels_np
from mindisc.numerics import make_rng

try:
    from mindisc import _kernels_nb
except ImportError:
    _kernels_nb = None


def best_of(fn, repeats):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def bench(label, np_fn, nb_fn, repeats):
    t_np = best_of(np_fn, repeats)
    if nb_fn is None:
        print(f"{label:<28} numpy {t_np * 1e3:8.3f} ms   numba        n/a")
        return
    nb_fn()  # warm the JIT outside the timed region
    t_nb = best_of(nb_fn, repeats)
    print(f"{label:<28} numpy {t_np * 1e3:8.3f} ms   numba {t_nb * 1e3:8.3f} ms   "
          f"speedup {t_np / t_nb:5.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="32,64,128,256",
                        help="comma-separated batch sizes per domain")
    parser.add_argument("--dim", type=int, default=64, help="feature dimensionality")
    parser.add_argument("--kernels", type=int, default=5, help="bandwidths in the mixture")
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats (best kept)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _kernels_nb is None:
        print("numba unavailable: timing the NumPy path only\n")

    rng = make_rng(args.seed)
    sigmas = 2.0 ** (np.arange(args.kernels) - (args.kernels - 1) / 2)
    betas = np.full(args.kernels, 1.0 / args.kernels)

    for n in (int(s) for s in args.sizes.split(",")):
        S = rng.standard_normal((n, args.dim))
        T = rng.standard_normal((n, args.dim))
        Z = np.vstack((S, T))
        print(f"-- n={n} per domain, dim={args.dim}, L={args.kernels}")
        bench("pairwise_sqdist",
              lambda: _kernels_np.pairwise_sqdist(S, T),
              (lambda: _kernels_nb.pairwise_sqdist(S, T)) if _kernels_nb else None,
              args.repeats)
        bench("condensed_sqdist (pooled)",
              lambda: _kernels_np.condensed_sqdist(Z),
              (lambda: _kernels_nb.condensed_sqdist(Z)) if _kernels_nb else None,
              args.repeats)
        bench("mmd_biased (value+grads)",
              lambda: _kernels_np.mmd_biased(S, T, sigmas, betas),
              (lambda: _kernels_nb.mmd_biased(S, T, sigmas, betas)) if _kernels_nb else None,
              args.repeats)
        print()


if __name__ == "__main__":
    main()
