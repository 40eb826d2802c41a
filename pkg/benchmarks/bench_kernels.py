"""Compare the compiled and numpy particle kernels.

    python benchmarks/bench_kernels.py [--particles 100000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from qbayes import _kernels_py

try:
    from qbayes import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def states(rng, n, d):
    g = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    r = g @ g.conj().transpose(0, 2, 1)
    return r / np.trace(r, axis1=1, axis2=2).real[:, None, None]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--particles", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    n = args.particles
    s2, s4 = states(rng, n, 2), states(rng, n // 10, 4)
    w = rng.dirichlet(np.ones(n))
    cases = {
        f"born_likelihoods  N={n} d=2": lambda k: k.born_likelihoods(s2, s2[0]),
        f"born_likelihoods  N={n // 10} d=4": lambda k: k.born_likelihoods(s4, s4[0]),
        f"tensor_power      N={n} n=2": lambda k: k.weighted_tensor_power(w, s2, 2),
        f"tensor_power      N={n // 10} n=4": lambda k: k.weighted_tensor_power(w[: n // 10], s2[: n // 10], 4),
        f"systematic_resample N={n}": lambda k: k.systematic_resample(w, 0.37),
    }
    backends = {"numpy": _kernels_py}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c
    else:
        print("compiled kernels not built; run `python setup.py build_ext --inplace`")
    print(f"{'kernel':<36}" + "".join(f"{b:>12}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        times = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for b, k in backends.items()}
        row = f"{name:<36}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if len(times) > 1:
            row += f"   {times['numpy'] / times['cython']:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
