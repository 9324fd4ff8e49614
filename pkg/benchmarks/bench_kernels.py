"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are imported
directly, so the SMOOTHDT_PURE switch is not needed here.
"""

import argparse
import timeit

import numpy as np

from smoothdt.dist import ProductDist, derive_rng, sample, z_transform
from smoothdt.kernels import _pykernels
from smoothdt.tree import random_tree

try:
    from smoothdt.kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(m, n, n_sets, seed):
    rng = derive_rng(seed, "bench")
    dist = ProductDist(rng.uniform(-0.8, 0.8, size=n), 0.1)
    X = sample(dist, m, rng)
    zt = np.ascontiguousarray(z_transform(dist, X).T)
    y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    sets = [tuple(sorted(rng.choice(n, size=int(rng.integers(1, 5)), replace=False).tolist()))
            for _ in range(n_sets)]
    tree = random_tree(n, 64, rng)
    var, neg, pos, value = tree._flat
    return {
        "pairwise_sum": lambda k: k.pairwise_sum(y),
        "subset_sums": lambda k: k.subset_sums(zt, y, sets),
        "evaluate_tree": lambda k: k.evaluate_tree(var, neg, pos, value, X),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=200_000)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--sets", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    print(f"m={args.m} n={args.n} sets={args.sets}; best of {args.repeat}, seconds")
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for name, fn in cases(args.m, args.n, args.sets, 0).items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        results = [fn(mod) for _, mod in backends]
        same = all(np.array_equal(np.asarray(results[0]), np.asarray(r)) for r in results[1:])
        speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else f"{'-':>10}"
        flag = "" if same else "  (outputs differ)"
        print(f"{name:<14}" + "".join(f"{t:>12.4f}" for t in times) + speed + flag)


if __name__ == "__main__":
    main()
