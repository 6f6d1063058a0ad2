"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from afspim import _pykernels

try:
    from afspim import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    v = rng.normal(size=4096)
    x = 1 - rng.random(20)
    a, b = rng.normal(size=(2, 401, 401))
    return {
        "mattis_energy N=4096": lambda k: k.mattis_energy(v, -1.0),
        "min_partition N=20": lambda k: k.min_partition(x),
        "weighted_sum 401x401": lambda k: k.weighted_sum(a, b),
        "bilinear_shift 401x401": lambda k: k.bilinear_shift(a, 0.3, -0.2),
    }


def best_time(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.Timer(fn).repeat(repeat=repeat, number=n)) / n


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    impls = {"numpy": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    rng = np.random.default_rng(0)
    print(f"{'kernel':26s}" + "".join(f"{name:>14s}" for name in impls) + "   speedup")
    for label, call in cases(rng).items():
        times = {name: best_time(lambda: call(mod), args.repeat) for name, mod in impls.items()}
        row = f"{label:26s}" + "".join(f"{t * 1e3:12.3f}ms" for t in times.values())
        if "cython" in times:
            row += f"   {times['numpy'] / times['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
