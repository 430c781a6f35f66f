"""Time the compiled and pure-Python kernels side by side.

Run from the repository root: ``python3 benchmarks/bench_kernels.py``.
Each figure is the best of ``--repeat`` runs, in microseconds per call.
"""
import argparse
import timeit

import numpy as np

from xdiff_sis import kernels


def cases(n, rng):
    S, I = rng.uniform(0.1, 2, n), rng.uniform(0.1, 1, n)
    beta, gamma, lam = (rng.uniform(0.5, 2, n) for _ in range(3))
    sub, sup = -rng.uniform(0, 1, n), -rng.uniform(0, 1, n)
    diag = 3.0 + rng.uniform(0, 1, n)
    h = 1.0 / n
    return {
        "thomas": lambda k: k.thomas(sub, diag, sup, S),
        "laplacian": lambda k: k.laplacian(S, h),
        "cross_divergence": lambda k: k.cross_divergence(S, I, h, 1.0, 0.1, True),
        "incidence": lambda k: k.incidence(S, I, beta, 1e-30),
        "imex_step": lambda k: k.imex_step(S, I, beta, gamma, lam, False, 0.1, 0.1, 1.0,
                                           1e-4, h, 1e-30, True),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {"python": kernels.get_backend("python")}
    if kernels.compiled_available():
        backends["cython"] = kernels.get_backend("cython")
    else:
        print("compiled extension not built; timing the Python kernels only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        for name, fn in cases(n, rng).items():
            times = {}
            for bname, mod in backends.items():
                timer = timeit.Timer(lambda: fn(mod))
                number, _ = timer.autorange()
                best = min(timer.repeat(args.repeat, number)) / number
                times[bname] = best * 1e6
            speed = (times["python"] / times["cython"]) if "cython" in times else float("nan")
            print(f"{name:<18}{n:>6}" + "".join(f"{t:>12.2f}" for t in times.values())
                  + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
