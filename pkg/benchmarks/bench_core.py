"""Compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_core.py [--sizes 100 400 1600]``.
"""
import argparse
import timeit

import numpy as np

from weightflow._core import BACKENDS


def cases(n, rng):
    x = np.sort(rng.random(n))
    w = rng.random(n)
    w /= w.sum()
    drift = rng.normal(size=n)
    arrival = np.clip(x + 0.01 * rng.normal(size=n), 0.0, 1.0)
    return {
        "sin2_self_velocity": lambda k: k.sin2_self_velocity(x, w, 0.2),
        "sin2_velocity": lambda k: k.sin2_velocity(arrival, x, w, 0.2),
        "m1_growth": lambda k: k.m1_growth(x, w, drift, 100.0),
        "cic_deposit": lambda k: k.cic_deposit(arrival, w, 0.0, 1.0 / n, n),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 400, 1600])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "compiled" not in BACKENDS:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'n':>6}{'python ms':>12}{'compiled ms':>13}{'speedup':>9}{'max diff':>11}")
    for n in args.sizes:
        for name, fn in cases(n, rng).items():
            row = {}
            outs = {}
            for backend, mod in BACKENDS.items():
                outs[backend] = fn(mod)
                number = max(1, int(2e6 // (n * n)))
                t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
                row[backend] = 1e3 * t
            py = row["python"]
            cc = row.get("compiled", float("nan"))
            a = outs["python"][0] if name == "cic_deposit" else outs["python"]
            b = outs.get("compiled", outs["python"])
            b = b[0] if name == "cic_deposit" else b
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            print(f"{name:<20}{n:>6}{py:>12.3f}{cc:>13.3f}{py / cc:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
