"""Compare the compiled and NumPy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and problem size: best-of-``repeat`` wall time for
each backend, the speedup, and the largest difference between their outputs.
"""
import argparse
import timeit

import numpy as np

from padicfield import kernels


def cases(rng):
    for side, ndim in ((27, 2), (81, 2), (243, 1)):
        n = side**ndim
        vals = rng.normal(size=n) + 1j * rng.normal(size=n)
        bt = np.eye(ndim, dtype=np.int64)
        yield f"char_sum_dft side={side} N={ndim}", "char_sum_dft", (vals, side, ndim, bt, 1)
    for q, ndim in ((81, 2), (27, 3), (9, 4)):
        exps = np.array([[2 if i == c else 0 for c in range(ndim)] for i in range(ndim)], dtype=np.int64)
        coefs = np.array([1, 1, -3, -3][:ndim], dtype=np.int64)
        yield f"poly_residue_table q={q} N={ndim}", "poly_residue_table", (exps, coefs, ndim, q)
    for M, B in ((72, 20_000), (6480, 500), (6480, 5_000)):
        P = 3**9
        z = rng.integers(0, P, size=(M, 4 if M > 100 else 2)).astype(np.int64)
        w = rng.integers(0, P, size=(B, z.shape[1])).astype(np.int64)
        h = rng.random(M)
        yield f"phase_weighted_sum_batch reps={M} rows={B}", "phase_weighted_sum_batch", (z, w, P, h, -1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled extension not built; only the NumPy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'case':44s} " + " ".join(f"{n:>10s}" for n in impls) + "   speedup   max|diff|")
    for label, fn, call_args in cases(rng):
        times, outs = {}, {}
        for name, mod in impls.items():
            f = getattr(mod, fn)
            outs[name] = np.asarray(f(*call_args))
            times[name] = min(timeit.repeat(lambda: f(*call_args), number=1, repeat=args.repeat))
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        diff = float(np.max(np.abs(outs["python"] - outs["cython"]))) if "cython" in outs else 0.0
        print(f"{label:44s} " + " ".join(f"{times[n] * 1e3:8.2f}ms" for n in impls)
              + f"   {speed:6.2f}x   {diff:.1e}")


if __name__ == "__main__":
    main()
