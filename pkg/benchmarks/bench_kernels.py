"""Timing of the compiled kernels against the numpy fallback.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat 5]

For each problem size the script checks that both backends agree and
prints the best wall time of each, together with the speed-up.
"""
import argparse
import timeit

import numpy as np

from indexflow import _pykernels
from indexflow.galerkin import SplineSpace

try:
    from indexflow import _ckernels
except ImportError:  # extension not built
    _ckernels = None

CASES = [  # (m, n, elements, degree)
    (1, 1, 64, 2),
    (1, 2, 256, 3),
    (2, 1, 256, 3),
    (2, 2, 1024, 4),
]


def best_time(fn, repeat):
    timer = timeit.Timer(fn)
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def bench_case(m, n, E, degree, repeat, rng):
    sp = SplineSpace(m, n, 1.0, E, degree)
    nq = degree + m + 2
    x, w = sp.quadrature(nq)
    spans, ders = sp.evaluate(x, m)
    ders = np.ascontiguousarray(ders[:, :m + 1])
    shape = (x.size, m + 1, m + 1, n, n)
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    rows = []
    basis = {"python": lambda: _pykernels.bspline_ders(sp.knots, degree, x, m)}
    assembly = {"python": lambda: _pykernels.assemble_form(spans, ders, w, coef, sp.nbasis, nq)}
    if _ckernels is not None:
        basis["cython"] = lambda: _ckernels.bspline_ders(sp.knots, degree, x, m)
        assembly["cython"] = lambda: _ckernels.assemble_form(spans, ders, w, coef,
                                                             sp.nbasis, nq)
        _, d1 = basis["python"]()
        _, d2 = basis["cython"]()
        A1, A2 = assembly["python"](), assembly["cython"]()
        if not (np.allclose(d1, d2, rtol=1e-12, atol=1e-12)
                and np.allclose(A1, A2, atol=1e-12 * np.abs(A1).max())):
            raise RuntimeError(f"backends disagree for case {(m, n, E, degree)}")
    for name, fns in (("bspline_ders", basis), ("assemble_form", assembly)):
        times = {k: best_time(f, repeat) for k, f in fns.items()}
        rows.append((name, m, n, E, degree, x.size, times))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    header = (f"{'kernel':<14}{'m':>3}{'n':>3}{'E':>6}{'deg':>5}{'points':>8}"
              f"{'python [ms]':>13}{'cython [ms]':>13}{'speed-up':>10}")
    print(header)
    print("-" * len(header))
    for case in CASES:
        for name, m, n, E, degree, npts, times in bench_case(*case, args.repeat, rng):
            py = times["python"] * 1e3
            if "cython" in times:
                cy = times["cython"] * 1e3
                tail = f"{cy:>13.3f}{py / cy:>9.1f}x"
            else:
                tail = f"{'n/a':>13}{'':>10}"
            print(f"{name:<14}{m:>3}{n:>3}{E:>6}{degree:>5}{npts:>8}{py:>13.3f}{tail}")
    if _ckernels is None:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
