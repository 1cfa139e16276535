"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_accel.py [--repeat 5]

Part one calls the paired ``nb_*`` / ``np_*`` functions directly on
representative inputs and checks they agree.  Part two runs one end-to-end
check in subprocesses with SESQUIOP_NUMBA=1 and SESQUIOP_NUMBA=0.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from sesquiop import _accel

END_TO_END = """
import time, sys
from sesquiop import BACKEND, Family, KernelSpec
from sesquiop import verification as V
from sesquiop.discretization import build_grid
spec = KernelSpec(Family.ITEM3, mu1=0.7, mu2=1.1)
V.functional_residual_R(spec, m=40)  # warm-up (jit compile or cache load)
t = time.perf_counter()
V.functional_residual_R(spec, m=200)
V.taylor_residual(spec)
V.sesquicommutator_residual(spec, build_grid(512), refine=False)
print(BACKEND, time.perf_counter() - t)
"""


def best_of(fn, args, repeat):
    fn(*args)  # warm-up
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    # ~ the admissible 200 x 200 grid, jets of order 2
    m = 20000
    a = rng.standard_normal((3, m)) + 1j * rng.standard_normal((3, m))
    b = rng.standard_normal((3, m)) + 1j * rng.standard_normal((3, m))
    b[0] += 3.0
    # Taylor-order series at a handful of points
    t = rng.standard_normal((15, 64)) + 1j * rng.standard_normal((15, 64))
    n = 1024
    x, w = _accel.np_gauss_legendre(n)
    v = (-1.0) ** np.arange(n) * np.sqrt((1 - x * x) * w)
    return [
        ("series_mul order 2, 20000 pts", "series_mul", (a, b)),
        ("series_div order 2, 20000 pts", "series_div", (a, b)),
        ("series_exp order 2, 20000 pts", "series_exp", (a,)),
        ("series_sinhcosh order 14, 64 pts", "series_sinhcosh", (t, False)),
        ("gauss_legendre n=1024", "gauss_legendre", (n,)),
        ("bary_diffmats n=1024", "bary_diffmats", (x, v)),
    ]


def _same(p, q):
    if isinstance(p, tuple):
        return all(_same(u, v) for u, v in zip(p, q))
    return np.allclose(p, q, rtol=1e-10, atol=1e-10)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba unavailable (or SESQUIOP_NUMBA=0); nothing to compare")
        return 1
    print(f"{'kernel':36s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for label, name, fargs in cases():
        f_np = getattr(_accel, "np_" + name)
        f_nb = getattr(_accel, "nb_" + name)
        t_np = best_of(f_np, fargs, args.repeat)
        t_nb = best_of(f_nb, fargs, args.repeat)
        agree = _same(f_np(*fargs), f_nb(*fargs))
        print(f"{label:36s} {1e3 * t_np:11.3f} {1e3 * t_nb:11.3f} {t_np / t_nb:8.1f}  {agree}")

    if not args.skip_end_to_end:
        print("\nend to end (relation m=200 + Taylor + discrete n=512):")
        for flag in ("1", "0"):
            env = dict(os.environ, SESQUIOP_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True,
                                 text=True, check=True)
            backend, secs = out.stdout.split()
            print(f"  {backend:6s} {float(secs):8.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
