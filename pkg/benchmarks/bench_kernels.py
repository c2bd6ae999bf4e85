"""Time the numba and numpy paths of the pointwise kernels and of a full
Strang step.

    python3 benchmarks/bench_kernels.py --sizes 4096 65536 262144 --repeat 20

The step timing swaps ``_accel.nonlinear_phase`` in place, so both backends
run through the same FFT code and differ only in the pointwise kernel.
"""
import argparse
import time

import numpy as np

from nls_conserve import _accel
from nls_conserve.dynamics import _half_multiplier, _strang_array
from nls_conserve.grid import Grid
from nls_conserve.nonlinearity import PowerNonlinearity


def best_of(fn, repeat):
    fn()  # warm-up (triggers JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernels(n, repeat, p):
    rng = np.random.default_rng(0)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    rows = []
    for name, nb, np_ in (
        ("power_f", lambda: _accel.power_f_nb(a, -1.0, p), lambda: _accel.power_f_np(a, -1.0, p)),
        ("nonlinear_phase", lambda: _accel.nonlinear_phase_nb(a, 1e-3, p),
         lambda: _accel.nonlinear_phase_np(a, 1e-3, p)),
        ("abs_pow_sum", lambda: _accel.abs_pow_sum_nb(a, p + 1), lambda: _accel.abs_pow_sum_np(a, p + 1)),
    ):
        rows.append((name, n, best_of(nb, repeat), best_of(np_, repeat)))
    return rows


def strang(n, repeat, p, d):
    side = int(round(n ** (1.0 / d)))
    side += side % 2
    g = Grid(d, side, 40.0)
    nl = PowerNonlinearity(-1.0, p)
    r2 = np.sum(g.x ** 2, axis=0)
    a = np.exp(-r2).astype(complex)
    half = _half_multiplier(g, 1e-3)
    out = {}
    saved = _accel.nonlinear_phase
    try:
        for label, kern in (("numba", _accel.nonlinear_phase_nb), ("numpy", _accel.nonlinear_phase_np)):
            _accel.nonlinear_phase = kern
            out[label] = best_of(lambda: _strang_array(g, a, nl, 1e-3, half), repeat)
    finally:
        _accel.nonlinear_phase = saved
    return (f"strang_step d={d}", g.size, out["numba"], out["numpy"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4096, 65536, 262144])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--p", type=float, default=3.0)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = []
    for n in args.sizes:
        rows += kernels(n, args.repeat, args.p)
        rows.append(strang(n, args.repeat, args.p, 1))
    rows.append(strang(256 ** 2, args.repeat, args.p, 2))

    print(f"numba threads: {_accel.numba.get_num_threads()}")
    print(f"{'kernel':<20}{'points':>10}{'numba [ms]':>13}{'numpy [ms]':>13}{'speedup':>9}")
    for name, n, t_nb, t_np in rows:
        print(f"{name:<20}{n:>10}{1e3 * t_nb:>13.3f}{1e3 * t_np:>13.3f}{t_np / t_nb:>9.2f}")


if __name__ == "__main__":
    main()
