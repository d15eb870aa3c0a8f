#!/usr/bin/env python3
"""Benchmark the compiled amplitude stepper against the NumPy fallback.

Both backends run the identical Dormand-Prince 8(5,3) algorithm on the
same mode grid, so the survival curves must agree to integrator accuracy;
the compiled kernel's advantage is pure per-step cost.

    python benchmarks/bench_evolve.py [--modes 1200] [--t-final 400]
"""

import argparse
import time
import warnings

import numpy as np

from drivendecay import _dop853
from drivendecay.dynamics import build_mode_grid
from drivendecay.formfactor import FormFactorModel, SystemParams

try:
    from drivendecay import _evolve_cy
except ImportError:
    _evolve_cy = None


def run(kernel, grid, b, t_final, tol=1e-9):
    m = grid.count
    u0 = np.zeros(2 * m + 1, dtype=complex)
    u0[0] = 1.0
    t0 = time.perf_counter()
    res = kernel.integrate_amplitudes(
        grid.nodes - 1.0, np.sqrt(grid.couplings2), b, u0, t_final,
        atol=tol / 30.0, rtol=tol / 3e4, save_times=[t_final],
        n_dense=2000, max_steps=10**7, with_z=True, drift_rate=3.0 * tol / t_final)
    dt = time.perf_counter() - t0
    return res, dt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, default=1200)
    ap.add_argument("--t-final", type=float, default=400.0)
    ap.add_argument("--b", type=float, default=0.4)
    args = ap.parse_args()

    model = FormFactorModel(kappa=3, lambda_cut=3.0, beta=2.0)
    params = SystemParams(omega0=1.0, g2=1e-4, form_factor=model)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid = build_mode_grid(params, 20.0 * (1 + args.b), args.modes,
                               "gauss_legendre", b=args.b)
    print(f"grid: {grid.count} modes, omega_max {grid.omega_max:g}, "
          f"t_final {args.t_final:g} (recurrence horizon {grid.t_recurrence:.0f})")

    ref, dt_np = run(_dop853, grid, args.b, args.t_final)
    print(f"numpy fallback : {dt_np:8.2f} s   {ref['n_accepted']} steps "
          f"({ref['n_rejected']} rejected), drift {ref['max_norm_drift']:.2e}")

    if _evolve_cy is None:
        print("compiled kernel not built; nothing to compare")
        return

    fast, dt_cy = run(_evolve_cy, grid, args.b, args.t_final)
    print(f"compiled kernel: {dt_cy:8.2f} s   {fast['n_accepted']} steps "
          f"({fast['n_rejected']} rejected), drift {fast['max_norm_drift']:.2e}")

    gap = np.max(np.abs(fast["snapshots"][-1] - ref["snapshots"][-1]))
    print(f"final-state agreement: max component gap {gap:.2e}")
    assert gap < 1e-8, "backends disagree beyond integrator accuracy"
    print(f"speedup: {dt_np / dt_cy:.1f}x")


if __name__ == "__main__":
    main()
