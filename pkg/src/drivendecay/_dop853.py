"""Pure-NumPy fallback integrator for the amplitude equations.

Same algorithm as the compiled kernel in ``_evolve_cy``: an adaptive
Dormand-Prince 8(5,3) stepper in the interaction picture, with the stage
phase factors exp(i*delta_k*c_s*h) cached per quantized step size so the
per-step cost is arithmetic, not transcendental.

State layout: u = [x, y_0..y_{M-1}, z_0..z_{M-1}] with the fast rotations
exp(+i*omega_k t) (and exp(+i*omega0 t) on x) already removed.  Equations:

    x'   = -i sum_k phi_k conj(p_k) y_k,     p_k(t) = exp(+i*delta_k*t)
    y_k' = -i (phi_k p_k x + B z_k)
    z_k' = -i B y_k

with delta_k = omega_k - omega0 and phi_k real.
"""

from __future__ import annotations

import math

import numpy as np

from . import _dop853_tableau as tb

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 6.0
_LOG_R = 0.25 * math.log(2.0)  # step sizes quantized to 2**(k/4)
_RENORM_EVERY = 256


def _rhs(out, u, phase, phi, b, m, with_z):
    x = u[0]
    y = u[1:m + 1]
    out[0] = -1j * np.dot(phi, np.conj(phase) * y)
    if with_z:
        out[1:m + 1] = -1j * (phi * phase * x + b * u[m + 1:])
        out[m + 1:] = (-1j * b) * y
    else:
        out[1:m + 1] = (-1j * x) * (phi * phase)


def _stage_tables(delta, h):
    e = np.exp(1j * np.outer(tb.C, delta * h))
    f = np.exp(1j * (delta * h))
    return e, f


def integrate_amplitudes(delta, phi, b, u0, t_final, atol, rtol,
                         save_times, n_dense=4000, max_steps=20_000_000,
                         with_z=True, drift_rate=0.0):
    """Integrate to ``t_final``; returns a result dict (see keys below).

    ``save_times`` are hit exactly (the step is clamped); the dense survival
    track records |x|^2 at accepted steps spaced by ~t_final/n_dense.
    """
    delta = np.ascontiguousarray(delta, dtype=float)
    phi = np.ascontiguousarray(phi, dtype=float)
    m = delta.size
    dim = 2 * m + 1 if with_z else m + 1
    u = np.array(u0, dtype=complex)
    if u.shape != (dim,):
        raise ValueError("u0 has wrong shape")

    save_times = np.asarray(sorted(set(float(t) for t in save_times) | {float(t_final)}))
    snapshots = np.empty((save_times.size, dim), dtype=complex)
    snap_i = 0

    cap = n_dense + 16
    t_dense = np.empty(cap)
    p_dense = np.empty(cap)
    nd = 0
    rec_dt = t_final / max(1, n_dense)
    next_rec = 0.0

    a_mat, b_vec, c_vec = tb.A, tb.B, tb.C
    e3, e5 = tb.E3, tb.E5
    k_arr = np.empty((tb.N_STAGES + 1, dim), dtype=complex)
    tmp = np.empty(dim, dtype=complex)

    t = 0.0
    t_comp = 0.0  # Kahan compensation
    n_prev = float(np.sum(np.abs(u) ** 2))
    p0 = np.ones(m, dtype=complex)
    norm_dev = 0.0

    d_scale = float(np.max(np.abs(delta))) if m else 1.0
    h = min(1e-2 / (d_scale + abs(b) + 1.0), t_final / 10.0) or t_final / 10.0
    kq = math.floor(math.log(h) / _LOG_R)
    h = math.exp(kq * _LOG_R)
    cache = {}

    def tables_for(kq):
        if kq not in cache:
            cache[kq] = _stage_tables(delta, math.exp(kq * _LOG_R))
        return cache[kq]

    _rhs(k_arr[0], u, p0, phi, b, m, with_z)
    n_acc = n_rej = n_steps = 0
    fsal_valid = True

    while True:
        # record dense survival at step starts
        if t >= next_rec and nd < cap:
            t_dense[nd] = t
            p_dense[nd] = abs(u[0]) ** 2
            nd += 1
            next_rec = t + rec_dt
        # snapshots exactly at save points
        while snap_i < save_times.size and t >= save_times[snap_i] - 1e-12 * max(t_final, 1.0):
            snapshots[snap_i] = u
            snap_i += 1
        if snap_i >= save_times.size and t >= t_final - 1e-12 * max(t_final, 1.0):
            if nd < cap and (nd == 0 or t_dense[nd - 1] < t):
                t_dense[nd] = t
                p_dense[nd] = abs(u[0]) ** 2
                nd += 1
            break
        if n_steps >= max_steps:
            return _result(2, "max_steps exceeded", t, u, t_dense[:nd], p_dense[:nd],
                           snapshots, save_times, norm_dev, n_acc, n_rej)

        target = save_times[snap_i]
        h_cur = math.exp(kq * _LOG_R)
        if t + h_cur >= target:
            h_step = target - t
            e_tab, f_tab = _stage_tables(delta, h_step)
            quantized = False
        else:
            h_step = h_cur
            e_tab, f_tab = tables_for(kq)
            quantized = True

        if quantized and h_step < 4e-16 * max(t, t_final):
            return _result(1, "step size underflow", t, u, t_dense[:nd], p_dense[:nd],
                           snapshots, save_times, norm_dev, n_acc, n_rej)

        if not fsal_valid:
            _rhs(k_arr[0], u, p0, phi, b, m, with_z)
            fsal_valid = True

        for s in range(1, tb.N_STAGES):
            np.dot(a_mat[s, :s], k_arr[:s], out=tmp)
            tmp *= h_step
            tmp += u
            _rhs(k_arr[s], tmp, p0 * e_tab[s], phi, b, m, with_z)
        np.dot(b_vec, k_arr[:tb.N_STAGES], out=tmp)
        tmp *= h_step
        u_new = u + tmp
        _rhs(k_arr[tb.N_STAGES], u_new, p0 * f_tab, phi, b, m, with_z)

        err5 = np.dot(e5, k_arr)
        err3 = np.dot(e3, k_arr)
        sc = atol + rtol * np.maximum(np.abs(u), np.abs(u_new))
        n5 = float(np.sum(np.abs(err5 / sc) ** 2))
        n3 = float(np.sum(np.abs(err3 / sc) ** 2))
        denom = n5 + 0.01 * n3
        err_norm = abs(h_step) * n5 / math.sqrt(denom * dim) if denom > 0 else 0.0
        n_steps += 1

        # per-step norm-drift budget, pro-rated over the horizon
        nn = float(np.sum(np.abs(u_new) ** 2))
        dn = abs(nn - n_prev)
        dbudget = max(drift_rate * h_step, 8e-15) if drift_rate > 0 else math.inf

        if err_norm < 1.0 and dn <= dbudget:
            y = t_comp + h_step
            tt = t + y
            t_comp = y - (tt - t)
            t = tt
            u = u_new
            n_prev = nn
            p0 = p0 * f_tab
            k_arr[0] = k_arr[tb.N_STAGES]
            fsal_valid = True
            n_acc += 1
            norm_dev = max(norm_dev, abs(nn - 1.0))
            if n_acc % _RENORM_EVERY == 0:
                p0 = np.exp(1j * (delta * t))
                fsal_valid = False
            factor = _SAFETY * err_norm ** (-1.0 / 8.0) if err_norm > 0 else _MAX_FACTOR
            if drift_rate > 0 and dn > 0:
                factor = min(factor, _SAFETY * (dbudget / dn) ** (1.0 / 8.0))
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if quantized:
                kq = min(kq + 8, math.floor(math.log(h_step * factor) / _LOG_R))
        else:
            n_rej += 1
            factor = _SAFETY * err_norm ** (-1.0 / 8.0) if err_norm >= 1.0 else 1.0
            if dn > dbudget:
                factor = min(factor, _SAFETY * (dbudget / dn) ** (1.0 / 8.0))
            factor = max(_MIN_FACTOR, factor)
            kq_new = math.floor(math.log(h_step * factor) / _LOG_R)
            kq = min(kq - 1, kq_new)
            fsal_valid = True  # K[0] still valid at unchanged (t, u)

    return _result(0, "ok", t, u, t_dense[:nd], p_dense[:nd], snapshots, save_times,
                   norm_dev, n_acc, n_rej)


def _result(status, message, t, u, t_dense, p_dense, snapshots, save_times,
            norm_dev, n_acc, n_rej):
    return {
        "status": status,
        "message": message,
        "t_end": t,
        "u_end": u,
        "t_dense": np.array(t_dense),
        "p_dense": np.array(p_dense),
        "snapshots": snapshots,
        "save_times": save_times,
        "max_norm_drift": norm_dev,
        "n_accepted": n_acc,
        "n_rejected": n_rej,
    }
