# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Dormand-Prince 8(5,3) stepper for the amplitude equations.

Algorithmically identical to the pure-NumPy fallback in ``_dop853``; see
that module for the state layout and the phase-caching scheme.  The stage
combinations run as contiguous row passes over the (stages x dim) work
array using the tableau's sparsity, which keeps the whole step L2-resident.
When ``with_z`` is false the z block (identically zero at B = 0) is absent
and the state is [x, y_0..y_{M-1}].
"""

import math

import numpy as np

from . import _dop853_tableau as tb

cimport numpy as cnp

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)
    double complex conj(double complex)

ctypedef double complex c16

cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 6.0
cdef double _LOG_R = 0.25 * 0.6931471805599453
cdef int _RENORM_EVERY = 256
cdef int NS = 12  # stages


cdef void _rhs(int m, bint with_z, double b, double[::1] phi, c16[::1] phase,
               c16* u, c16* out) noexcept nogil:
    cdef int k
    cdef c16 acc = 0
    cdef c16 x = u[0]
    cdef c16 mi = -1j
    for k in range(m):
        acc = acc + phi[k] * conj(phase[k]) * u[1 + k]
    out[0] = mi * acc
    if with_z:
        for k in range(m):
            out[1 + k] = mi * (phi[k] * phase[k] * x + b * u[1 + m + k])
            out[1 + m + k] = mi * b * u[1 + k]
    else:
        for k in range(m):
            out[1 + k] = mi * phi[k] * phase[k] * x


def _stage_tables(double[::1] delta, double h):
    cdef int m = delta.shape[0]
    e = np.empty((NS, m), dtype=complex)
    f = np.empty(m, dtype=complex)
    cdef c16[:, ::1] ev = e
    cdef c16[::1] fv = f
    cdef double[::1] c_vec = np.ascontiguousarray(tb.C, dtype=float)
    cdef int s, k
    with nogil:
        for s in range(NS):
            for k in range(m):
                ev[s, k] = cexp(1j * delta[k] * c_vec[s] * h)
        for k in range(m):
            fv[k] = cexp(1j * delta[k] * h)
    return e, f


def integrate_amplitudes(delta, phi, double b, u0, double t_final,
                         double atol, double rtol, save_times,
                         int n_dense=4000, long max_steps=20_000_000,
                         bint with_z=True, double drift_rate=0.0):
    """Compiled twin of ``_dop853.integrate_amplitudes`` (same result dict)."""
    cdef cnp.ndarray[double, ndim=1] delta_a = np.ascontiguousarray(delta, dtype=float)
    cdef cnp.ndarray[double, ndim=1] phi_a = np.ascontiguousarray(phi, dtype=float)
    cdef int m = delta_a.shape[0]
    cdef int dim = (2 * m + 1) if with_z else (m + 1)
    cdef cnp.ndarray[c16, ndim=1] u = np.array(u0, dtype=complex)
    if u.shape[0] != dim:
        raise ValueError("u0 has wrong shape")

    saves = np.asarray(sorted(set(float(t) for t in save_times) | {float(t_final)}))
    cdef cnp.ndarray[double, ndim=1] save_a = saves
    cdef cnp.ndarray[c16, ndim=2] snapshots = np.empty((saves.size, dim), dtype=complex)
    cdef int snap_i = 0, n_save = saves.size

    cdef int cap = n_dense + 16
    cdef cnp.ndarray[double, ndim=1] t_dense = np.empty(cap)
    cdef cnp.ndarray[double, ndim=1] p_dense = np.empty(cap)
    cdef int nd = 0
    cdef double rec_dt = t_final / max(1, n_dense)
    cdef double next_rec = 0.0

    # tableau, with per-row nonzero index lists for the sparse combinations
    A_np = np.ascontiguousarray(tb.A, dtype=float)
    cdef cnp.ndarray[double, ndim=2] A = A_np
    cdef cnp.ndarray[double, ndim=1] B = np.ascontiguousarray(tb.B, dtype=float)
    cdef cnp.ndarray[double, ndim=1] E3 = np.ascontiguousarray(tb.E3, dtype=float)
    cdef cnp.ndarray[double, ndim=1] E5 = np.ascontiguousarray(tb.E5, dtype=float)
    nz_rows = [np.nonzero(A_np[s, :s])[0].astype(np.int32) for s in range(NS)]
    counts = np.array([r.size for r in nz_rows], dtype=np.int32)
    flat = np.concatenate([r for r in nz_rows if r.size]) if any(r.size for r in nz_rows) else np.zeros(0, np.int32)
    starts = np.zeros(NS + 1, dtype=np.int32)
    starts[1:] = np.cumsum(counts)
    cdef cnp.ndarray[int, ndim=1] nzA = np.ascontiguousarray(flat, dtype=np.int32)
    cdef cnp.ndarray[int, ndim=1] nz_start = np.ascontiguousarray(starts, dtype=np.int32)
    cdef cnp.ndarray[int, ndim=1] nzB = np.nonzero(tb.B)[0].astype(np.int32)
    cdef cnp.ndarray[int, ndim=1] nzE3 = np.nonzero(tb.E3)[0].astype(np.int32)
    cdef cnp.ndarray[int, ndim=1] nzE5 = np.nonzero(tb.E5)[0].astype(np.int32)
    cdef int nB = nzB.shape[0], nE3 = nzE3.shape[0], nE5 = nzE5.shape[0]

    cdef cnp.ndarray[c16, ndim=2] K = np.zeros((NS + 1, dim), dtype=complex)
    cdef cnp.ndarray[c16, ndim=1] tmp = np.empty(dim, dtype=complex)
    cdef cnp.ndarray[c16, ndim=1] u_new = np.empty(dim, dtype=complex)
    cdef cnp.ndarray[c16, ndim=1] err5 = np.empty(dim, dtype=complex)
    cdef cnp.ndarray[c16, ndim=1] err3 = np.empty(dim, dtype=complex)
    cdef cnp.ndarray[c16, ndim=1] p0 = np.ones(m, dtype=complex)
    cdef cnp.ndarray[c16, ndim=1] stage_phase = np.empty(m, dtype=complex)

    cdef c16[:, ::1] Kv = K
    cdef c16[::1] tmpv = tmp
    cdef c16[::1] unv = u_new
    cdef c16[::1] e5v = err5
    cdef c16[::1] e3v = err3
    cdef c16[::1] uv = u
    cdef c16[::1] p0v = p0
    cdef c16[::1] spv = stage_phase
    cdef double[:, ::1] Av = A
    cdef double[::1] Bv = B
    cdef double[::1] E3v = E3
    cdef double[::1] E5v = E5
    cdef double[::1] deltav = delta_a
    cdef double[::1] phiv = phi_a
    cdef int[::1] nzAv = nzA
    cdef int[::1] nzsv = nz_start
    cdef int[::1] nzBv = nzB
    cdef int[::1] nzE3v = nzE3
    cdef int[::1] nzE5v = nzE5

    cdef double t = 0.0, t_comp = 0.0, norm_dev = 0.0
    cdef double d_scale = 0.0
    cdef double n_prev = float(np.sum(np.abs(u) ** 2))
    cdef double dn, dbudget, fdrift
    cdef int k, s, j, idx
    for k in range(m):
        if abs(delta_a[k]) > d_scale:
            d_scale = abs(delta_a[k])
    cdef double h = min(1e-2 / (d_scale + abs(b) + 1.0), t_final / 10.0)
    if h <= 0:
        h = t_final / 10.0
    cdef long kq = <long>math.floor(math.log(h) / _LOG_R)
    cdef dict cache = {}

    cdef long n_acc = 0, n_rej = 0, n_steps = 0
    cdef bint fsal_valid = True
    cdef bint quantized
    cdef double h_step, h_cur, target, err_norm, n5, n3, denom, sc, au, aun, factor, coef
    cdef double eps_t = 1e-12 * max(t_final, 1.0)
    cdef int status = 0
    cdef str message = "ok"
    cdef c16[:, ::1] ev
    cdef c16[::1] fv
    cdef double y_k, tt, nn

    _rhs(m, with_z, b, phiv, p0v, &uv[0], &Kv[0, 0])

    while True:
        if t >= next_rec and nd < cap:
            t_dense[nd] = t
            p_dense[nd] = uv[0].real ** 2 + uv[0].imag ** 2
            nd += 1
            next_rec = t + rec_dt
        while snap_i < n_save and t >= save_a[snap_i] - eps_t:
            for j in range(dim):
                snapshots[snap_i, j] = uv[j]
            snap_i += 1
        if snap_i >= n_save and t >= t_final - eps_t:
            if nd < cap and (nd == 0 or t_dense[nd - 1] < t):
                t_dense[nd] = t
                p_dense[nd] = uv[0].real ** 2 + uv[0].imag ** 2
                nd += 1
            break
        if n_steps >= max_steps:
            status = 2
            message = "max_steps exceeded"
            break

        target = save_a[snap_i]
        h_cur = math.exp(kq * _LOG_R)
        if t + h_cur >= target:
            h_step = target - t
            e_tab, f_tab = _stage_tables(deltav, h_step)
            quantized = False
        else:
            h_step = h_cur
            if kq not in cache:
                cache[kq] = _stage_tables(deltav, h_cur)
            e_tab, f_tab = cache[kq]
            quantized = True
        ev = e_tab
        fv = f_tab

        if quantized and h_step < 4e-16 * max(t, t_final):
            status = 1
            message = "step size underflow"
            break

        if not fsal_valid:
            _rhs(m, with_z, b, phiv, p0v, &uv[0], &Kv[0, 0])
            fsal_valid = True

        with nogil:
            for s in range(1, NS):
                for j in range(dim):
                    tmpv[j] = uv[j]
                for idx in range(nzsv[s], nzsv[s + 1]):
                    k = nzAv[idx]
                    coef = h_step * Av[s, k]
                    for j in range(dim):
                        tmpv[j] = tmpv[j] + coef * Kv[k, j]
                for k in range(m):
                    spv[k] = p0v[k] * ev[s, k]
                _rhs(m, with_z, b, phiv, spv, &tmpv[0], &Kv[s, 0])
            for j in range(dim):
                unv[j] = uv[j]
            for idx in range(nB):
                k = nzBv[idx]
                coef = h_step * Bv[k]
                for j in range(dim):
                    unv[j] = unv[j] + coef * Kv[k, j]
            for k in range(m):
                spv[k] = p0v[k] * fv[k]
            _rhs(m, with_z, b, phiv, spv, &unv[0], &Kv[NS, 0])

            # error rows: include the fresh K[NS] (last entry of E3/E5)
            for j in range(dim):
                e5v[j] = E5v[NS] * Kv[NS, j]
                e3v[j] = E3v[NS] * Kv[NS, j]
            for idx in range(nE5):
                k = nzE5v[idx]
                if k < NS:
                    coef = E5v[k]
                    for j in range(dim):
                        e5v[j] = e5v[j] + coef * Kv[k, j]
            for idx in range(nE3):
                k = nzE3v[idx]
                if k < NS:
                    coef = E3v[k]
                    for j in range(dim):
                        e3v[j] = e3v[j] + coef * Kv[k, j]
            n5 = 0.0
            n3 = 0.0
            nn = 0.0
            for j in range(dim):
                au = cabs(uv[j])
                aun = cabs(unv[j])
                nn += unv[j].real ** 2 + unv[j].imag ** 2
                sc = atol + rtol * (au if au > aun else aun)
                n5 += (e5v[j].real ** 2 + e5v[j].imag ** 2) / (sc * sc)
                n3 += (e3v[j].real ** 2 + e3v[j].imag ** 2) / (sc * sc)
        denom = n5 + 0.01 * n3
        err_norm = abs(h_step) * n5 / math.sqrt(denom * dim) if denom > 0 else 0.0
        n_steps += 1

        # per-step norm-drift budget, pro-rated over the horizon
        dn = abs(nn - n_prev)
        dbudget = max(drift_rate * h_step, 8e-15) if drift_rate > 0 else math.inf

        if err_norm < 1.0 and dn <= dbudget:
            y_k = t_comp + h_step
            tt = t + y_k
            t_comp = y_k - (tt - t)
            t = tt
            n_prev = nn
            with nogil:
                for j in range(dim):
                    uv[j] = unv[j]
                for k in range(m):
                    p0v[k] = p0v[k] * fv[k]
                for j in range(dim):
                    Kv[0, j] = Kv[NS, j]
            if abs(nn - 1.0) > norm_dev:
                norm_dev = abs(nn - 1.0)
            n_acc += 1
            if n_acc % _RENORM_EVERY == 0:
                with nogil:
                    for k in range(m):
                        p0v[k] = cexp(1j * deltav[k] * t)
                fsal_valid = False
            if err_norm > 0:
                factor = _SAFETY * err_norm ** (-1.0 / 8.0)
            else:
                factor = _MAX_FACTOR
            if drift_rate > 0 and dn > 0:
                fdrift = _SAFETY * (dbudget / dn) ** (1.0 / 8.0)
                if fdrift < factor:
                    factor = fdrift
            if factor > _MAX_FACTOR:
                factor = _MAX_FACTOR
            elif factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            if quantized:
                kq = min(kq + 8, <long>math.floor(math.log(h_step * factor) / _LOG_R))
        else:
            n_rej += 1
            factor = _SAFETY * err_norm ** (-1.0 / 8.0) if err_norm >= 1.0 else 1.0
            if dn > dbudget:
                fdrift = _SAFETY * (dbudget / dn) ** (1.0 / 8.0)
                if fdrift < factor:
                    factor = fdrift
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            kq = min(kq - 1, <long>math.floor(math.log(h_step * factor) / _LOG_R))
            fsal_valid = True

    return {
        "status": status,
        "message": message,
        "t_end": t,
        "u_end": u,
        "t_dense": t_dense[:nd].copy(),
        "p_dense": p_dense[:nd].copy(),
        "snapshots": snapshots,
        "save_times": saves,
        "max_norm_drift": norm_dev,
        "n_accepted": n_acc,
        "n_rejected": n_rej,
    }
