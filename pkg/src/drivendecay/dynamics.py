"""Time-domain oracle: amplitude equations on a discretized photon continuum.

The continuum is replaced by quadrature modes (nodes omega_k, weights w_k)
with couplings |phi_k|^2 = w_k * g^2 * omega0 * chi2(omega_k), and the
Schrodinger amplitude equations

    i x'   = omega0 x + sum_k phi_k y_k
    i y_k' = phi_k x + omega_k y_k + B z_k
    i z_k' = B y_k + omega_k z_k

are integrated with an adaptive high-order stepper in the interaction
picture (rotations exp(+i*omega_k t) on y, z and exp(+i*omega0 t) on x are
removed before stepping; the reported amplitudes are lab frame).  A compiled
kernel is used when the extension built; the pure-NumPy twin is the
fallback.  Force the fallback with DRIVENDECAY_FORCE_NUMPY=1.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from . import _dop853
from .errors import (
    DomainError,
    FitQualityError,
    RecurrenceHorizonError,
    RefinementError,
    StiffnessError,
)
from .formfactor import SystemParams
from .selfenergy import PoleResult, gamma_onshell

__all__ = [
    "BACKEND",
    "ModeGrid",
    "AmplitudeState",
    "EvolutionResult",
    "FitResult",
    "build_mode_grid",
    "evolve",
    "survival_probability",
    "fit_decay_rate",
    "ww_survival",
]

if os.environ.get("DRIVENDECAY_FORCE_NUMPY"):
    _kernel = _dop853
    BACKEND = "numpy"
else:
    try:
        from . import _evolve_cy as _kernel  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _kernel = _dop853
        BACKEND = "numpy"


@dataclass(frozen=True)
class ModeGrid:
    """Discretized photon continuum.

    ``couplings2[k]`` is the quadrature-weighted squared coupling
    |phi_k|^2; ``t_recurrence`` is the Poincare horizon 2*pi/(max mode
    spacing inside the emission-line windows), beyond which finite-grid
    revivals contaminate the dynamics.
    """

    nodes: np.ndarray
    couplings2: np.ndarray
    omega_max: float
    rule: str
    declared_tol: float
    t_recurrence: float
    b_intended: float
    omega0: float

    @property
    def count(self) -> int:
        return self.nodes.size

    def coupling_sum(self) -> float:
        return float(np.sum(self.couplings2))


@dataclass(frozen=True)
class AmplitudeState:
    """Lab-frame amplitudes at one instant; norm is conserved up to tolerance."""

    t: float
    x: complex
    y: np.ndarray
    z: np.ndarray

    def norm2(self) -> float:
        return abs(self.x) ** 2 + float(np.sum(np.abs(self.y) ** 2 + np.abs(self.z) ** 2))


@dataclass(frozen=True)
class EvolutionResult:
    """Output of :func:`evolve`: dense survival track plus full snapshots."""

    times: np.ndarray
    survival: np.ndarray
    states: list
    max_norm_drift: float
    n_accepted: int
    n_rejected: int
    grid: ModeGrid
    b: float
    tol: float
    backend: str


@dataclass(frozen=True)
class FitResult:
    gamma: float
    stderr: float
    residual_rms: float
    window: tuple
    n_points: int


def _gl_panel(a: float, b: float, n: int):
    x, w = leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _graded_edges(a: float, b: float, n_panels: int, dense_left: bool,
                  dense_right: bool, ratio: float = 1.6, cap: int = 12):
    """Panel edges with geometrically growing widths away from dense ends.

    Growth is capped at ratio**cap so large regions keep a finite dynamic
    range and the edges stay strictly increasing in floating point.
    """
    n = max(1, n_panels)
    k = np.arange(n)
    if dense_left and dense_right:
        d = np.minimum(k, n - 1 - k)
    elif dense_left:
        d = k
    elif dense_right:
        d = n - 1 - k
    else:
        d = np.zeros(n)
    w = np.minimum(ratio**d, ratio**cap)
    edges = a + (b - a) * np.concatenate(([0.0], np.cumsum(w))) / np.sum(w)
    edges[-1] = b
    return edges


def _merge_windows(wins):
    wins = sorted(wins)
    out = [list(wins[0])]
    for lo, hi in wins[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(w) for w in out]


def build_mode_grid(params: SystemParams, omega_max: float, m: int,
                    rule: str = "gauss_legendre", *, b: float = 0.0,
                    line_halfwidth_gammas: float = 60.0,
                    fine_fraction: float = 0.6,
                    target_tol: float | None = None) -> ModeGrid:
    """Build quadrature nodes and couplings for the photon continuum.

    ``gauss_legendre`` lays composite Gauss-Legendre panels over
    [0, omega_max], refined around the emission lines omega0 +/- B so that
    the mode spacing there resolves the linewidth (spacing ~ gamma(B)/5 for
    the default budget fractions); this is what pushes the recurrence
    horizon past several lifetimes with a few thousand modes.  ``uniform``
    is a plain midpoint rule, mainly for convergence studies.
    """
    w0 = params.omega0
    if omega_max < 10.0 * max(w0, w0 + b):
        raise DomainError("omega_max must be at least 10*max(omega0, omega0+B)")
    if m < 100:
        raise DomainError("need at least 100 modes")

    if rule == "uniform":
        dw = omega_max / m
        nodes = (np.arange(m) + 0.5) * dw
        weights = np.full(m, dw)
        t_rec = 2.0 * math.pi / dw
    elif rule == "gauss_legendre":
        gamma_est = gamma_onshell(params, b) if params.g2 > 0 else 0.0
        lines = [w0 + b]
        if b < w0:
            lines.append(w0 - b)
        wins = []
        if gamma_est > 0:
            half = line_halfwidth_gammas * gamma_est
            for c in lines:
                lo, hi = max(0.0, c - half), min(omega_max, c + half)
                if hi > lo:
                    wins.append((lo, hi))
            wins = _merge_windows(wins)
        panels = []  # (a, b, n)
        n_fine_total = 0
        if wins:
            total_w = sum(hi - lo for lo, hi in wins)
            budget = int(round(fine_fraction * m))
            for lo, hi in wins:
                alloc = max(16, int(round(budget * (hi - lo) / total_w)))
                n_panels = max(2, alloc // 8)
                edges = np.linspace(lo, hi, n_panels + 1)
                for i in range(n_panels):
                    panels.append((edges[i], edges[i + 1], 8))
                n_fine_total += 8 * n_panels
        # coarse regions between/around the fine windows
        bounds = [0.0] + [e for w_ in wins for e in w_] + [omega_max]
        regions = [(bounds[i], bounds[i + 1]) for i in range(0, len(bounds) - 1, 2)]
        regions = [(a_, b_) for a_, b_ in regions if b_ - a_ > 1e-12 * omega_max]
        n_coarse = max(m - n_fine_total, 12 * len(regions))
        width_tot = sum(b_ - a_ for a_, b_ in regions) or 1.0
        fine_dw = (wins[0][1] - wins[0][0]) / max(1, n_fine_total) if wins else omega_max / m
        for a_, b_ in regions:
            alloc = max(12, int(round(n_coarse * (b_ - a_) / width_tot)))
            n_panels = max(1, alloc // 12)
            # denser toward the fine windows bounding the region
            dense_left = a_ > 0 and any(abs(a_ - hi) < 1e-12 * omega_max for _, hi in wins)
            dense_right = any(abs(b_ - lo) < 1e-12 * omega_max for lo, _ in wins)
            edges = _graded_edges(a_, b_, n_panels, dense_left, dense_right)
            for i in range(len(edges) - 1):
                panels.append((edges[i], edges[i + 1], 12))
        nodes_l, weights_l = [], []
        for a_, b_, n_ in sorted(panels):
            x, w_ = _gl_panel(a_, b_, n_)
            nodes_l.append(x)
            weights_l.append(w_)
        nodes = np.concatenate(nodes_l)
        weights = np.concatenate(weights_l)
        order = np.argsort(nodes)
        nodes, weights = nodes[order], weights[order]
        if wins:
            t_rec = math.inf
            for lo, hi in wins:
                sel = (nodes >= lo) & (nodes <= hi)
                if np.count_nonzero(sel) > 2:
                    dmax = float(np.max(np.diff(nodes[sel])))
                    t_rec = min(t_rec, 2.0 * math.pi / dmax)
            if not math.isfinite(t_rec):
                t_rec = 2.0 * math.pi / float(np.max(np.diff(nodes)))
        else:
            t_rec = 2.0 * math.pi / float(np.max(np.diff(nodes)))
    else:
        raise DomainError(f"unknown rule {rule!r}; use 'uniform' or 'gauss_legendre'")

    if np.any(np.diff(nodes) <= 0):
        raise RefinementError("mode nodes are not strictly increasing")
    couplings2 = weights * params.g2 * params.omega0 * params.form_factor.chi2(nodes)

    if params.g2 > 0:
        ref, _ = quad(lambda x: float(params.form_factor.chi2(x)), 0.0, omega_max,
                      points=[min(params.form_factor.lambda_cut, omega_max), w0],
                      limit=300, epsabs=0.0, epsrel=1e-12)
        ref *= params.g2 * params.omega0
        declared = abs(float(np.sum(couplings2)) - ref) / ref
    else:
        declared = 0.0
    if target_tol is not None and declared > target_tol:
        raise RefinementError(
            f"grid quadrature error {declared:.2e} above requested {target_tol:.2e}; "
            "increase the mode count"
        )
    return ModeGrid(
        nodes=nodes,
        couplings2=couplings2,
        omega_max=float(omega_max),
        rule=rule,
        declared_tol=declared,
        t_recurrence=t_rec,
        b_intended=float(b),
        omega0=w0,
    )


def evolve(grid: ModeGrid, params: SystemParams, b: float, t_final: float,
           tol: float = 1e-9, *, n_save: int = 33, n_dense: int = 4000,
           max_steps: int = 20_000_000) -> EvolutionResult:
    """Integrate from x(0)=1, y=z=0 up to ``t_final``.

    ``tol`` is the norm-drift budget: |norm^2 - 1| stays below about 10*tol
    at all recorded times.  Refuses horizons beyond half the grid recurrence
    time, where the discretized continuum stops mimicking the real one.
    """
    if t_final <= 0:
        raise DomainError("t_final must be positive")
    if t_final > 0.5 * grid.t_recurrence:
        raise RecurrenceHorizonError(
            f"t_final = {t_final:g} exceeds half the grid recurrence time "
            f"{grid.t_recurrence:g}; rebuild the grid with more modes or a "
            "narrower window"
        )
    if b != grid.b_intended and grid.rule == "gauss_legendre":
        warnings.warn("grid was refined for a different B; line resolution may suffer",
                      stacklevel=2)
    m = grid.count
    delta = grid.nodes - params.omega0
    phi = np.sqrt(grid.couplings2)
    # fastest phase in the rotating frame bounds the step size from above;
    # refuse runs that cannot finish within the step budget
    d_scale = float(np.max(np.abs(delta))) + abs(b)
    if t_final * d_scale > 0.4 * max_steps:
        raise StiffnessError(
            f"~{t_final * d_scale / 0.4:.1e} steps needed for t_final = {t_final:g} "
            f"(budget {max_steps:.0e}); the lifetime is too long for this grid. "
            "Increase g2, shorten t_final or raise max_steps"
        )
    with_z = b != 0.0  # at B = 0 the z amplitudes are identically zero
    dim = 2 * m + 1 if with_z else m + 1
    u0 = np.zeros(dim, dtype=complex)
    u0[0] = 1.0
    atol = max(1e-13, min(1e-9, tol / 30.0))
    rtol = 1e-3 * atol
    drift_rate = 3.0 * tol / t_final
    save_times = np.linspace(0.0, t_final, n_save)
    res = _kernel.integrate_amplitudes(delta, phi, float(b), u0, float(t_final),
                                       atol, rtol, save_times, n_dense, max_steps,
                                       with_z=with_z, drift_rate=drift_rate)
    if res["status"] == 1:
        raise StiffnessError(
            "step size underflow; loosen tol, reduce omega_max or refine the grid"
        )
    if res["status"] == 2:
        raise StiffnessError("step budget exhausted before t_final")
    states = []
    for i, ts in enumerate(res["save_times"]):
        u = res["snapshots"][i]
        phase = np.exp(-1j * grid.nodes * ts)
        z = u[m + 1:] * phase if with_z else np.zeros(m, dtype=complex)
        states.append(AmplitudeState(
            t=float(ts),
            x=complex(u[0] * np.exp(-1j * params.omega0 * ts)),
            y=u[1:m + 1] * phase,
            z=z,
        ))
    drift = res["max_norm_drift"]
    if drift > 10.0 * tol:
        warnings.warn(f"norm drift {drift:.2e} exceeded 10*tol", stacklevel=2)
    return EvolutionResult(
        times=res["t_dense"],
        survival=res["p_dense"],
        states=states,
        max_norm_drift=drift,
        n_accepted=int(res["n_accepted"]),
        n_rejected=int(res["n_rejected"]),
        grid=grid,
        b=float(b),
        tol=tol,
        backend=BACKEND,
    )


def survival_probability(result: EvolutionResult):
    """Sampled survival curve P(t) = |x(t)|^2 from the dense track."""
    p = np.clip(result.survival, 0.0, None)
    return result.times.copy(), p


def fit_decay_rate(curve, window=None, gamma_seed: float | None = None,
                   max_residual: float = 0.02) -> FitResult:
    """Log-linear least-squares fit of the decay rate on a time window.

    ``curve`` is (t, P) arrays or an :class:`EvolutionResult`.  The default
    window starts past the short-time transient at 0.5/gamma_seed.  Raises
    :class:`FitQualityError` when the relative rms residual of the linear
    fit exceeds ``max_residual`` (non-exponential window).
    """
    if isinstance(curve, EvolutionResult):
        t, p = survival_probability(curve)
    else:
        t, p = np.asarray(curve[0], dtype=float), np.asarray(curve[1], dtype=float)
    if window is None:
        if gamma_seed is None or gamma_seed <= 0:
            raise DomainError("need a window or a positive gamma_seed")
        window = (0.5 / gamma_seed, float(t[-1]))
    t1, t2 = window
    sel = (t >= t1) & (t <= t2) & (p > 0.0)
    if np.count_nonzero(sel) < 8:
        raise FitQualityError(f"fewer than 8 usable points in window ({t1:g}, {t2:g})")
    ts, ls = t[sel], np.log(p[sel])
    coef, cov = np.polyfit(ts, ls, 1, cov=True)
    slope = coef[0]
    resid = ls - np.polyval(coef, ts)
    rms = float(np.sqrt(np.mean(resid**2)))
    span = abs(slope) * (ts[-1] - ts[0])
    rel = rms / span if span > 0 else math.inf
    if rel > max_residual:
        raise FitQualityError(
            f"window not exponential: rms residual {rms:.2e} is {rel:.1%} of the "
            f"log-decay span {span:.2e}"
        )
    return FitResult(
        gamma=-float(slope),
        stderr=float(np.sqrt(cov[0, 0])),
        residual_rms=rms,
        window=(float(t1), float(t2)),
        n_points=int(np.count_nonzero(sel)),
    )


def ww_survival(pole: PoleResult, t):
    """Pole-approximation survival exp(-gamma t) (all cut contributions dropped)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    val = np.exp(-pole.gamma * t)
    return float(val) if val.ndim == 0 else val
