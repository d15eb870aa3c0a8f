"""Self-energy of the decaying level, Riemann-sheet continuations and poles.

Laplace-domain objects (all in units where the transform variable is s):

    q(s)      = -i * Integral_0^inf chi2(omega) / (omega - i s) domega
    Q(s)      = g^2 * omega0 * q(s)
    Q(B, s)   = (1/2) * [Q(s + iB) + Q(s - iB)]        (laser on)

``q`` is analytic off the negative imaginary axis (the branch cut); with the
laser on the two shifted copies produce cuts along (-i inf, -iB] and
(-i inf, +iB].  The decay pole solves s + i*omega0 + Q(B, s) = 0 on the
determination reached by continuing from Re s > 0 downward past the cuts:
both copies continued for B < omega0 (sheet III; at B = 0 the coincident
cuts make this the usual second sheet), the upper copy only for B > omega0
(sheet II).  The pole position is reported as

    s_pole = -i*omega0 + i*delta_e - gamma/2.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    ConvergenceError,
    CutError,
    DegenerateRadiusError,
    DomainError,
    NumericsError,
    QuadratureError,
    SheetError,
    UnphysicalRegimeWarning,
)
from .formfactor import FormFactorModel, SystemParams, TransitionSpec

__all__ = [
    "SheetLabel",
    "PoleResult",
    "q_boundary",
    "q_sheet_i",
    "q_sheet_ii",
    "self_energy",
    "pole_perturbative",
    "pole_newton",
    "gamma_ratio_closed_form",
    "gamma_large_b",
    "golden_rule_rate",
    "gamma_onshell",
]


class SheetLabel(enum.Enum):
    """Determination of Q(B, s).  III needs 0 < B < omega0 (pole under both cuts)."""

    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class PoleResult:
    """Located decay pole and derived observables.

    gamma = -2 Re s_pole, delta_e = omega0 + Im s_pole, and ``residual`` is
    |s + i*omega0 + Q(B, s)| at the returned point.
    """

    s_pole: complex
    gamma: float
    delta_e: float
    sheet: SheetLabel
    method: str
    residual: float
    b: float = 0.0

    def as_record(self) -> dict:
        return {
            "re_s": self.s_pole.real,
            "im_s": self.s_pole.imag,
            "gamma": self.gamma,
            "delta_E": self.delta_e,
            "sheet": self.sheet.value,
            "method": self.method,
            "residual": self.residual,
        }


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------

_QUAD_LIMIT = 300


def _quad_piece(f, a, b, epsabs, epsrel, points=None):
    """Complex-valued adaptive quadrature; returns (value, reported error)."""
    kw = {"limit": _QUAD_LIMIT, "epsabs": epsabs, "epsrel": epsrel}
    if points is not None and np.isfinite(b):
        pts = sorted({p for p in points if a < p < b})
        if pts:
            kw["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        re, ere = quad(lambda x: f(x).real, a, b, **kw)
        im, eim = quad(lambda x: f(x).imag, a, b, **kw)
    return complex(re, im), ere + eim


def _chi_ref(model: FormFactorModel, r: float) -> float:
    """Magnitude scale of chi^2 over the integration range."""
    cands = [model.omega0_ref, model.lambda_cut]
    if r > 0:
        cands.append(r)
    return max(float(model.chi2(x)) for x in cands) + 1e-300


def _dispersion_integral(model: FormFactorModel, sigma: complex) -> complex:
    """J(sigma) = Integral_0^inf chi2(omega)/(omega - sigma) domega, sigma off [0, inf).

    For sigma near the positive real axis the integrable singularity is
    removed by subtracting chi2 continued to sigma; the subtracted term is
    restored through the principal logarithm, whose branch reproduces the
    sheet-I cut.  Two quadrature passes: the first estimates the magnitude,
    the second tightens absolute tolerances around it.
    """
    lam = model.lambda_cut
    r, y = sigma.real, sigma.imag
    if y == 0.0 and r >= 0.0:
        raise CutError("sigma on [0, inf): use q_boundary for boundary values")
    cref = _chi_ref(model, r)
    w = 8.0 * max(lam, abs(sigma), model.omega0_ref)
    subtract = r > 0.0 and abs(y) < 0.05 * (r + lam)

    def compute(epsabs, epsrel):
        err = 0.0
        if subtract:
            cs = model.chi2_analytic(sigma)

            def fsub(omega):
                return (model.chi2(omega) - cs) / (omega - sigma)

            val, e = _quad_piece(fsub, 0.0, w, epsabs, epsrel, points=[r, lam])
            err += e
            val += cs * (cmath.log(w - sigma) - cmath.log(-sigma))
        else:
            def fdir(omega):
                return model.chi2(omega) / (omega - sigma)

            val, e = _quad_piece(fdir, 0.0, w, epsabs, epsrel, points=[r, lam])
            err += e

        def ftail(omega):
            return model.chi2(omega) / (omega - sigma)

        tail, e = _quad_piece(ftail, w, np.inf, epsabs, epsrel)
        err += e
        return val + tail, err

    rough, _ = compute(1e-8 * cref, 1e-8)
    scale = abs(rough) + 0.01 * cref
    val, err = compute(1e-13 * scale, 1e-13)
    if err > 1e-9 * scale:
        raise QuadratureError(
            f"dispersion integral at sigma={sigma:g} did not converge "
            f"(reported error {err:g}, scale {scale:g})",
            estimate=val,
            abserr=err,
        )
    return val


def _pv_dispersion(model: FormFactorModel, eta: float) -> float:
    """Principal value of Integral_0^inf chi2(omega)/(omega - eta) for eta > 0.

    Singularity subtraction: the regularized integrand (chi2(omega) -
    chi2(eta))/(omega - eta) is smooth, and the subtracted pole integrates
    to the exact logarithm log((w - eta)/eta).
    """
    if eta <= 0:
        raise DomainError("_pv_dispersion requires eta > 0")
    lam = model.lambda_cut
    cref = _chi_ref(model, eta)
    w = 8.0 * max(lam, eta, model.omega0_ref)
    ce = float(model.chi2(eta))

    def compute(epsabs, epsrel):
        def fsub(omega):
            d = omega - eta
            if d == 0.0:
                return model.chi2_prime(eta)
            return (float(model.chi2(omega)) - ce) / d

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            v1, e1 = quad(fsub, 0.0, w, points=[eta, lam], limit=_QUAD_LIMIT,
                          epsabs=epsabs, epsrel=epsrel)
            v2, e2 = quad(lambda x: float(model.chi2(x)) / (x - eta), w, np.inf,
                          limit=_QUAD_LIMIT, epsabs=epsabs, epsrel=epsrel)
        return v1 + ce * math.log((w - eta) / eta) + v2, e1 + e2

    rough, _ = compute(1e-8 * cref, 1e-8)
    scale = abs(rough) + 0.01 * cref
    val, err = compute(1e-13 * scale, 1e-13)
    if err > 1e-9 * scale:
        raise QuadratureError(
            f"principal-value integral at eta={eta:g} did not converge",
            estimate=val, abserr=err,
        )
    return val


# ---------------------------------------------------------------------------
# q on its determinations
# ---------------------------------------------------------------------------

def q_boundary(model: FormFactorModel, eta: float) -> complex:
    """Boundary value q(-i*eta + 0+) for real eta.

    Re q = pi * chi2(eta) for eta > 0 (zero otherwise); Im q is minus the
    dispersion integral, a principal value when the pole sits inside the
    integration range.
    """
    eta = float(eta)
    if eta > 0:
        return complex(math.pi * float(model.chi2(eta)), -_pv_dispersion(model, eta))
    if eta == 0.0:
        # chi2 vanishes at the origin at least linearly; plain integral.
        disp = _dispersion_integral_real_axis_origin(model)
        return complex(0.0, -disp)
    val = _dispersion_integral(model, complex(eta, 0.0))
    return -1j * val


def _dispersion_integral_real_axis_origin(model: FormFactorModel) -> float:
    """Integral_0^inf chi2(omega)/omega domega (finite for kappa >= 1)."""
    lam = model.lambda_cut
    cref = _chi_ref(model, 0.0)
    w = 8.0 * max(lam, model.omega0_ref)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v1, e1 = quad(lambda x: float(model.chi2(x)) / x if x > 0 else
                      (0.0 if model.kappa > 1 else 1.0 / model.omega0_ref),
                      0.0, w, points=[lam], limit=_QUAD_LIMIT,
                      epsabs=1e-13 * cref * max(1.0, w / lam), epsrel=1e-13)
        v2, e2 = quad(lambda x: float(model.chi2(x)) / x, w, np.inf,
                      limit=_QUAD_LIMIT, epsabs=1e-13 * cref, epsrel=1e-13)
    return v1 + v2


def q_sheet_i(model: FormFactorModel, s: complex) -> complex:
    """q(s) on the first (physical) sheet; cut along the negative imaginary axis."""
    s = complex(s)
    if s.real == 0.0 and s.imag <= 0.0:
        raise CutError("s lies on the branch cut; use q_boundary(model, eta=-Im s)")
    return -1j * _dispersion_integral(model, 1j * s)


def q_sheet_ii(model: FormFactorModel, s: complex) -> complex:
    """Continuation below the cut: q_II(s) = q(s) + 2*pi*chi2(i s)."""
    s = complex(s)
    if s.real == 0.0 and s.imag <= 0.0:
        raise CutError("s lies on the branch cut; use q_boundary(model, eta=-Im s)")
    return q_sheet_i(model, s) + 2.0 * math.pi * model.chi2_analytic(1j * s)


# ---------------------------------------------------------------------------
# laser-dressed self-energy and poles
# ---------------------------------------------------------------------------

def self_energy(params: SystemParams, b: float, s: complex, sheet: SheetLabel = SheetLabel.I) -> complex:
    """Q(B, s) = (g^2 omega0 / 2) [q(s+iB) + q(s-iB)] on the requested determination.

    Sheet II continues across the upper cut only (at B = 0 the cuts coincide,
    so the full 2*pi discontinuity is picked up); sheet III continues across
    both and requires 0 < B < omega0.
    """
    if b < 0:
        raise DomainError("b must be nonnegative (Q is even in B)")
    s = complex(s)
    pref = params.g2 * params.omega0
    if pref == 0.0:
        return 0.0 + 0.0j  # decoupled continuum
    if b == 0.0:
        base = pref * q_sheet_i(params.form_factor, s)
    else:
        base = 0.5 * pref * (q_sheet_i(params.form_factor, s + 1j * b)
                             + q_sheet_i(params.form_factor, s - 1j * b))
    if sheet is SheetLabel.I:
        return base
    ff = params.form_factor
    if sheet is SheetLabel.II:
        if b == 0.0:
            return base + 2.0 * math.pi * pref * ff.chi2_analytic(1j * s)
        return base + math.pi * pref * ff.chi2_analytic(1j * s + b)
    if sheet is SheetLabel.III:
        if not 0.0 < b < params.omega0:
            raise SheetError("sheet III is only meaningful for 0 < B < omega0; use II")
        return base + math.pi * pref * (ff.chi2_analytic(1j * s + b)
                                        + ff.chi2_analytic(1j * s - b))
    raise DomainError(f"unknown sheet {sheet!r}")


def _pole_sheet(params: SystemParams, b: float) -> SheetLabel:
    return SheetLabel.III if 0.0 < b < params.omega0 else SheetLabel.II


def _check_regime(params: SystemParams, b: float) -> None:
    if b < 0:
        raise DomainError("b must be nonnegative")
    if b == params.omega0:
        raise DegenerateRadiusError(
            "B = omega0 exactly: the expansion disc around -i*omega0 has zero radius"
        )
    if b > params.omega0:
        warnings.warn(
            "B > omega0: pole computed on sheet II but the three-level "
            "rotating-wave model is not physical in this regime",
            UnphysicalRegimeWarning,
            stacklevel=3,
        )


def pole_perturbative(params: SystemParams, b: float, compute_residual: bool = True) -> PoleResult:
    """Second-order pole: s = -i*omega0 - (g^2 omega0/2) [q_b(omega0+B) + q_b(omega0-B)].

    Exact through O(g^2); the residual reports the size of the neglected
    O(g^4) terms.
    """
    _check_regime(params, b)
    ff, w0 = params.form_factor, params.omega0
    qp = q_boundary(ff, w0 + b)
    qm = qp if b == 0.0 else q_boundary(ff, w0 - b)
    s = -1j * w0 - 0.5 * params.g2 * w0 * (qp + qm)
    sheet = _pole_sheet(params, b)
    residual = float("nan")
    if compute_residual:
        residual = abs(s + 1j * w0 + self_energy(params, b, s, sheet))
    return PoleResult(
        s_pole=s,
        gamma=max(0.0, -2.0 * s.real),
        delta_e=w0 + s.imag,
        sheet=sheet,
        method="perturbative",
        residual=residual,
        b=b,
    )


def pole_newton(params: SystemParams, b: float, tol: float | None = None,
                max_iter: int = 12) -> PoleResult:
    """Newton refinement of the pole equation s + i*omega0 + Q(B, s) = 0.

    Seeded at the perturbative pole; the derivative is a central difference
    of the analytic Q.  Iterates must stay inside the convergence disc
    |s + i*omega0| < |B - omega0| of the determination, otherwise the pole
    has drifted onto the wrong sheet and a :class:`SheetError` is raised.
    """
    _check_regime(params, b)
    w0 = params.omega0
    if tol is None:
        tol = 1e-12 * w0
    sheet = _pole_sheet(params, b)
    radius = abs(b - w0)
    seed = pole_perturbative(params, b, compute_residual=False)
    s = seed.s_pole
    trail = [s]
    if abs(s + 1j * w0) >= radius:
        raise SheetError(
            f"perturbative seed at |s + i*omega0| = {abs(s + 1j * w0):.3g} lies outside "
            f"the convergence disc R_c = {radius:.3g}; the weak-coupling pole framework "
            "is inconsistent for these parameters (effective coupling too large)",
            trail=trail,
        )
    h = 1e-7 * w0
    residual = None
    for _ in range(max_iter):
        f = s + 1j * w0 + self_energy(params, b, s, sheet)
        residual = abs(f)
        if residual < tol:
            gamma = -2.0 * s.real
            if gamma < -10.0 * tol:
                raise NumericsError(f"converged to a growing mode (gamma = {gamma:g} < 0)")
            return PoleResult(
                s_pole=s,
                gamma=max(0.0, gamma),
                delta_e=w0 + s.imag,
                sheet=sheet,
                method="newton",
                residual=residual,
                b=b,
            )
        dq = (self_energy(params, b, s + h, sheet)
              - self_energy(params, b, s - h, sheet)) / (2.0 * h)
        fprime = 1.0 + dq
        if fprime == 0:
            raise ConvergenceError("vanishing derivative in Newton iteration", trail=trail)
        s = s - f / fprime
        trail.append(s)
        if abs(s + 1j * w0) >= radius:
            raise SheetError(
                "Newton iterate drifted outside the convergence disc "
                f"(|s + i*omega0| = {abs(s + 1j * w0):.3g} >= R_c = {radius:.3g})",
                trail=trail,
            )
    raise ConvergenceError(
        f"pole_newton did not reach residual {tol:g} in {max_iter} iterations "
        f"(last residual {residual:g})",
        trail=trail,
    )


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def golden_rule_rate(params: SystemParams) -> float:
    """Laser-off decay rate gamma = 2*pi*g^2*omega0*chi2(omega0)."""
    return 2.0 * math.pi * params.g2 * params.omega0 * float(params.chi2(params.omega0))


def gamma_onshell(params: SystemParams, b) -> float:
    """On-shell rate gamma(B) = pi*g^2*omega0*[chi2(omega0+B) + chi2(omega0-B) theta(omega0-B)].

    The theta factor closes the lower channel once the laser pushes the
    dressed level above the decaying one; theta(0) = 1 (the term vanishes
    there anyway for kappa >= 1).
    """
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise DomainError("b must be nonnegative")
    w0 = params.omega0
    up = params.chi2(w0 + b)
    low = np.where(b <= w0, params.chi2(np.clip(w0 - b, 0.0, None)), 0.0)
    val = math.pi * params.g2 * w0 * (up + low)
    return float(val) if np.ndim(b) == 0 else val


def gamma_ratio_closed_form(transition: TransitionSpec, b_over_omega0) -> float:
    """gamma(B)/gamma = [ (1+x)^kappa + (1-x)^kappa theta(1-x) ] / 2, x = B/omega0.

    Exact consequence of the infrared power law; independent of the cutoff
    and of the normalization convention.
    """
    x = np.asarray(b_over_omega0, dtype=float)
    if np.any(x < 0):
        raise DomainError("b_over_omega0 must be nonnegative")
    kap = transition.kappa
    low = np.where(x <= 1.0, np.clip(1.0 - x, 0.0, None) ** kap, 0.0)
    val = 0.5 * ((1.0 + x) ** kap + low)
    return float(val) if np.ndim(b_over_omega0) == 0 else val


def gamma_large_b(params: SystemParams, b: float) -> float:
    """Far-cutoff tail rate gamma(B) ~ (gamma/2) chi2(B)/chi2(omega0), B >> Lambda.

    Decreases like (B/Lambda)^-beta; flagged unphysical because such B
    would break the three-level rotating-wave treatment.
    """
    if b <= params.form_factor.lambda_cut:
        raise DomainError("gamma_large_b requires B > lambda_cut")
    warnings.warn(
        "B >> Lambda is an unphysical regime for the three-level model",
        UnphysicalRegimeWarning,
        stacklevel=2,
    )
    return 0.5 * golden_rule_rate(params) * float(params.chi2(b)) / float(params.chi2(params.omega0))
