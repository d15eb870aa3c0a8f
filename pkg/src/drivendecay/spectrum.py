"""Emitted-photon spectra in the pole approximation and rate recovery.

With the survival amplitude replaced by its pole contribution, the photon
emission density is chi^2-weighted Lorentzian:

    dP/domega (B=0)  = g^2 omega0 chi2(omega) f_L(omega - wbar0; gamma)
    dP/domega (B!=0) = g^2 omega0 chi2(omega) [f_L(omega - wbar0 - B; gamma)
                                               + f_L(omega - wbar0 + B; gamma)] / 2

with f_L(w; gamma) = 1/(w^2 + gamma^2/4) and wbar0 = omega0 - delta_e the
shifted line center.  Imposing unit total emission probability recovers the
on-shell rate formula, which is the third independent route to gamma(B).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import BroadLineWarning, DomainError
from .formfactor import SystemParams
from .selfenergy import PoleResult

__all__ = [
    "SpectrumCurve",
    "lorentzian",
    "spectrum_b0",
    "spectrum_b",
    "spectrum_normalization",
    "asymptotic_occupations",
    "recover_gamma_from_normalization",
]


@dataclass(frozen=True)
class SpectrumCurve:
    """Sampled emission density dP/domega with the parameters that made it."""

    omegas: np.ndarray
    density: np.ndarray
    params_echo: dict

    def __post_init__(self):
        if np.any(self.density < 0):
            raise DomainError("emission density must be nonnegative")

    def trapezoid_mass(self) -> float:
        return float(np.trapezoid(self.density, self.omegas))


def _lorentz(om: np.ndarray, gamma: float) -> np.ndarray:
    return 1.0 / (om**2 + 0.25 * gamma * gamma)


def lorentzian(omega, gamma: float):
    """f_L(omega; gamma) = 1/(omega^2 + gamma^2/4); FWHM gamma, peak 4/gamma^2."""
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    val = _lorentz(np.asarray(omega, dtype=float), gamma)
    return float(val) if np.ndim(omega) == 0 else val


def _wbar0(params: SystemParams, pole: PoleResult) -> float:
    wbar = params.omega0 - pole.delta_e
    if wbar <= 0:
        raise DomainError(
            f"shifted line center wbar0 = {wbar:g} is not positive; the pole "
            "approximation has no sensible emission line here"
        )
    return wbar


def spectrum_b0(params: SystemParams, pole: PoleResult, omega):
    """Laser-off emission density at frequency ``omega`` (scalar or array)."""
    if pole.gamma <= 0:
        raise DomainError("pole carries no decay width")
    wbar = _wbar0(params, pole)
    om = np.asarray(omega, dtype=float)
    val = params.g2 * params.omega0 * np.asarray(params.chi2(om)) * _lorentz(om - wbar, pole.gamma)
    return float(val) if np.ndim(omega) == 0 else val


def spectrum_b(params: SystemParams, pole: PoleResult, b: float, omega):
    """Laser-on emission density: two Lorentzians at wbar0 +/- B, weight 1/2 each.

    Both lines share the width gamma(B) carried by ``pole``; for B = 0 this
    reduces pointwise to :func:`spectrum_b0`.
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    if pole.gamma <= 0:
        raise DomainError("pole carries no decay width")
    wbar = _wbar0(params, pole)
    om = np.asarray(omega, dtype=float)
    pair = 0.5 * (_lorentz(om - wbar - b, pole.gamma) + _lorentz(om - wbar + b, pole.gamma))
    val = params.g2 * params.omega0 * np.asarray(params.chi2(om)) * pair
    return float(val) if np.ndim(omega) == 0 else val


def spectrum_normalization(params: SystemParams, pole: PoleResult, b: float = 0.0,
                           window_gammas: float = 50.0) -> float:
    """Total emission probability of the two-Lorentzian line spectrum.

    Numerical quadrature over (0, line window + ``window_gammas``*gamma]
    plus analytic Lorentzian tail masses with the envelope frozen at the
    window edge.  The freeze keeps the estimate line-local: the pole
    approximation only describes the neighborhood of the emission lines,
    and letting the slowly decaying wings sample the distant rising part
    of chi^2 would count weight the approximation does not own.
    """
    wbar = _wbar0(params, pole)
    gam = pole.gamma
    centers = [wbar + b, wbar - b]  # weight 1/2 each (coincident at B = 0)
    lo = max(0.0, min(max(c, 0.0) for c in centers) - window_gammas * gam)
    hi = max(centers) + window_gammas * gam

    def f(om):
        return spectrum_b(params, pole, b, om)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = [c for c in centers if lo < c < hi]
        core, _ = quad(f, lo, hi, points=pts or None,
                       limit=400, epsabs=1e-12, epsrel=1e-10)
        head = 0.0
        if lo > 0:
            head, _ = quad(f, 0.0, lo, limit=200, epsabs=1e-12, epsrel=1e-8)
    pref = 0.5 * params.g2 * params.omega0 * float(params.chi2(hi))
    tail = 0.0
    for c in centers:
        tail += pref * (2.0 / gam) * (0.5 * math.pi - math.atan(2.0 * (hi - c) / gam))
    return head + core + tail


def asymptotic_occupations(params: SystemParams, pole: PoleResult, b: float,
                           omega_k, t: float, coupling2: float = 1.0):
    """Late-time mode occupations (|y_k|^2, |z_k|^2) after the pole has damped.

    Valid for t >> 1/gamma.  The two occupations slosh at the Rabi beat
    2B while their sum is time independent:

        |y|^2 + |z|^2 = |phi|^2 (nu^2 + gamma^2/4 + B^2) / |(nu + i gamma/2)^2 - B^2|^2

    with nu = omega_k - wbar0.  ``coupling2`` supplies |phi_k|^2 (default 1
    gives per-unit-coupling occupations).
    """
    wbar = _wbar0(params, pole)
    gam = pole.gamma
    nu = np.asarray(omega_k, dtype=float) - wbar
    denom = np.abs((nu + 0.5j * gam) ** 2 - b * b) ** 2
    base = nu**2 + 0.25 * gam * gam
    cb, sb = math.cos(b * t), math.sin(b * t)
    s2b = math.sin(2.0 * b * t)
    y2 = coupling2 * (base * cb * cb + b * b * sb * sb + 0.5 * gam * b * s2b) / denom
    z2 = coupling2 * (base * sb * sb + b * b * cb * cb - 0.5 * gam * b * s2b) / denom
    return y2, z2


def recover_gamma_from_normalization(params: SystemParams, b: float,
                                     pole: PoleResult | None = None) -> float:
    """Rate from unit emission probability: gamma(B) = pi g^2 omega0 [chi2(wbar0+B) + chi2(wbar0-B) theta].

    This inverts the narrow-line normalization of the two-Lorentzian
    spectrum (each full Lorentzian integrates to 2*pi/gamma) and reproduces
    the on-shell rate formula.  ``pole`` supplies the level shift; without
    it the bare omega0 is used.  Warns when the line is not narrow.
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    wbar = params.omega0 if pole is None else _wbar0(params, pole)
    up = float(params.chi2(wbar + b))
    low = float(params.chi2(wbar - b)) if b <= wbar else 0.0
    gamma = math.pi * params.g2 * params.omega0 * (up + low)
    if gamma > 0.1 * wbar:
        warnings.warn(
            f"gamma = {gamma:g} is not << wbar0 = {wbar:g}; the narrow-line "
            "normalization argument is out of its validity range",
            BroadLineWarning,
            stacklevel=2,
        )
    return gamma


def sample_spectrum(params: SystemParams, pole: PoleResult, b: float,
                    omegas) -> SpectrumCurve:
    """Evaluate the emission density on a grid and package it with metadata."""
    om = np.asarray(omegas, dtype=float)
    dens = spectrum_b(params, pole, b, om)
    echo = {
        "omega0": params.omega0,
        "g2": params.g2,
        "kappa": params.form_factor.kappa,
        "lambda_cut": params.form_factor.lambda_cut,
        "beta": params.form_factor.beta,
        "omega0_ref": params.form_factor.omega0_ref,
        "b": b,
        "gamma": pole.gamma,
        "delta_e": pole.delta_e,
        "wbar0": params.omega0 - pole.delta_e,
    }
    return SpectrumCurve(omegas=om, density=np.asarray(dens), params_echo=echo)
