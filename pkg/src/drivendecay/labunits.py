"""Laboratory laser parameters to the coupling B and back.

The coupling obeys B^2 = 2*pi*alpha*Omega0*|eps.x13|^2*n0 for a dipole 1-3
transition (natural units), and in engineering units

    B^2 [eV^2] = K * (P/W) * (lambda_L/um)^3 / (A/um^2) * (hbar*Gamma_13/eV)

where K ~ 132 comes from evaluating (P/(c A)) * lambda_L^3/(16 pi^2) in eV.
The coefficient is rederived here from the constants as a cross-check.
"""

from __future__ import annotations

import math

from .errors import DomainError

__all__ = [
    "ALPHA_FS",
    "b_from_dipole",
    "b_from_power",
    "rabi_from_b",
    "power_law_coefficient_ev",
]

# CODATA values (c and e are exact SI definitions)
ALPHA_FS = 7.29735257e-3
C_M_PER_S = 2.99792458e8
EV_J = 1.602176634e-19


def b_from_dipole(omega_big: float, dipole_sq: float, n0: float,
                  angle_average: bool = True) -> float:
    """Coupling from photon density (natural units, hbar = c = 1).

    B^2 = 2*pi*alpha*Omega0*<|eps.x13|^2>*n0 with the isotropic average
    <|eps.x13|^2> = |x13|^2/3 applied by default; pass
    ``angle_average=False`` when ``dipole_sq`` is already the projected
    overlap.  Inputs: Omega0 (energy), |x13|^2 (1/energy^2), n0 (energy^3).
    """
    if omega_big <= 0 or dipole_sq < 0 or n0 < 0:
        raise DomainError("omega_big must be positive; dipole_sq and n0 nonnegative")
    proj = dipole_sq / 3.0 if angle_average else dipole_sq
    return math.sqrt(2.0 * math.pi * ALPHA_FS * omega_big * proj * n0)


def power_law_coefficient_ev() -> float:
    """The eV^2 coefficient of B^2 = K * P*lambda^3/A * (hbar Gamma): K ~ 132.

    K = (1 W) * (1 um)^3 / (c * 1 um^2 * 16 pi^2) expressed in eV.
    """
    joules = 1.0 * (1e-6) ** 3 / (C_M_PER_S * 1e-12 * 16.0 * math.pi**2)
    return joules / EV_J


def b_from_power(power_w: float, lambda_um: float, area_um2: float,
                 hgamma_ev: float) -> float:
    """Coupling B in eV from laser power, wavelength, spot area and linewidth.

    B^2 = (P/(c A)) * lambda_L^3/(16 pi^2) * (hbar Gamma_13), evaluated
    directly from the constants rather than the rounded 132 coefficient.
    """
    if power_w < 0 or hgamma_ev < 0:
        raise DomainError("power and linewidth must be nonnegative")
    if lambda_um <= 0 or area_um2 <= 0:
        raise DomainError("wavelength and area must be positive")
    b2 = power_law_coefficient_ev() * power_w * lambda_um**3 / area_um2 * hgamma_ev
    return math.sqrt(b2)


def rabi_from_b(b: float) -> float:
    """Rabi frequency of the driven transition: Omega_Rabi = 2B."""
    if b < 0:
        raise DomainError("b must be nonnegative")
    return 2.0 * b
