"""Emission form factor chi^2(omega), transition multipolarity and coupling.

The coupling density of the decaying level to the photon continuum is
``g^2 * omega0 * chi2(omega)``.  The model family used throughout is

    chi2(omega) = (omega/omega0_ref)**kappa / (1 + (omega/Lambda)**2)**((kappa+beta)/2)

which rises like ``omega**kappa`` far below the cutoff ``Lambda`` and falls
like ``omega**-beta`` far above it.  The infrared asymptote is exactly
``(omega/omega0_ref)**kappa``; absolute rates are reported under this stated
normalization convention (ratios are convention independent).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StrongCouplingWarning

__all__ = [
    "ELECTRIC",
    "MAGNETIC",
    "TransitionSpec",
    "FormFactorModel",
    "SystemParams",
    "kappa_of",
    "coupling_g2",
]

ELECTRIC = "electric"
MAGNETIC = "magnetic"


@dataclass(frozen=True)
class TransitionSpec:
    """Multipolarity of the decay transition.

    Parameters
    ----------
    j : int
        Total angular momentum of the emitted photon, j >= 1.
    character : str
        ``"electric"`` or ``"magnetic"``.
    """

    j: int
    character: str = ELECTRIC

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise DomainError(f"photon angular momentum j must be a positive integer, got {self.j}")
        if self.character not in (ELECTRIC, MAGNETIC):
            raise DomainError(f"transition character must be 'electric' or 'magnetic', got {self.character!r}")
        object.__setattr__(self, "j", int(self.j))

    @property
    def kappa(self) -> int:
        """Low-frequency exponent: 2j-1 for electric, 2j+1 for magnetic."""
        return 2 * self.j - 1 if self.character == ELECTRIC else 2 * self.j + 1


def kappa_of(transition: TransitionSpec) -> int:
    """Low-frequency exponent of the transition (odd positive integer)."""
    return transition.kappa


def transition_for_kappa(kappa: int, character: str = ELECTRIC) -> TransitionSpec:
    """Inverse of :func:`kappa_of` for a given character."""
    kappa = int(kappa)
    if kappa < 1 or kappa % 2 == 0:
        raise DomainError(f"kappa must be an odd positive integer, got {kappa}")
    j = (kappa + 1) // 2 if character == ELECTRIC else (kappa - 1) // 2
    if j < 1:
        raise DomainError(f"no {character} transition has kappa={kappa}")
    return TransitionSpec(j=j, character=character)


@dataclass(frozen=True)
class FormFactorModel:
    """Parametric form factor with power-law asymptotes and cutoff.

    Attributes
    ----------
    kappa : int
        Low-frequency exponent (odd, positive).
    lambda_cut : float
        Cutoff energy Lambda separating the two power laws.
    beta : float
        High-frequency falloff exponent, beta > 1.
    omega0_ref : float
        Normalization reference: the infrared asymptote is
        ``(omega/omega0_ref)**kappa``.
    """

    kappa: int
    lambda_cut: float
    beta: float = 2.0
    omega0_ref: float = 1.0

    def __post_init__(self):
        if int(self.kappa) != self.kappa or self.kappa < 1 or self.kappa % 2 == 0:
            raise DomainError(f"kappa must be an odd positive integer, got {self.kappa}")
        object.__setattr__(self, "kappa", int(self.kappa))
        if not self.lambda_cut > 0:
            raise DomainError("lambda_cut must be positive")
        if not self.beta > 1:
            raise DomainError(f"beta must exceed 1 for an integrable coupling density, got {self.beta}")
        if not self.omega0_ref > 0:
            raise DomainError("omega0_ref must be positive")

    @property
    def power(self) -> float:
        """Denominator exponent (kappa + beta) / 2."""
        return 0.5 * (self.kappa + self.beta)

    def chi2(self, omega):
        """Evaluate chi^2 at real nonnegative frequency (scalar or array)."""
        om = np.asarray(omega, dtype=float)
        if np.any(om < 0):
            raise DomainError("chi2 is defined for omega >= 0")
        x = om / self.omega0_ref
        val = x**self.kappa / (1.0 + (om / self.lambda_cut) ** 2) ** self.power
        return val if val.ndim else float(val)

    def chi2_analytic(self, z):
        """Analytic continuation of the model expression to complex argument.

        The numerator ``z**kappa`` is entire; the denominator carries branch
        points at z = +/- i*Lambda (principal powers).  Arguments landing on
        those singularities raise :class:`DomainError`.
        """
        z = complex(z)
        w = 1.0 + (z / self.lambda_cut) ** 2
        if abs(w) < 1e-12:
            raise DomainError("chi2 continuation hit the model singularity at omega = +/- i*Lambda")
        return (z / self.omega0_ref) ** self.kappa / w**self.power

    def chi2_prime(self, omega: float) -> float:
        """d(chi^2)/d(omega) at real omega > 0 (closed form)."""
        if omega <= 0:
            raise DomainError("chi2_prime requires omega > 0")
        c = self.chi2(omega)
        u = (omega / self.lambda_cut) ** 2
        return c * (self.kappa / omega - 2.0 * self.power * omega / self.lambda_cut**2 / (1.0 + u))

    def tail_mass_bound(self, w: float) -> float:
        """Analytic upper bound on the tail integral of chi^2 beyond ``w >= Lambda``.

        Uses chi2(omega) <= (Lambda/omega0_ref)**kappa * (omega/Lambda)**-beta.
        """
        if w < self.lambda_cut:
            raise DomainError("tail bound valid only for w >= lambda_cut")
        amp = (self.lambda_cut / self.omega0_ref) ** self.kappa
        return amp * self.lambda_cut / (self.beta - 1.0) * (w / self.lambda_cut) ** (1.0 - self.beta)


def coupling_g2(alpha_fs: float, omega0: float, lambda_cut: float, transition: TransitionSpec) -> float:
    """Dimensionless coupling g^2 = alpha * (omega0/Lambda)**(2j+1 -/+ 1).

    The exponent is 2j for electric and 2j+2 for magnetic transitions.
    """
    if omega0 <= 0 or lambda_cut <= 0:
        raise DomainError("omega0 and lambda_cut must be positive")
    expo = 2 * transition.j if transition.character == ELECTRIC else 2 * transition.j + 2
    return alpha_fs * (omega0 / lambda_cut) ** expo


@dataclass(frozen=True)
class SystemParams:
    """Emitter parameters: level spacing, coupling and form factor.

    ``omega0`` is the energy of the decaying level above the ground state;
    all internal computations are typically run with omega0 = 1.
    """

    omega0: float
    g2: float
    form_factor: FormFactorModel
    transition: TransitionSpec = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError("omega0 must be positive")
        if self.g2 < 0:
            raise DomainError("g2 must be nonnegative (0 decouples the continuum)")
        if self.g2 > 1e-2:
            warnings.warn(
                f"g2 = {self.g2:g} is large; perturbative formulas degrade as O(g2)",
                StrongCouplingWarning,
                stacklevel=2,
            )
        if not self.omega0 < self.form_factor.lambda_cut:
            raise DomainError("physical regime requires omega0 < lambda_cut")
        if self.transition is None:
            object.__setattr__(self, "transition", transition_for_kappa(self.form_factor.kappa))
        elif self.transition.kappa != self.form_factor.kappa:
            raise DomainError(
                f"transition kappa {self.transition.kappa} inconsistent with form factor kappa "
                f"{self.form_factor.kappa}"
            )

    def chi2(self, omega):
        return self.form_factor.chi2(omega)

    def coupling_density(self, omega):
        """g^2 * omega0 * chi^2(omega), the continuum coupling density."""
        return self.g2 * self.omega0 * self.form_factor.chi2(omega)
