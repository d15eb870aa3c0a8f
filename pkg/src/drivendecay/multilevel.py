"""Laser-dressed states, partial rates, and off-resonant level corrections.

The resonant laser splits the ground/auxiliary pair into an Autler-Townes
doublet at energies +/-B, each coupled to the decaying level with the bare
matrix element scaled by 1/sqrt(2).  Extra off-resonant levels j = 4..N
(relative strengths f_j, detunings delta_j) turn the two branch points
into N-1 of them; the self-energy becomes a weighted sum over shifted
copies with partial-fraction weights c_i that add up to one:

    Q(B, s) = sum_i c_i Q(s + i*sigma_i)

The sigma_i are the roots of sigma - B^2/sigma + B^2 sum_j f_j/(delta_j - sigma) = 0
cleared of denominators (equivalently, eigenvalues of the dressed coupling
matrix), and c_i = 1/(1 + B^2 [1/sigma_i^2 + sum_j f_j/(delta_j - sigma_i)^2]).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConditioningWarning,
    DegenerateRootError,
    DomainError,
    UnphysicalRegimeWarning,
)
from .formfactor import SystemParams
from .selfenergy import gamma_onshell, golden_rule_rate

__all__ = [
    "DressedDoublet",
    "LevelLadder",
    "PartialFractionDecomp",
    "dressed_doublet",
    "partial_rates",
    "branch_points",
    "partial_fractions",
    "perturbative_shifts",
    "gamma_many",
    "effective_b_star",
]


@dataclass(frozen=True)
class DressedDoublet:
    """Autler-Townes pair: energies +/-B, couplings scaled by 1/sqrt(2)."""

    energies: tuple
    coupling_scale: float
    splitting: float


@dataclass(frozen=True)
class LevelLadder:
    """Off-resonant levels: (f_j, delta_j) with f_j = |Phi_j|^2/|Phi_3|^2 >= 0.

    Entries are kept sorted by |delta_j|.  An empty ladder reproduces the
    bare three-level problem.
    """

    entries: tuple

    def __init__(self, entries=()):
        ent = []
        for f, d in entries:
            f, d = float(f), float(d)
            if f < 0:
                raise DomainError("ladder strengths f_j must be nonnegative")
            if d == 0:
                raise DomainError("ladder detunings delta_j must be nonzero")
            ent.append((f, d))
        ent.sort(key=lambda fd: abs(fd[1]))
        object.__setattr__(self, "entries", tuple(ent))

    def __len__(self):
        return len(self.entries)

    @property
    def f(self) -> np.ndarray:
        return np.array([f for f, _ in self.entries])

    @property
    def delta(self) -> np.ndarray:
        return np.array([d for _, d in self.entries])


@dataclass(frozen=True)
class PartialFractionDecomp:
    """Branch shifts sigma_i and weights c_i of the decomposed self-energy."""

    shifts: np.ndarray
    weights: np.ndarray

    def weight_sum(self) -> float:
        return float(np.sum(self.weights))


def dressed_doublet(b: float) -> DressedDoublet:
    """The two laser-dressed states; splitting 2B is the Rabi frequency."""
    if b < 0:
        raise DomainError("b must be nonnegative")
    return DressedDoublet(energies=(+b, -b), coupling_scale=1.0 / math.sqrt(2.0),
                          splitting=2.0 * b)


def partial_rates(params: SystemParams, b: float):
    """Golden-rule rates into the dressed states.

    gamma_plus feeds the upper state (photon at omega0 - B) and closes for
    B > omega0; gamma_minus feeds the lower one (photon at omega0 + B).
    Their sum is exactly the on-shell gamma(B).
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    w0 = params.omega0
    pref = math.pi * params.g2 * w0
    gplus = pref * float(params.chi2(w0 - b)) if b <= w0 else 0.0
    gminus = pref * float(params.chi2(w0 + b))
    return gplus, gminus


def _clear_denominator_poly(ladder: LevelLadder, b: float) -> np.ndarray:
    """Coefficients (highest first) of the cleared-denominator polynomial in sigma.

    G(sigma) = (sigma^2 - B^2) prod_j (delta_j - sigma)
               + B^2 sigma sum_j f_j prod_{l != j} (delta_l - sigma)
    """
    f, d = ladder.f, ladder.delta
    base = np.polymul([1.0, 0.0, -b * b], _prod_poly(d))
    for j in range(len(d)):
        term = np.polymul([b * b * f[j], 0.0], _prod_poly(np.delete(d, j)))
        base = np.polyadd(base, term)
    return base


def _prod_poly(deltas) -> np.ndarray:
    poly = np.array([1.0])
    for d in deltas:
        poly = np.polymul(poly, [-1.0, d])  # (delta - sigma)
    return poly


def _secular(ladder: LevelLadder, b: float, sigma: float) -> float:
    f, d = ladder.f, ladder.delta
    return sigma - b * b / sigma + b * b * float(np.sum(f / (d - sigma)))


def branch_points(ladder: LevelLadder, b: float, omega0: float = 1.0) -> np.ndarray:
    """All N-1 branch shifts sigma_i, sorted ascending.

    Companion-matrix roots of the cleared-denominator polynomial, each
    polished by one Newton step on the polynomial.  The dressed coupling
    matrix is Hermitian, so the roots are real; a cluster tighter than
    1e-10*omega0 triggers a :class:`ConditioningWarning`.
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    if len(ladder) == 0:
        roots = np.array([-b, b])
        if 2.0 * b < 1e-10 * omega0:
            warnings.warn(
                "two branch points within 1e-10*omega0; weights may lose digits",
                ConditioningWarning,
                stacklevel=2,
            )
        return roots
    poly = _clear_denominator_poly(ladder, b)
    roots = np.roots(poly)
    scale = max(abs(b), float(np.max(np.abs(ladder.delta))), omega0)
    if np.max(np.abs(roots.imag)) > 1e-8 * scale:
        raise DegenerateRootError(
            f"branch points acquired imaginary parts up to {np.max(np.abs(roots.imag)):g}; "
            "root finding is ill conditioned for this ladder"
        )
    roots = roots.real.copy()
    # polish on the secular function: far better conditioned near the roots
    # than the cleared polynomial, whose coefficients cancel heavily
    f, d = ladder.f, ladder.delta
    for i, sig in enumerate(roots):
        for _ in range(3):
            if sig == 0.0 or np.any(d == sig):
                break
            val = sig - b * b / sig + b * b * float(np.sum(f / (d - sig)))
            der = 1.0 + b * b / sig**2 + b * b * float(np.sum(f / (d - sig) ** 2))
            step = val / der
            if not math.isfinite(step):
                break
            sig -= step
            if abs(step) < 1e-16 * scale:
                break
        roots[i] = sig
    roots = np.sort(roots)
    if roots.size > 1 and float(np.min(np.diff(roots))) < 1e-10 * omega0:
        warnings.warn(
            "two branch points within 1e-10*omega0; weights may lose digits",
            ConditioningWarning,
            stacklevel=2,
        )
    return roots


def partial_fractions(ladder: LevelLadder, b: float, omega0: float = 1.0) -> PartialFractionDecomp:
    """Residue weights at each branch point; the weights sum to one.

    c_i is the reciprocal of the derivative of the secular denominator,
    c_i = 1/(1 + B^2 [1/sigma_i^2 + sum_j f_j/(delta_j - sigma_i)^2]),
    which is manifestly real and in (0, 1] for separated roots.
    """
    if b == 0:
        raise DegenerateRootError("B = 0 collapses the branch points (double root at 0)")
    sig = branch_points(ladder, b, omega0)
    if sig.size > 1 and float(np.min(np.diff(sig))) < 1e-12 * max(omega0, float(np.max(np.abs(sig)))):
        raise DegenerateRootError("coincident branch points; partial fractions undefined")
    f, d = ladder.f, ladder.delta
    weights = np.empty_like(sig)
    for i, s in enumerate(sig):
        dprime = 1.0 + b * b / s**2
        if len(ladder):
            dprime += b * b * float(np.sum(f / (d - s) ** 2))
        weights[i] = 1.0 / dprime
    return PartialFractionDecomp(shifts=sig, weights=weights)


def perturbative_shifts(ladder: LevelLadder, b: float) -> PartialFractionDecomp:
    """Closed-form shifts and weights through second order in B.

    sigma_pm = +/-B - B^2 sum f_j/(2 delta_j),  sigma_j = delta_j + B^2 f_j/delta_j,
    c_pm = 1/2 -/+ B sum f_j/(4 delta_j) - B^2 sum f_j/(2 delta_j^2),
    c_j = B^2 f_j/delta_j^2.
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    f, d = ladder.f, ladder.delta
    s1 = float(np.sum(f / d)) if len(ladder) else 0.0
    s2 = float(np.sum(f / d**2)) if len(ladder) else 0.0
    sig_p = +b - 0.5 * b * b * s1
    sig_m = -b - 0.5 * b * b * s1
    c_p = 0.5 - 0.25 * b * s1 - 0.5 * b * b * s2
    c_m = 0.5 + 0.25 * b * s1 - 0.5 * b * b * s2
    shifts = [sig_m, sig_p] + list(d + b * b * f / d)
    weights = [c_m, c_p] + list(b * b * f / d**2)
    order = np.argsort(shifts)
    return PartialFractionDecomp(shifts=np.array(shifts)[order],
                                 weights=np.array(weights)[order])


def gamma_many(params: SystemParams, ladder: LevelLadder, b: float,
               method: str = "exact") -> float:
    """Decay rate with off-resonant levels folded in.

    gamma_many = gamma * sum_i c_i (1 - sigma_i/omega0)^kappa theta(omega0 - sigma_i)
    using the infrared power law at the shifted on-shell points; channels
    pushed above omega0 are closed by the theta factor (theta(0) = 1).
    ``method`` selects exact numeric roots or the O(B^2) closed forms.
    """
    if b == 0:
        return golden_rule_rate(params)
    if method == "exact":
        dec = partial_fractions(ladder, b, params.omega0)
    elif method == "perturbative":
        dec = perturbative_shifts(ladder, b)
    else:
        raise DomainError(f"unknown method {method!r}")
    w0 = params.omega0
    kap = params.transition.kappa
    total = 0.0
    for s, c in zip(dec.shifts, dec.weights):
        if s <= w0:
            total += c * (1.0 - s / w0) ** kap
    if dec.shifts.min() > w0:
        warnings.warn(
            "all emission channels closed (every sigma_i above omega0); outside "
            "the model's validity",
            UnphysicalRegimeWarning,
            stacklevel=2,
        )
    return golden_rule_rate(params) * total


def effective_b_star(ladder: LevelLadder, b: float, omega0: float) -> float:
    """Effective coupling B* = B [1 + sum f_l omega0/(2 delta_l)] for far levels.

    Valid when every detuning exceeds omega0 (all extra channels closed);
    then gamma_many(B) is gamma(B*) to second order, and B* >= B.
    """
    if b < 0:
        raise DomainError("b must be nonnegative")
    if len(ladder) and np.any(ladder.delta <= omega0):
        raise DomainError(
            "effective_b_star requires all delta_l > omega0; evaluate gamma_many directly"
        )
    if len(ladder) == 0:
        return b
    return b * (1.0 + float(np.sum(ladder.f * omega0 / (2.0 * ladder.delta))))
