"""Decay of a laser-driven three-level emitter.

Computes how a resonant laser on the 1-3 transition modifies the
spontaneous-emission lifetime of level 2: decay rates gamma(B), level
shifts, survival probabilities and emitted-photon spectra, each quantity
cross-checked by independent routes (closed form, complex-plane pole
search, time-domain integration, spectrum normalization).
"""

from .errors import ConfigError, NumericsError
from .formfactor import (
    ELECTRIC,
    MAGNETIC,
    FormFactorModel,
    SystemParams,
    TransitionSpec,
    coupling_g2,
    kappa_of,
)
from .selfenergy import (
    PoleResult,
    SheetLabel,
    gamma_large_b,
    gamma_onshell,
    gamma_ratio_closed_form,
    golden_rule_rate,
    pole_newton,
    pole_perturbative,
    q_boundary,
    q_sheet_i,
    q_sheet_ii,
    self_energy,
)

__version__ = "0.1.0"
