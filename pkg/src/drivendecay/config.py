"""Run configuration: flat sectioned text files with strict key checking.

Every key has a typed schema entry and a default; unknown sections or keys
are rejected with their path so typos cannot silently change a run.  The
fully resolved configuration (defaults included) is echoed into every
output file, making runs reproducible from their own artifacts.

Energies are in units of omega0 unless a key name says otherwise
(``*_ev``, ``*_um`` ...).  The laser section accepts exactly one
parameterization: ``b`` directly, a photon-density triple, or a
power/spot/wavelength/linewidth quadruple.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .errors import ConfigError
from .formfactor import (
    ELECTRIC,
    FormFactorModel,
    SystemParams,
    TransitionSpec,
    transition_for_kappa,
)
from .multilevel import LevelLadder

__all__ = ["RunConfig", "load_config", "default_config_text"]

_CHARACTERS = ("electric", "magnetic")
_RULES = ("uniform", "gauss_legendre")

# section -> key -> (parser, default)
_SCHEMA = {
    "run": {
        "seed": (int, 0),
        "threads": (int, 1),
    },
    "form_factor": {
        "kappa": (int, 3),
        "lambda_cut": (float, 30.0),
        "beta": (float, 2.0),
        "omega0_ref": (float, 1.0),
    },
    "system": {
        "omega0": (float, 1.0),
        "g2": (float, 1e-9),
        "j": (int, 2),
        "character": (str, ELECTRIC),
    },
    "laser": {
        "b": (float, None),
        "power_w": (float, None),
        "wavelength_um": (float, None),
        "area_um2": (float, None),
        "linewidth_ev": (float, None),
        "photon_density": (float, None),
        "dipole_sq": (float, None),
        "omega_big": (float, None),
    },
    "ladder": {
        "levels": (str, ""),
    },
    "gamma_scan": {
        "b_start": (float, 0.0),
        "b_stop": (float, 1.0),
        "num": (int, 21),
    },
    "spectrum": {
        "b": (float, 0.2),
        "num": (int, 2001),
        "window_gammas": (float, 50.0),
        "gamma": (float, None),
        "delta_e": (float, 0.0),
    },
    "evolve": {
        "b": (float, 0.0),
        "modes": (int, 2000),
        "omega_max": (float, 0.0),
        "rule": (str, "gauss_legendre"),
        "t_final_gammas": (float, 5.0),
        "tol": (float, 1e-9),
        "fit_t1_gammas": (float, 1.0),
        "n_save": (int, 33),
    },
    "dressed": {
        "b_start": (float, 0.0),
        "b_stop": (float, 1.5),
        "num": (int, 31),
    },
    "multilevel": {
        "b_start": (float, 0.02),
        "b_stop": (float, 0.2),
        "num": (int, 10),
        "decomposition_b": (float, None),
    },
    "estimate_b": {
        "omega0_ev": (float, 1.0),
    },
    "validate": {
        "golden_rule_tol_scale": (float, 1.0),
    },
}


@dataclass
class RunConfig:
    """Parsed, validated and fully defaulted run configuration."""

    sections: dict
    path: str | None = None

    @property
    def seed(self) -> int:
        return self.sections["run"]["seed"]

    @property
    def threads(self) -> int:
        return self.sections["run"]["threads"]

    def system_params(self) -> SystemParams:
        ff_sec = self.sections["form_factor"]
        sys_sec = self.sections["system"]
        transition = TransitionSpec(j=sys_sec["j"], character=sys_sec["character"])
        if ff_sec["kappa"] != transition.kappa:
            raise ConfigError(
                f"[form_factor] kappa = {ff_sec['kappa']} inconsistent with "
                f"[system] j = {sys_sec['j']} ({sys_sec['character']}: kappa = {transition.kappa})"
            )
        model = FormFactorModel(
            kappa=ff_sec["kappa"],
            lambda_cut=ff_sec["lambda_cut"] * sys_sec["omega0"],
            beta=ff_sec["beta"],
            omega0_ref=ff_sec["omega0_ref"] * sys_sec["omega0"],
        )
        return SystemParams(
            omega0=sys_sec["omega0"],
            g2=sys_sec["g2"],
            form_factor=model,
            transition=transition,
        )

    def laser_mode(self) -> str:
        """Which LaserSpec parameterization is populated: direct, power or dipole."""
        sec = self.sections["laser"]
        direct = sec["b"] is not None
        power = [sec[k] is not None for k in ("power_w", "wavelength_um", "area_um2", "linewidth_ev")]
        dipole = [sec[k] is not None for k in ("photon_density", "dipole_sq", "omega_big")]
        modes = []
        if direct:
            modes.append("direct")
        if any(power):
            if not all(power):
                raise ConfigError("[laser] power parameterization needs power_w, "
                                  "wavelength_um, area_um2 and linewidth_ev")
            modes.append("power")
        if any(dipole):
            if not all(dipole):
                raise ConfigError("[laser] dipole parameterization needs photon_density, "
                                  "dipole_sq and omega_big")
            modes.append("dipole")
        if len(modes) > 1:
            raise ConfigError(f"[laser] exactly one parameterization allowed, got {modes}")
        return modes[0] if modes else "none"

    def laser_b(self) -> float:
        """B in units of omega0 (direct parameterization, default 0)."""
        sec = self.sections["laser"]
        if self.laser_mode() == "direct":
            b = sec["b"]
            if b < 0:
                raise ConfigError("[laser] b must be nonnegative")
            return b * self.sections["system"]["omega0"]
        return 0.0

    def ladder(self) -> LevelLadder:
        text = self.sections["ladder"]["levels"].strip()
        if not text:
            return LevelLadder()
        entries = []
        omega0 = self.sections["system"]["omega0"]
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                f_str, d_str = item.split(":")
                entries.append((float(f_str), float(d_str) * omega0))
            except ValueError as exc:
                raise ConfigError(f"[ladder] levels entry {item!r} is not 'f:delta'") from exc
        return LevelLadder(entries)

    def echo_lines(self):
        """Resolved configuration as '# [section] key = value' lines."""
        out = []
        for sec in _SCHEMA:
            for key in _SCHEMA[sec]:
                val = self.sections[sec][key]
                if val is None:
                    continue
                out.append(f"# [{sec}] {key} = {val:.12g}" if isinstance(val, float)
                           else f"# [{sec}] {key} = {val}")
        return out


def _parse_value(section: str, key: str, raw: str):
    typ, _ = _SCHEMA[section][key]
    try:
        if typ is int:
            val = int(raw)
        elif typ is float:
            val = float(raw)
        else:
            val = raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {typ.__name__}") from exc
    if key == "character" and val not in _CHARACTERS:
        raise ConfigError(f"[system] character must be one of {_CHARACTERS}")
    if key == "rule" and val not in _RULES:
        raise ConfigError(f"[evolve] rule must be one of {_RULES}")
    return val


def load_config(path: str | None = None, text: str | None = None) -> RunConfig:
    """Read and validate a configuration file (or literal text).

    Missing sections and keys take schema defaults; unknown ones are
    rejected with their full path.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # case sensitive keys
    if text is None and path is not None:
        try:
            with open(path, "r") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    if text is not None:
        try:
            cp.read_file(io.StringIO(text), source=path or "<config>")
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
    sections = {}
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown config key [{sec}] {key}")
    for sec, keys in _SCHEMA.items():
        sections[sec] = {}
        for key, (typ, default) in keys.items():
            if cp.has_option(sec, key):
                sections[sec][key] = _parse_value(sec, key, cp.get(sec, key))
            else:
                sections[sec][key] = default
    cfg = RunConfig(sections=sections, path=path)
    cfg.laser_mode()  # validate exclusivity eagerly
    return cfg


def default_config_text() -> str:
    """A config file listing every key at its default value."""
    lines = []
    for sec, keys in _SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (_, default) in keys.items():
            if default is None:
                lines.append(f"# {key} =")
            else:
                lines.append(f"{key} = {default}")
        lines.append("")
    return "\n".join(lines)
