"""Command-line front end: parameter sweeps, CSV emission, validation.

Output files are CSV with a '#'-prefixed metadata header that embeds the
fully resolved configuration, so every run is reproducible from its own
artifacts.  Exit codes: 0 success, 1 validation failure, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import RunConfig, default_config_text, load_config
from .dynamics import build_mode_grid, evolve, fit_decay_rate, survival_probability
from .errors import ConfigError, DegenerateRadiusError, NumericsError, SheetError
from .formfactor import SystemParams
from .labunits import b_from_dipole, b_from_power, power_law_coefficient_ev, rabi_from_b
from .multilevel import dressed_doublet, effective_b_star, gamma_many, partial_rates
from .selfenergy import (
    gamma_onshell,
    gamma_ratio_closed_form,
    golden_rule_rate,
    pole_newton,
    pole_perturbative,
)
from .spectrum import recover_gamma_from_normalization, sample_spectrum, spectrum_normalization
from .validate import run_battery
from .selfenergy import PoleResult, SheetLabel

__all__ = ["main"]


def _fmt(x) -> str:
    if isinstance(x, float):
        if x != x:  # nan
            return "nan"
        return f"{x:.12g}"
    return str(x)


def _emit(args, cfg: RunConfig, command: str, header, rows, extra_meta=()):
    lines = [f"# drivendecay {__version__}", f"# command: {command}"]
    lines += cfg.echo_lines()
    lines += [f"# {k} = {_fmt(v)}" for k, v in extra_meta]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _map_maybe_parallel(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_gamma_scan(args, cfg: RunConfig) -> int:
    params = cfg.system_params()
    sec = cfg.sections["gamma_scan"]
    bs = np.linspace(sec["b_start"], sec["b_stop"], sec["num"]) * params.omega0
    g0_pole = None
    try:
        g0_pole = pole_newton(params, 0.0).gamma
    except NumericsError:
        pass
    g0_norm = recover_gamma_from_normalization(params, 0.0)

    def one(b):
        closed = gamma_ratio_closed_form(params.transition, b / params.omega0)
        norm = recover_gamma_from_normalization(params, b) / g0_norm
        pole = float("nan")
        if g0_pole:
            try:
                pole = pole_newton(params, b).gamma / g0_pole
            except (NumericsError, DegenerateRadiusError, SheetError):
                pole = float("nan")
        return (b / params.omega0, closed, pole, norm)

    rows = _map_maybe_parallel(one, bs, cfg.threads)
    rows.sort(key=lambda r: r[0])
    meta = [("gamma_golden_rule", golden_rule_rate(params))]
    if g0_pole:
        rec = pole_newton(params, 0.0).as_record()
        meta += [(f"pole_b0_{k}", v) for k, v in rec.items()]
    _emit(args, cfg, "gamma-scan",
          ["b_over_omega0", "gamma_ratio_closed_form", "gamma_ratio_pole", "gamma_ratio_normalization"],
          rows, extra_meta=meta)
    return 0


def _spectrum_pole(params: SystemParams, cfg: RunConfig, b: float) -> PoleResult:
    sec = cfg.sections["spectrum"]
    if sec["gamma"] is not None:
        gamma = sec["gamma"] * params.omega0
        de = sec["delta_e"] * params.omega0
        w0 = params.omega0
        return PoleResult(s_pole=complex(-0.5 * gamma, -(w0 - de)), gamma=gamma,
                          delta_e=de, sheet=SheetLabel.III if 0 < b < w0 else SheetLabel.II,
                          method="perturbative", residual=float("nan"), b=b)
    return pole_perturbative(params, b, compute_residual=False)


def cmd_spectrum(args, cfg: RunConfig) -> int:
    params = cfg.system_params()
    sec = cfg.sections["spectrum"]
    b = sec["b"] * params.omega0
    pole = _spectrum_pole(params, cfg, b)
    wbar = params.omega0 - pole.delta_e
    win = sec["window_gammas"] * pole.gamma
    lo = max(0.0, (wbar - b if b < wbar else wbar + b) - win)
    hi = wbar + b + win
    omegas = np.linspace(lo, hi, sec["num"])
    curve = sample_spectrum(params, pole, b, omegas)
    mass = spectrum_normalization(params, pole, b)
    rows = list(zip(curve.omegas, curve.density))
    _emit(args, cfg, "spectrum", ["omega", "dP_domega"], rows,
          extra_meta=[("gamma", pole.gamma), ("wbar0", wbar), ("b", b),
                      ("total_probability", mass)])
    return 0


def cmd_evolve(args, cfg: RunConfig) -> int:
    params = cfg.system_params()
    sec = cfg.sections["evolve"]
    b = sec["b"] * params.omega0
    gam_est = gamma_onshell(params, b)
    if gam_est <= 0:
        raise ConfigError("[evolve] needs g2 > 0 for a finite decay time scale")
    omega_max = sec["omega_max"] * params.omega0 if sec["omega_max"] > 0 else \
        20.0 * max(params.omega0, params.omega0 + b)
    grid = build_mode_grid(params, omega_max, sec["modes"], sec["rule"], b=b)
    t_final = sec["t_final_gammas"] / gam_est
    tol = args.tolerance if args.tolerance else sec["tol"]
    res = evolve(grid, params, b, t_final, tol=tol, n_save=sec["n_save"])
    t, p = survival_probability(res)
    fit = fit_decay_rate(res, window=(sec["fit_t1_gammas"] / gam_est, t_final))
    try:
        gam_pole = pole_newton(params, b).gamma
    except (NumericsError, DegenerateRadiusError, SheetError):
        gam_pole = float("nan")
    _emit(args, cfg, "evolve", ["t", "survival"], list(zip(t, p)),
          extra_meta=[("backend", res.backend), ("modes", grid.count),
                      ("grid_quadrature_tol", grid.declared_tol),
                      ("t_recurrence", grid.t_recurrence),
                      ("max_norm_drift", res.max_norm_drift),
                      ("gamma_fit", fit.gamma), ("gamma_fit_stderr", fit.stderr),
                      ("gamma_pole", gam_pole),
                      ("gamma_onshell_seed", gam_est)])
    return 0


def cmd_dressed(args, cfg: RunConfig) -> int:
    params = cfg.system_params()
    sec = cfg.sections["dressed"]
    bs = np.linspace(sec["b_start"], sec["b_stop"], sec["num"]) * params.omega0
    rows = []
    for b in bs:
        dd = dressed_doublet(b)
        gp, gm = partial_rates(params, b)
        rows.append((b / params.omega0, dd.energies[0], dd.energies[1], dd.splitting,
                     gp, gm, gp + gm, gamma_onshell(params, b)))
    _emit(args, cfg, "dressed",
          ["b_over_omega0", "e_plus", "e_minus", "rabi_splitting",
           "gamma_plus", "gamma_minus", "gamma_sum", "gamma_onshell"], rows)
    return 0


def cmd_multilevel(args, cfg: RunConfig) -> int:
    params = cfg.system_params()
    ladder = cfg.ladder()
    sec = cfg.sections["multilevel"]
    if sec["decomposition_b"] is not None:
        from .multilevel import partial_fractions

        b = sec["decomposition_b"] * params.omega0
        dec = partial_fractions(ladder, b, params.omega0)
        _emit(args, cfg, "multilevel",
              ["sigma", "c"], list(zip(dec.shifts, dec.weights)),
              extra_meta=[("b", b), ("weight_sum", dec.weight_sum())])
        return 0
    bs = np.linspace(sec["b_start"], sec["b_stop"], sec["num"]) * params.omega0

    def one(b):
        exact = gamma_many(params, ladder, b, method="exact") if b > 0 else golden_rule_rate(params)
        pert = gamma_many(params, ladder, b, method="perturbative") if b > 0 else golden_rule_rate(params)
        try:
            bstar = effective_b_star(ladder, b, params.omega0)
        except NumericsError:
            bstar = float("nan")
        return (b / params.omega0, exact, pert, bstar)

    rows = _map_maybe_parallel(one, bs, cfg.threads)
    rows.sort(key=lambda r: r[0])
    _emit(args, cfg, "multilevel",
          ["b_over_omega0", "gamma_many_exact", "gamma_many_perturbative", "b_star"],
          rows, extra_meta=[("ladder_levels", len(ladder)),
                            ("gamma_golden_rule", golden_rule_rate(params))])
    return 0


def cmd_estimate_b(args, cfg: RunConfig) -> int:
    params = cfg.system_params()
    omega0_ev = cfg.sections["estimate_b"]["omega0_ev"]
    mode = cfg.laser_mode()
    sec = cfg.sections["laser"]
    if mode == "power":
        b_ev = b_from_power(sec["power_w"], sec["wavelength_um"], sec["area_um2"],
                            sec["linewidth_ev"])
        b_units = b_ev / omega0_ev
    elif mode == "dipole":
        b_units = b_from_dipole(sec["omega_big"], sec["dipole_sq"], sec["photon_density"])
        b_ev = b_units * omega0_ev
    elif mode == "direct":
        b_units = sec["b"]
        b_ev = b_units * omega0_ev
    else:
        raise ConfigError("[laser] has no parameterization to estimate B from")
    rows = [
        ("laser_mode", mode),
        ("b_ev", b_ev),
        ("b_over_omega0", b_units),
        ("rabi_ev", rabi_from_b(b_ev)),
        ("rabi_over_omega0", rabi_from_b(b_units)),
        ("power_law_coefficient_ev", power_law_coefficient_ev()),
    ]
    _emit(args, cfg, "estimate-b", ["quantity", "value"], rows)
    return 0


def cmd_validate(args, cfg: RunConfig) -> int:
    results = run_battery(cfg)
    rows = [("PASS" if ok else "FAIL", name, detail) for name, ok, detail in results]
    n_fail = sum(1 for _, ok, _ in results if not ok)
    _emit(args, cfg, "validate", ["status", "check", "detail"],
          [(s, n, f"\"{d}\"") for s, n, d in rows],
          extra_meta=[("checks_total", len(results)), ("checks_failed", n_fail)])
    if args.out:  # mirror a short summary to the terminal
        for s, n, _ in rows:
            print(f"{s} {n}")
        print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 1 if n_fail else 0


_COMMANDS = {
    "gamma-scan": cmd_gamma_scan,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "dressed": cmd_dressed,
    "multilevel": cmd_multilevel,
    "estimate-b": cmd_estimate_b,
    "validate": cmd_validate,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="drivendecay",
        description="Decay rates, spectra and dynamics of a laser-driven three-level emitter",
    )
    parser.add_argument("--version", action="version", version=f"drivendecay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="configuration file (INI-style sections)")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--threads", type=int, default=None, help="override [run] threads")
        p.add_argument("--tolerance", type=float, default=None,
                       help="override the command's main tolerance")
        p.add_argument("--print-default-config", action="store_true",
                       help="print a config file with every default and exit")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.print_default_config:
            sys.stdout.write(default_config_text())
            return 0
        if args.config is None and args.command != "validate":
            raise ConfigError(f"command {args.command!r} requires --config")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.sections["run"]["seed"] = args.seed
        if args.threads is not None:
            cfg.sections["run"]["threads"] = args.threads
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
