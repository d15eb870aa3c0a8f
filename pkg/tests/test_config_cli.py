import subprocess
import sys

import numpy as np
import pytest

from drivendecay.cli import main
from drivendecay.config import default_config_text, load_config
from drivendecay.errors import ConfigError

SCAN_CFG = """
[run]
seed = 3
[form_factor]
kappa = 3
lambda_cut = 30.0
[system]
g2 = 1e-9
j = 2
[gamma_scan]
b_start = 0.0
b_stop = 1.0
num = 5
"""


def test_defaults_round_trip():
    cfg = load_config(text=default_config_text())
    assert cfg.sections["run"]["seed"] == 0
    assert cfg.sections["form_factor"]["beta"] == 2.0
    params = cfg.system_params()
    assert params.transition.kappa == cfg.sections["form_factor"]["kappa"]


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match=r"\[system\] gg2"):
        load_config(text="[system]\ngg2 = 1e-4\n")
    with pytest.raises(ConfigError, match=r"\[systems\]"):
        load_config(text="[systems]\ng2 = 1e-4\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError, match="kappa"):
        load_config(text="[form_factor]\nkappa = three\n")


def test_kappa_transition_consistency():
    cfg = load_config(text="[form_factor]\nkappa = 5\n[system]\nj = 2\n")
    with pytest.raises(ConfigError, match="inconsistent"):
        cfg.system_params()


def test_laser_exclusivity():
    bad = "[laser]\nb = 0.2\npower_w = 1.0\nwavelength_um = 1\narea_um2 = 1\nlinewidth_ev = 1\n"
    with pytest.raises(ConfigError, match="exactly one"):
        load_config(text=bad)
    with pytest.raises(ConfigError, match="power"):
        load_config(text="[laser]\npower_w = 1.0\n")


def test_ladder_parsing():
    cfg = load_config(text="[ladder]\nlevels = 0.3:5.0, 0.2:-8.0\n")
    lad = cfg.ladder()
    assert len(lad) == 2
    assert lad.entries[0] == (0.3, 5.0)
    with pytest.raises(ConfigError):
        load_config(text="[ladder]\nlevels = 0.3;5\n").ladder()


def test_echo_contains_defaults():
    cfg = load_config(text=SCAN_CFG)
    echo = "\n".join(cfg.echo_lines())
    assert "# [form_factor] beta = 2" in echo
    assert "# [run] seed = 3" in echo


def _run_cli(args):
    return main(args)


def test_cli_gamma_scan_deterministic(tmp_path):
    cfg_path = tmp_path / "scan.cfg"
    cfg_path.write_text(SCAN_CFG)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run_cli(["gamma-scan", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert _run_cli(["gamma-scan", "--config", str(cfg_path), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = [l for l in out1.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].split(",")[0] == "b_over_omega0"
    assert len(rows) == 6
    # closed-form column: j=2 endpoint value 2^kappa/2 = 4
    last = rows[-1].split(",")
    assert float(last[0]) == 1.0
    assert float(last[1]) == 4.0


def test_cli_dressed_and_multilevel(tmp_path):
    cfg_path = tmp_path / "cfg.cfg"
    cfg_path.write_text(SCAN_CFG + "\n[ladder]\nlevels = 0.3:5.0\n"
                        "[multilevel]\nb_start = 0.05\nb_stop = 0.2\nnum = 4\n")
    out = tmp_path / "d.csv"
    assert _run_cli(["dressed", "--config", str(cfg_path), "--out", str(out)]) == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")]
    hdr, data = rows[0], rows[1:]
    i_sum, i_onshell = hdr.index("gamma_sum"), hdr.index("gamma_onshell")
    for r in data:
        assert float(r[i_sum]) == pytest.approx(float(r[i_onshell]), rel=1e-12)
    out2 = tmp_path / "m.csv"
    assert _run_cli(["multilevel", "--config", str(cfg_path), "--out", str(out2)]) == 0
    rows = [l.split(",") for l in out2.read_text().splitlines() if not l.startswith("#")]
    hdr, data = rows[0], rows[1:]
    ib, ibstar = hdr.index("b_over_omega0"), hdr.index("b_star")
    for r in data:
        assert float(r[ibstar]) > float(r[ib])


def test_cli_estimate_b(tmp_path):
    cfg_path = tmp_path / "est.cfg"
    cfg_path.write_text("[laser]\npower_w = 1.0\nwavelength_um = 1.0\n"
                        "area_um2 = 1.0\nlinewidth_ev = 1.0\n"
                        "[estimate_b]\nomega0_ev = 2.0\n")
    out = tmp_path / "est.csv"
    assert _run_cli(["estimate-b", "--config", str(cfg_path), "--out", str(out)]) == 0
    vals = dict(l.split(",", 1) for l in out.read_text().splitlines()
                if not l.startswith("#") and "," in l)
    b_ev = float(vals["b_ev"])
    assert b_ev**2 == pytest.approx(132.0, rel=1e-2)
    # values are printed at 12 significant digits
    assert float(vals["rabi_ev"]) == pytest.approx(2 * b_ev, rel=1e-10)
    assert float(vals["b_over_omega0"]) == pytest.approx(b_ev / 2.0, rel=1e-10)


SPECTRUM_CFG = """
[form_factor]
kappa = 3
lambda_cut = 1e6
[system]
# chosen so the prescribed linewidth 0.01 carries unit emission probability:
# g2 = gamma / (pi * (chi2(1.2) + chi2(0.8)))
g2 = 2.8420525552e-4
j = 2
[spectrum]
b = 0.2
num = 801
gamma = 0.002
"""


def test_cli_spectrum(tmp_path):
    cfg_path = tmp_path / "sp.cfg"
    cfg_path.write_text(SPECTRUM_CFG)
    out = tmp_path / "sp.csv"
    assert _run_cli(["spectrum", "--config", str(cfg_path), "--out", str(out)]) == 0
    meta = {}
    data = []
    for line in out.read_text().splitlines():
        if line.startswith("# ") and "=" in line and "[" not in line:
            k, v = line[2:].split(" = ")
            meta[k] = v
        elif not line.startswith("#") and "," in line and not line.startswith("omega"):
            data.append(tuple(float(x) for x in line.split(",")))
    assert 0.995 <= float(meta["total_probability"]) <= 1.005
    om = np.array([d[0] for d in data])
    dens = np.array([d[1] for d in data])
    # doublet peaks near wbar0 +/- B
    peak_hi = om[(om > 1.0)][np.argmax(dens[om > 1.0])]
    peak_lo = om[(om < 1.0)][np.argmax(dens[om < 1.0])]
    assert abs(peak_hi - 1.2) < 0.01
    assert abs(peak_lo - 0.8) < 0.01


def test_cli_evolve_small(tmp_path):
    cfg_path = tmp_path / "ev.cfg"
    cfg_path.write_text(
        "[form_factor]\nkappa = 3\nlambda_cut = 3.0\n"
        "[system]\ng2 = 5e-3\nj = 2\n"
        "[evolve]\nb = 0.3\nmodes = 500\nt_final_gammas = 3.0\n"
        "fit_t1_gammas = 0.6\ntol = 1e-8\n")
    out = tmp_path / "ev.csv"
    assert _run_cli(["evolve", "--config", str(cfg_path), "--out", str(out)]) == 0
    meta = dict(l[2:].split(" = ") for l in out.read_text().splitlines()
                if l.startswith("# ") and " = " in l and "[" not in l)
    assert float(meta["gamma_fit"]) == pytest.approx(float(meta["gamma_pole"]), rel=0.05)
    assert float(meta["max_norm_drift"]) < 1e-7


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[system]\nbogus = 1\n")
    assert _run_cli(["gamma-scan", "--config", str(bad), "--out", "/dev/null"]) == 2
    assert _run_cli(["gamma-scan"]) == 2  # missing --config
    # corrupted physics: beta below integrability makes validate fail (exit 1)
    corrupt = tmp_path / "corrupt.cfg"
    corrupt.write_text("[form_factor]\nbeta = 0.5\n")
    assert _run_cli(["validate", "--config", str(corrupt), "--out",
                     str(tmp_path / "v.csv")]) == 1
    text = (tmp_path / "v.csv").read_text()
    assert "FAIL,form_factor" in text


def test_cli_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "drivendecay.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "drivendecay" in proc.stdout


def test_threads_flag_deterministic(tmp_path):
    cfg_path = tmp_path / "scan.cfg"
    cfg_path.write_text(SCAN_CFG)
    out1, out2 = tmp_path / "t1.csv", tmp_path / "t4.csv"
    assert _run_cli(["gamma-scan", "--config", str(cfg_path), "--out", str(out1),
                     "--threads", "1"]) == 0
    assert _run_cli(["gamma-scan", "--config", str(cfg_path), "--out", str(out2),
                     "--threads", "4"]) == 0
    body1 = [l for l in out1.read_text().splitlines() if not l.startswith("#")]
    body2 = [l for l in out2.read_text().splitlines() if not l.startswith("#")]
    assert body1 == body2


def test_cli_multilevel_decomposition(tmp_path):
    cfg_path = tmp_path / "dec.cfg"
    cfg_path.write_text(SCAN_CFG + "\n[ladder]\nlevels = 0.3:5.0\n"
                        "[multilevel]\ndecomposition_b = 0.2\n")
    out = tmp_path / "dec.csv"
    assert _run_cli(["multilevel", "--config", str(cfg_path), "--out", str(out)]) == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == ["sigma", "c"]
    weights = [float(r[1]) for r in rows[1:]]
    assert sum(weights) == pytest.approx(1.0, abs=1e-12)
    assert len(weights) == 3  # N - 1 branch points for a ladder with one level


def test_pole_record_keys():
    from drivendecay.formfactor import FormFactorModel, SystemParams
    from drivendecay.selfenergy import pole_newton

    model = FormFactorModel(kappa=3, lambda_cut=3.0)
    params = SystemParams(omega0=1.0, g2=1e-4, form_factor=model)
    rec = pole_newton(params, 0.3).as_record()
    assert set(rec) == {"re_s", "im_s", "gamma", "delta_E", "sheet", "method", "residual"}
    assert rec["sheet"] == "III"
    assert rec["method"] == "newton"
