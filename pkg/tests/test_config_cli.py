import logging
import textwrap

import numpy as np
import pytest

from kswave import cli, io
from kswave.config import ConfigError, ExperimentConfig, parse_config, parse_config_string


def ini(text):
    return textwrap.dedent(text).strip() + "\n"


SMALL = ini("""
    [grid]
    L = 10
    M = 200
    [time]
    T_final = 4
    snapshot_times = 0, 2, 4
    [ic]
    kind = polynomial
    x0 = -6
    [diagnostics]
    t1 = 1
    t2 = 4
""")


def test_minimal_config_defaults():
    cfg = parse_config_string("[ic]\nkind = polynomial\n")
    assert (cfg.grid.L, cfg.grid.M) == (20.0, 2000)
    assert (cfg.sigma, cfg.chi) == (1.0, 1.0)
    assert cfg.time.T_final == 40.0
    assert cfg.time.cfl == 0.9  # deliberate default, see README
    assert cfg.diagnostics.betas == (0.0, 0.2, 0.6667, 0.8)
    assert (cfg.diagnostics.t1, cfg.diagnostics.t2) == (15.0, 40.0)
    assert cfg.time.snapshot_times == (0.0, 10.0, 25.0, 40.0)
    assert cfg.ic.kind == "polynomial" and cfg.ic.x0 == -15.0
    assert cfg.schema_version == 1
    assert cfg.sweep is None


@pytest.mark.parametrize("body,key", [
    ("[ic]\nkind = polynomial\n[diagnostics]\nt1 = 30\nt2 = 20\n", "diagnostics.t1"),
    ("[ic]\nkind = polynomial\n[diagnostics]\nbetas = 0, 1.2\n", "diagnostics.betas"),
    ("[ic]\nkind = polynomial\n[grid]\nM = 8\n", "grid.M"),
    ("[ic]\nkind = polynomial\n[grid]\nM = many\n", "grid.M"),
    ("[ic]\nkind = polynomial\n[time]\ncfl = 1.5\n", "time.cfl"),
    ("[ic]\nkind = polynomial\n[params]\nsigma = nan\n", "params.sigma"),
    ("[grid]\nL = 20\n", "ic.kind"),
    ("[ic]\nkind = blob\n", "ic.kind"),
    ("[ic]\nkind = polynomial\n[meta]\nschema_version = 7\n", "meta.schema_version"),
    ("[ic]\nkind = polynomial\n[sweep]\nparam = alpha\nvalues =\n", "sweep.values"),
    ("[ic]\nkind = polynomial\n[sweep]\nparam = gamma\nvalues = 1\n", "sweep.param"),
])
def test_validation_names_the_key(body, key):
    with pytest.raises(ConfigError) as ei:
        parse_config_string(body)
    assert ei.value.key == key
    assert key in str(ei.value)


def test_sigma2_and_inline_comments():
    cfg = parse_config_string("[ic]\nkind = ramp  ; phi_1\n[params]\nsigma2 = 0.25\n")
    assert cfg.sigma == 0.5 and cfg.ic.kind == "ramp"
    with pytest.raises(ConfigError) as ei:
        parse_config_string("[ic]\nkind = ramp\n[params]\nsigma = 1\nsigma2 = 1\n")
    assert ei.value.key == "params.sigma2"


def test_unknown_keys_warn(caplog):
    with caplog.at_level(logging.WARNING):
        parse_config_string("[ic]\nkind = polynomial\ncolour = red\n[extras]\na = 1\n")
    text = caplog.text
    assert "ic.colour" in text and "[extras]" in text


def test_profile_ic_reads_csv(tmp_path):
    z = np.linspace(-5, 0, 11)
    io.write_columns(tmp_path / "p.csv", io.PROFILE_HEADER, (z, 1 - 0.02 * (z + 5), z, z))
    (tmp_path / "c.ini").write_text("[ic]\nkind = profile\nprofile = p.csv\nx0 = 1\n")
    cfg = parse_config(tmp_path / "c.ini")
    assert cfg.ic.kind == "profile" and cfg.ic.x0 == 1.0
    assert np.allclose(cfg.ic.table[0], z)


def test_dataclass_config_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig(sigma=-1.0)


# -- CLI ------------------------------------------------------------------------


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def test_simulate_outputs(tmp_path, small_cfg, capsys):
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(small_cfg), "--out", str(out), "--seed", "3"]) == 0
    header, data = io.read_columns(out / "trace.csv")
    assert header == ["t", "mass", "separatrix", "jump", "xi_0.0000", "xi_0.2000", "xi_0.6667", "xi_0.8000"]
    assert data[0, 0] == 0.0 and data[-1, 0] == 4.0
    for t in ("0", "2", "4"):
        h, snap = io.read_columns(out / f"snapshot_t{t}.csv")
        assert h == ["x", "u", "p"] and snap.shape == (200, 3)
    meta = io.read_meta(out / "summary.meta")
    assert meta["seed"] == "3"
    for k in ("speed_beta_0.0000", "jump", "jump_ok", "speed_ok", "mass_drift"):
        assert k in meta
    assert "speed_beta_0.0000" in capsys.readouterr().out


def test_seventeen_significant_digits(tmp_path, small_cfg):
    out = tmp_path / "o"
    cli.main(["simulate", "--config", str(small_cfg), "--out", str(out)])
    row = (out / "trace.csv").read_text().splitlines()[2].split(",")
    assert any(len(v.replace("-", "").replace(".", "").lstrip("0").split("e")[0]) == 17 for v in row)
    assert float(row[0]) > 0


def test_reaction_off_conserves_mass(tmp_path):
    p = tmp_path / "c.ini"
    text = SMALL.replace("T_final = 4", "T_final = 4\nreaction = false")
    p.write_text(text)
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(p), "--out", str(out)]) == 0
    assert float(io.read_meta(out / "summary.meta")["mass_drift"]) < 1e-12


def test_simulate_is_deterministic(tmp_path, small_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["simulate", "--config", str(small_cfg), "--out", str(a)])
    cli.main(["simulate", "--config", str(small_cfg), "--out", str(b)])
    for name in ("trace.csv", "snapshot_t2.csv", "summary.meta"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_reports_solver_failure(tmp_path, small_cfg, monkeypatch):
    import kswave.hyperbolic as hyp

    monkeypatch.setattr(hyp, "cfl_dt", lambda st, cfl, dt_max: 2.0)  # oversized step leaves [0, 1]
    assert cli.main(["simulate", "--config", str(small_cfg), "--out", str(tmp_path / "o")]) == 1


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["chibar"]) == 0
    assert (tmp_path / "envout" / "f_table.csv").exists()


def test_chibar_command(tmp_path, capsys):
    assert cli.main(["chibar", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "chibar = 1.045354219" in text
    f1 = float(text.split("f(1) = ")[1].split()[0])
    assert f1 > 0
    header, d = io.read_columns(tmp_path / "f_table.csv")
    assert header == ["x", "f"] and d.shape == (50, 2)
    assert d[0, 0] == pytest.approx(0.02) and d[-1, 0] == pytest.approx(1.98)
    assert np.all(np.diff(d[:, 1]) < 0)


def test_wave_command(tmp_path, capsys):
    p = tmp_path / "w.ini"
    p.write_text("[ic]\nkind = polynomial\n[wave]\ndz = 0.02\nZ = 30\n")
    assert cli.main(["wave", "--config", str(p), "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    c = float(text.split("c = ")[1].split()[0])
    assert 1 / 3 < c < 1 / 2
    assert "contains c: True" in text
    assert "U0minus >= 0.66666666666666663: True" in text
    z, U, P, Pp = io.read_profile_csv(tmp_path / "profile.csv")
    meta = io.read_meta(tmp_path / "profile.meta")
    assert set(meta) >= {"c", "U0minus", "iterations", "residual_eta", "chi_hat", "chibar"}
    assert float(meta["c"]) == c and U[-1] == float(meta["U0minus"])


def test_wave_warns_above_threshold(tmp_path, capsys):
    p = tmp_path / "w.ini"
    p.write_text("[ic]\nkind = polynomial\n[params]\nchi = 1.5\n[wave]\ndz = 0.05\nZ = 20\nmax_iter = 2\n")
    rc = cli.main(["wave", "--config", str(p), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert "not below the threshold" in err
    assert rc == 2
    assert (tmp_path / "residual_history.csv").exists()


def test_sweep_command(tmp_path, capsys):
    p = tmp_path / "s.ini"
    p.write_text(SMALL.replace("kind = polynomial\nx0 = -6", "kind = sigmoid\nx0 = -6")
                 + "[sweep]\nparam = alpha\nvalues = 2, 5\n[wave]\ndz = 0.05\nZ = 20\n")
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    assert cli.main(["sweep", "--config", str(p), "--out", str(out1)]) == 0
    assert cli.main(["sweep", "--config", str(p), "--out", str(out2), "--workers", "2"]) == 0
    text = (out1 / "sweep.csv").read_text()
    assert text == (out2 / "sweep.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("param,value,speed_beta0,jump,c_wave")
    assert len(lines) == 3 and lines[1].startswith("alpha,2,")
    assert (out1 / "alpha_2" / "trace.csv").exists()


def test_sweep_entry_grid_refinement():
    base = parse_config_string("[ic]\nkind = polynomial\n")
    e = cli.sweep_entry_config(base, "sigma2", 0.01)
    assert e.sigma == pytest.approx(0.1) and e.grid.M == 8000
    assert cli.sweep_entry_config(base, "sigma2", 0.5).grid.M == 2000
    a = cli.sweep_entry_config(base, "alpha", 2.0)
    assert a.ic.kind == "sigmoid" and a.ic.alpha == 2.0


def test_config_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[ic]\nkind = polynomial\n[diagnostics]\nbetas = 1.2\n")
    assert cli.main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 1
    assert "diagnostics.betas" in capsys.readouterr().err
