import json
import subprocess
import sys

import numpy as np
import pytest

from hslab import cli, io

SMALL = """
kgrid.n = 128
"""


def run(tmp_path, cmd, text, *extra, name="run.cfg"):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / "out"
    return cli.main([cmd, "--config", str(cfg), "--out", str(out), *extra]), out


def test_scatter_outputs(tmp_path):
    code, out = run(tmp_path, "scatter", SMALL + "output.gnuplot = true\n")
    assert code == 0
    header, data = io.read_csv(out / "scattering.csv")
    assert ",".join(header) == "k,re_a,im_a,re_b,im_b,re_r,im_r"
    assert data.shape == (128, 7)
    assert np.allclose(data[:, 0], -data[::-1, 0], atol=1e-14)
    meta = json.loads((out / "scattering.csv.meta.json").read_text())
    assert len(meta["config_sha256"]) == 64 and "tol.unitarity" in meta["tolerances"]
    summary = json.loads((out / "scattering_summary.json").read_text())
    assert summary["k_count"] == 128 and summary["validation"]["ok"]
    assert (out / "scattering_summary.json.meta.json").exists()
    assert (out / "scattering.gp").exists()


def test_scatter_is_reproducible(tmp_path):
    run(tmp_path, "scatter", SMALL)
    first = (tmp_path / "out" / "scattering.csv").read_bytes()
    run(tmp_path, "scatter", SMALL, "--threads", "3")
    assert (tmp_path / "out" / "scattering.csv").read_bytes() == first


def test_asympt_outputs(tmp_path):
    text = SMALL.replace("128", "512") + "asympt.xi = -0.5, 0.5\nasympt.t = 25, 100\nasympt.y_range = -60, -10, 11\n"
    code, out = run(tmp_path, "asympt", text)
    assert code == 0
    header, data = io.read_csv(out / "asympt.csv")
    assert ",".join(header) == "y,t,xi,x,u_leading,error_scale"
    assert data.shape[0] == 4 + 2 * 11
    fast = data[(data[:, 2] == 0.5)]
    assert np.all(fast[:, 4] == 0) and np.array_equal(fast[:, 3], fast[:, 0])
    h, diag = io.read_csv(out / "delta_diag.csv")
    assert ",".join(h) == "s,nu,jump_residual" and np.max(diag[:, 2]) <= 1e-6
    coeff = json.loads((out / "coefficients_xi-0.5.json").read_text())
    assert coeff["diagnostics"]["representation_residual"] <= 1e-4
    assert json.loads((out / "asympt_errors.json").read_text()) == {"errors": [], "failures": []}


def test_asympt_transition_band(tmp_path):
    code, out = run(tmp_path, "asympt", SMALL + "asympt.xi = 0.01\nasympt.t = 25\n")
    assert code == 2
    _, data = io.read_csv(out / "asympt.csv")
    assert np.all(np.isnan(data[:, 3:]))
    errs = json.loads((out / "asympt_errors.json").read_text())["errors"]
    assert "transition" in errs[0]["error"]


def test_evolve_outputs(tmp_path):
    text = "grid.N = 1024\nevolve.N = 1024\nevolve.L = 24\nevolve.times = 0.5, 1\n"
    code, out = run(tmp_path, "evolve", text)
    assert code == 0
    for T in ("0.5", "1"):
        h, d = io.read_csv(out / f"evolve_t{T}.csv")
        assert ",".join(h) == "x,u,m" and d.shape == (1024, 3)
        assert (out / f"evolve_t{T}.csv.meta.json").exists()
    log = json.loads((out / "evolve_log.json").read_text())
    assert all(abs(s["drift"]) <= 1e-8 for s in log["snapshots"])


def test_compare_zero_profile(tmp_path):
    text = ("profile.kind = zero\ngrid.N = 512\nkgrid.n = 64\nevolve.N = 512\n"
            "compare.t = 1, 2\ncompare.xi = -0.5, 0.5\n")
    code, out = run(tmp_path, "compare", text)
    assert code == 0
    h, d = io.read_csv(out / "compare.csv")
    assert ",".join(h) == "xi,t,u_num,u_asympt,ratio,abs_err,decay_slope"
    assert d.shape == (4, 7)
    assert np.all(d[:, 5] == 0) and np.all(np.isnan(d[:, 4]))


@pytest.mark.parametrize("text,code", [
    ("profile.A = 2\n", 2),
    ("bogus.key = 1\n", 1),
    ("evolve.dt = 0.5\nevolve.N = 512\nevolve.L = 24\ngrid.N = 512\n", 1),
    ("profile.kind = file\nprofile.path = nowhere.csv\n", 1),
])
def test_exit_codes(tmp_path, text, code):
    cmd = "evolve" if "evolve" in text else "scatter"
    assert run(tmp_path, cmd, text)[0] == code


def test_missing_config_and_usage(tmp_path):
    assert cli.main(["scatter", "--config", str(tmp_path / "none.cfg")]) == 1
    assert cli.main(["bogus", "--config", "x"]) == 1
    assert cli.main(["scatter"]) == 1


def test_thread_precedence(monkeypatch):
    cfg = cli.config.parse_text("run.threads = 2")
    monkeypatch.delenv("HSLAB_THREADS", raising=False)
    assert cli._threads(None, cfg) == 2
    assert cli._threads(5, cfg) == 5
    monkeypatch.setenv("HSLAB_THREADS", "3")
    assert cli._threads(5, cfg) == 3
    monkeypatch.setenv("HSLAB_THREADS", "x")
    with pytest.raises(cli.Abort):
        cli._threads(None, cfg)


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("HSLAB_THREADS", "zero")
    assert run(tmp_path, "scatter", SMALL)[0] == 1


def test_fit_slope():
    t = np.array([1.0, 2.0, 4.0])
    assert abs(cli.fit_slope(t, 3 * t**-0.5) + 0.5) <= 1e-12
    assert np.isnan(cli.fit_slope(t, [1.0, 0.0, 1.0]))


def test_console_script(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(SMALL)
    proc = subprocess.run([sys.executable, "-m", "hslab.cli", "scatter", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "hslab.cli", "scatter", "--config", str(tmp_path / "x.cfg")],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "config error" in proc.stderr
