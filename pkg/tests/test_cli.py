import csv
import json
import math

import numpy as np
import pytest

from chargedrop import cli, io
from chargedrop.evolution import FluidParams, SimConfig, Snapshot, critical_charge
from chargedrop.exceptions import InvalidParameterError
from chargedrop.mesh import make_perturbed_sphere


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_config_parsing_with_comments_and_aliases(tmp_path, monkeypatch):
    monkeypatch.delenv(io.OUTPUT_DIR_ENV, raising=False)
    cfg = io.load_config(write(tmp_path / "a.cfg", "# header\nQ_factor = 1.0  # critical\nlambda = 100\nN = 64\neps = 0.05\noutput_dir = out\n"))
    assert cfg.params.mu1 == 100.0 and cfg.params.mu2 == 1.0
    assert cfg.params.Q == pytest.approx(critical_charge(cfg.params))
    assert cfg.sim.N == 64 and cfg.sim.eps_perturb == 0.05
    assert str(cfg.output_dir) == "out"


def test_config_round_trip(tmp_path):
    cfg = io.load_config(write(tmp_path / "a.cfg", "Q_factor = 0.8\nmu1 = 2.5\nN = 48\nt_max = 3.25\ncfl = 0.3\n"))
    again = io.build_config(io.parse_config_text(io.dump_config(cfg)))
    assert again.as_dict() == cfg.as_dict()


def test_env_var_overrides_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(io.OUTPUT_DIR_ENV, str(tmp_path / "elsewhere"))
    cfg = io.load_config(write(tmp_path / "a.cfg", "output_dir = here\n"))
    assert cfg.output_dir == tmp_path / "elsewhere"


@pytest.mark.parametrize(
    "text,field",
    [("mu1 = -1\n", "mu1"), ("lambda = -2\n", "lambda"), ("mu2 = -1\n", "mu2"), ("N = abc\n", "N"),
     ("cfl = 0.9\n", "cfl"), ("bogus = 1\n", "bogus"), ("Q_factor = -1\n", "Q_factor")],
)
def test_bad_config_names_field(tmp_path, text, field):
    with pytest.raises(InvalidParameterError) as err:
        io.load_config(write(tmp_path / "bad.cfg", text))
    assert err.value.field == field


def test_run_command_rejects_negative_viscosity(tmp_path, capsys):
    status = cli.main(["run", str(write(tmp_path / "bad.cfg", "Q_factor = 1\nmu1 = -0.5\n"))])
    assert status != 0
    err = json.loads(capsys.readouterr().err)
    assert err["field"] == "mu1" and "mu1" in err["message"]


def test_equilibrium_run_outputs(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(io.OUTPUT_DIR_ENV, raising=False)
    out = tmp_path / "eq"
    cfg = write(tmp_path / "eq.cfg", f"Q_factor = 0.5\nlambda = 1\neps = 0\nt_max = 1.0\nsnapshot_every = 4\noutput_dir = {out}\n")
    assert cli.main(["run", str(cfg)]) == 0
    report = json.loads((out / "run_report.json").read_text(encoding="utf-8"))
    assert report["stop_reason"] == "t-max"
    assert report["max_speed"] < 1e-6
    assert report["config"]["N"] == 256
    rows = io.read_diagnostics(out / "diagnostics.csv")
    assert len(rows) == report["steps"] + 1
    snaps = io.snapshot_paths(out)
    assert len(snaps) >= 2
    s = io.read_snapshot(snaps[-1])
    assert s.t == pytest.approx(1.0) and s.nodes.shape == (257, 2) and s.u.shape == (256, 2)
    assert set(json.loads(snaps[0].read_text())) >= {"t", "nodes", "sigma", "u", "V", "kf", "zf"}


def test_run_is_reproducible(tmp_path, monkeypatch):
    monkeypatch.delenv(io.OUTPUT_DIR_ENV, raising=False)
    texts = []
    for name in ("a", "b"):
        cfg = write(tmp_path / f"{name}.cfg", f"Q_factor = 1.1\nlambda = 3\nN = 32\nt_max = 2\noutput_dir = {tmp_path / name}\n")
        assert cli.main(["run", str(cfg)]) == 0
        texts.append((tmp_path / name / "diagnostics.csv").read_text(encoding="utf-8"))
    assert texts[0] == texts[1]


def test_snapshot_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(3)
    snap = Snapshot(step=7, t=math.pi, nodes=make_perturbed_sphere(1, 0.1, 2, 20).nodes, sigma=rng.random(20),
                    u=rng.standard_normal((20, 2)), V=1 / 3, kf=2 ** 0.5, zf=math.e)
    io.write_snapshot(tmp_path / "0000.json", snap)
    back = io.read_snapshot(tmp_path / "0000.json")
    for name in ("nodes", "sigma", "u"):
        np.testing.assert_array_equal(getattr(back, name), getattr(snap, name))
    assert (back.t, back.V, back.kf, back.zf, back.step) == (snap.t, snap.V, snap.kf, snap.zf, snap.step)


def test_diagnostics_round_trip(tmp_path):
    from chargedrop.diagnostics import DiagnosticsRecord

    recs = [DiagnosticsRecord(*(np.random.default_rng(k).random(9) + 0.1)) for k in range(5)]
    io.write_diagnostics(tmp_path / "d.csv", recs)
    assert io.read_diagnostics(tmp_path / "d.csv") == recs


def test_curve_csv_round_trip(tmp_path):
    c = make_perturbed_sphere(1.0, 0.07, 2, 33)
    io.write_curve_csv(tmp_path / "c.csv", c)
    with open(tmp_path / "c.csv", encoding="utf-8") as fh:
        assert fh.readline().strip() == "theta_index,r,z"
    np.testing.assert_array_equal(io.read_curve_csv(tmp_path / "c.csv").nodes, c.nodes)


def synthetic_csv(path, n=50):
    t = np.linspace(0.5, 0.99, n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "v_f", "k_f"])
        for ti in t:
            ti = float(ti)
            w.writerow([repr(ti), repr(3.0 * (1.0 - ti) ** -0.5), repr((1.0 - ti) ** -0.5)])
    return path


def test_fit_command_on_synthetic_series(tmp_path, capsys):
    path = synthetic_csv(tmp_path / "s.csv")
    assert cli.main(["fit", str(path), "v_f", "--out", str(tmp_path / "fit.json")]) == 0
    report = json.loads((tmp_path / "fit.json").read_text())
    assert report["alpha"] == pytest.approx(-0.5, abs=1e-6)
    assert report["t0"] == pytest.approx(1.0, abs=1e-6)
    assert {"alpha", "t0", "C", "residual"} <= set(report)


def test_fit_command_window_options(tmp_path):
    path = synthetic_csv(tmp_path / "s.csv")
    late = cli.fit_column(path, "v_f", t_start=0.9)
    assert late["rows"] < 50 and late["t_first"] >= 0.9
    decade = cli.fit_column(path, "v_f", decade=True)
    assert decade["alpha"] == pytest.approx(-0.5, abs=1e-6)


def test_fit_command_too_few_rows(tmp_path, capsys):
    path = synthetic_csv(tmp_path / "s.csv")
    assert cli.main(["fit", str(path), "v_f", "--t-start", "0.985"]) != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FitFailureError" and err["rows"] < 8


def test_collapse_command_on_identical_snapshots(tmp_path, capsys):
    d = tmp_path / "snapshots"
    d.mkdir()
    c = make_perturbed_sphere(1.0, 0.1, 2, 64)
    snap = Snapshot(0, 0.0, c.nodes, np.ones(64), np.zeros((64, 2)), 1.0, 1.2, c.nodes[0, 1])
    io.write_snapshot(d / "0000.json", snap)
    io.write_snapshot(d / "0001.json", snap)
    assert cli.main(["collapse", str(tmp_path), "--last", "2"]) == 0
    report = json.loads((tmp_path / "collapse.json").read_text())
    assert report["collapse_score"] == 0.0
    cols = io.read_csv_columns(tmp_path / "collapse.csv")
    assert len(cols["R"]) == 2 * 65


def test_collapse_needs_two_snapshots(tmp_path):
    (tmp_path / "snapshots").mkdir()
    assert cli.main(["collapse", str(tmp_path)]) != 0


def rounded_cone_drop(deg=25.0, rho=0.02, n=4000):
    """Unit sphere capped by a tangent cone whose apex is rounded with radius ``rho``."""
    th = math.radians(deg)
    H = 1.0 / math.sin(th)
    zc = H - rho / math.sin(th)
    a_cap = np.linspace(0.0, math.pi / 2 - th, n // 4)
    cap = np.column_stack([rho * np.sin(a_cap), zc + rho * np.cos(a_cap)])
    foot = np.array([math.cos(th), math.sin(th)])  # tangent point on the unit sphere
    flank = cap[-1] + np.linspace(0.0, 1.0, n // 4)[1:, None] * (foot - cap[-1])
    a_body = np.linspace(math.pi / 2 - th, math.pi, n // 2)[1:]
    body = np.column_stack([np.sin(a_body), np.cos(a_body)])
    nodes = np.vstack([cap, flank, body])
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return nodes


def test_classify_tip():
    start = make_perturbed_sphere(1.0, 0.1, 2, 64).nodes
    assert cli.classify_tip(start, start) == cli.NO_CONE
    cone = rounded_cone_drop()
    assert cli.singularity_at_pole(cone)
    assert cli.classify_tip(start, cone) == pytest.approx(25.0, abs=0.05)


def test_neck_is_not_a_cone():
    # a narrow waist just below the upper pole carries the largest curvature
    th = np.linspace(0.0, np.pi, 401)
    rad = 1.0 - 0.9 * np.exp(-(((th - 0.3) / 0.08) ** 2))
    neck = np.column_stack([rad * np.sin(th), rad * np.cos(th)])
    neck[0, 0] = neck[-1, 0] = 0.0
    assert not cli.singularity_at_pole(neck)
    assert cli.singularity_at_pole(make_perturbed_sphere(1.0, 0.1, 2, 64).nodes)


def test_pinch_off_after_sharpening_is_not_a_cone(monkeypatch):
    start = make_perturbed_sphere(1.0, 0.1, 2, 64).nodes
    monkeypatch.setattr(cli, "pole_curvature", lambda nodes: 1.0 if nodes is start else 20.0)
    monkeypatch.setattr(cli, "singularity_at_pole", lambda nodes: False)
    assert cli.classify_tip(start, start.copy()) == cli.NO_CONE


def test_sweep_configs_scale_horizon():
    base = io.build_config({"Q_factor": "1", "t_max": "100", "N": "32", "output_dir": "sw"})
    cfgs = cli.sweep_configs(base, [0.1, 1.0, 100.0])
    assert [c.sim.t_max for c in cfgs] == pytest.approx([55.0, 100.0, 5050.0])
    assert [c.params.viscosity_ratio for c in cfgs] == pytest.approx([0.1, 1.0, 100.0])
    assert all(c.params.Q == pytest.approx(critical_charge(FluidParams())) for c in cfgs)
    with pytest.raises(InvalidParameterError):
        cli.sweep_configs(base, [0.0])


def test_sweep_command_writes_csv(tmp_path, monkeypatch):
    monkeypatch.delenv(io.OUTPUT_DIR_ENV, raising=False)
    cfg = write(tmp_path / "s.cfg", f"Q_factor = 1\nN = 24\nt_max = 0.5\noutput_dir = {tmp_path / 'sw'}\n")
    assert cli.main(["sweep", str(cfg), "--lambdas", "0.5,2"]) == 0
    rows = cli.read_sweep(tmp_path / "sw" / "sweep.csv")
    assert [r[0] for r in rows] == [0.5, 2.0]
    assert all(r[1] == cli.NO_CONE and r[2] == "t-max" for r in rows)
    with open(tmp_path / "sw" / "sweep.csv", encoding="utf-8") as fh:
        assert fh.readline().strip() == "lambda,semiangle_deg,stop_reason"
