import yaml

from curvelab.cli import main, parse_curve_spec


def test_parse_curve_spec(tmp_path):
    assert parse_curve_spec("koch:level=2,n=512") == {"family": "koch", "level": 2, "n_samples": 512}
    p = tmp_path / "c.yaml"
    p.write_text("family: polynomial\nc: 0.2\n")
    assert parse_curve_spec(str(p)) == {"family": "polynomial", "c": 0.2}


def test_selftest_exit_zero(capsys):
    assert main(["selftest"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_curve_info(capsys):
    assert main(["curve", "info", "square:side=1", "--n", "256"]) == 0
    info = yaml.safe_load(capsys.readouterr().out)
    assert abs(info["chord_arc_K_hat"] - 2.0) < 1e-3
    assert abs(info["length"] - 4.0) < 1e-12


def test_seminorm_command(capsys):
    assert main(["seminorm", "circle", "--p", "2", "--fn", "cos:4", "--n", "512"]) == 0
    out = yaml.safe_load(capsys.readouterr().out)
    assert abs(out["interior"] - 2 ** 0.5) < 1e-9
    assert abs(out["besov"] - 2 ** 0.5) < 2e-3


def test_regularity_command(capsys):
    assert main(["regularity", "circle", "--n", "256", "--grid", "9"]) == 0
    assert "C_hat" in capsys.readouterr().out


def test_run_writes_report(tmp_path, capsys):
    cfg = tmp_path / "d.yaml"
    cfg.write_text("experiment: douglas\nfunctions: [cos:1, const:1]\n"
                   "quadrature: {n_samples: 256, n_trunc: 64, radial_order: 32, angular_order: 128}\n")
    out = tmp_path / "rep"
    assert main(["--seed", "4", "run", str(cfg), "--out", str(out)]) == 0
    body = yaml.safe_load((out / "report.yaml").read_text())
    assert body["passed"] and len(body["rows"]) == 2
    assert (out / "rows.csv").exists()


def test_failing_check_exit_one(tmp_path):
    cfg = tmp_path / "d.yaml"
    cfg.write_text("experiment: douglas\nfunctions: [cos:1]\ntolerances: {douglas_rel: 1.0e-12}\n"
                   "quadrature: {n_samples: 256, n_trunc: 64, radial_order: 32, angular_order: 128}\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "rep")]) == 1


def test_bad_config_exit_two(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("experiment: nonsense\n")
    assert main(["run", str(cfg)]) == 2
    assert "bad.yaml:1:1" in capsys.readouterr().err


def test_bad_curve_exit_two(capsys):
    assert main(["curve", "info", "spiral"]) == 2
