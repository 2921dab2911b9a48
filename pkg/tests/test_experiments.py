import math

import pytest

from curvelab.config import config_from_dict
from curvelab.experiments import (
    ExperimentError,
    build_curve,
    fit_cached,
    lower_bound,
    nondecreasing_slack,
    run_experiment,
    run_selftest,
    upper_bound,
)

SMALL = {"quadrature": {"n_samples": 256, "n_trunc": 64, "radial_order": 48, "angular_order": 256}}


def cfg(**kw):
    return config_from_dict({**SMALL, **kw})


def test_douglas_minimal_config():
    rep = run_experiment(cfg(experiment="douglas", functions=["cos:2"]))
    assert len(rep.rows) == 1
    assert rep.rows[0]["interior"] == pytest.approx(1.0, rel=1e-9)
    assert rep.passed


def test_douglas_constant_row():
    rep = run_experiment(cfg(experiment="douglas", functions=["const:3"]))
    assert rep.rows[0]["besov"] == 0.0 and rep.passed


def test_douglas_rejects_non_circle():
    with pytest.raises(ExperimentError):
        run_experiment(cfg(experiment="douglas", curves=[{"family": "square"}]))


def test_douglas_rejects_complex_functions():
    with pytest.raises(ExperimentError):
        run_experiment(cfg(experiment="douglas", functions=["exp:1"]))


def test_equivalence_rejects_non_chord_arc_member():
    with pytest.raises(ExperimentError):
        run_experiment(cfg(experiment="equivalence", curves=[{"family": "koch", "level": 3}]))


def test_equivalence_circle_and_square():
    rep = run_experiment(cfg(experiment="equivalence", curves=[{"family": "circle"}, {"family": "square"}],
                             p=[2], functions=["cos:1", "sin:2", "pole:0.3"]))
    assert rep.passed, [c.line() for c in rep.failures()]
    sq = [r for r in rep.rows if r["curve"].startswith("square")][0]
    assert sq["K_hat"] == pytest.approx(2.0, abs=1e-3)
    assert 4 / math.pi ** 2 <= sq["sandwich_min"] <= sq["sandwich_max"] <= 4.0


def test_necessity_rows_and_checks():
    rep = run_experiment(cfg(experiment="necessity", curves=[{"family": "circle"}, {"family": "polynomial", "c": 0.3}],
                             p=[2], functions=["cos:1"], probes={"top": 2, "resolved_factor": 8.0}))
    names = {c.name.split()[-1] for c in rep.checks}
    assert {"identity", "upper", "lower"} <= names
    assert all(c.passed for c in rep.checks if c.name.endswith(("upper", "lower")))
    assert len(rep.summary["trend"]) == 2


def test_regularity_sweep_small():
    rep = run_experiment(cfg(experiment="regularity_sweep",
                             curves=[{"family": "circle"}, {"family": "koch", "level": 1}]))
    assert [r["curve"] for r in rep.rows] == ["circle()", "koch(level=1)"]
    assert rep.series["M_vs_C"]["x"][0] == pytest.approx(2 * math.pi, rel=1e-3)


def test_report_determinism():
    c = cfg(experiment="douglas", functions=["cos:1", "trig:3"])
    assert run_experiment(c).body() == run_experiment(c).body()


def test_selftest_passes():
    assert run_selftest().passed


def test_bounds_helpers():
    assert upper_bound(2, 0.5) == pytest.approx(2.0)
    assert upper_bound(3, 1.0) == pytest.approx(4 / 3)
    assert lower_bound(2, 1.0, 2 * math.pi) == pytest.approx(2 * math.pi / 8 / (4 * math.pi ** 2))
    assert nondecreasing_slack([1, 2, 2, 3]) == 0.0
    assert nondecreasing_slack([1, 0.5]) == -0.5


def test_build_curve_flat_and_nested():
    a = build_curve({"family": "polynomial", "c": 0.2}, 128)
    b = build_curve({"family": "polynomial", "params": {"c": 0.2}, "n_samples": 128}, 1024)
    assert (a.points == b.points).all()


def test_map_cache_roundtrip(tmp_path):
    curve = build_curve({"family": "koch", "level": 1}, 256)
    m1 = fit_cached(curve, "exterior_reflected", "auto", tmp_path)
    m2 = fit_cached(curve, "exterior_reflected", "auto", tmp_path)
    assert len(list(tmp_path.glob("map-*.json"))) == 1
    assert (m1.angles == m2.angles).all()
    assert m2.source is curve
