"""Exit criteria, one test per criterion, each at its stated tolerance."""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from curvelab.config import config_from_dict, load_config
from curvelab.conformal import compute_welding, eval_derivative, fit_map, fit_numeric_map, quasisymmetry_constant
from curvelab.curve import chord_arc_constant
from curvelab.experiments import regression_table, run_experiment
from curvelab.harmonic import analyze_boundary, eval_harmonic, wirtinger_gradient
from curvelab.regularity import dual_regularity, lemma_sin_slack, rescale_to_2pi
from curvelab.seminorms import (
    Pole,
    besov_power,
    circle_pullback_power,
    interior_power,
    interior_seminorm,
    parse_function,
    pole_image_energy,
)
from conftest import maps, named, record

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

CORPUS = [("circle", {"r": 1.0}), ("square", {"side": 1.0})]
CORPUS += [("polynomial", {"c": c}) for c in (0.0, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49)]
CORPUS += [("koch", {"level": k}) for k in (1, 2, 3, 4)]


@pytest.fixture(scope="module")
def necessity_report():
    return run_experiment(load_config(CONFIGS / "necessity.yaml"))


def test_criterion_1_douglas():
    t0 = time.perf_counter()
    cfg = config_from_dict({"experiment": "douglas", "functions": [f"cos:{n}" for n in range(1, 9)]})
    rep = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for n, row in enumerate(rep.rows, start=1):
        exp = math.sqrt(n / 2)
        worst = max(worst, *(abs(row[k] - exp) / exp for k in ("besov", "interior", "exterior")))
    ok = worst <= 1e-3 and elapsed < 60
    record(1, ok, f"Douglas n=1..8 worst rel err {worst:.2e} (tol 1e-3), {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_2_circle_bracket():
    circle = named("circle", r=1.0)
    mi, _ = maps("circle", r=1.0)
    family = [f"cos:{n}" for n in range(1, 9)] + [f"sin:{n}" for n in (1, 3, 6)]
    family += ["exp:1", "exp:4", "trig:5", "trigc:5", "pole:0", "pole:1.5", "pole:0.3+0.4j", "pole:-2j"]
    ratios = []
    for p in (2, 3, 4):
        for spec in family:
            u = parse_function(spec, seed=11)
            ratios.append((besov_power(circle, u, p) / interior_power(circle, mi, u, p)) ** (1 / p))
    C0 = max(max(ratios), 1 / min(ratios))
    ok = C0 <= 50
    record(2, ok, f"circle ratio bracket [1/{C0:.4f}, {C0:.4f}] over {len(ratios)} cases (C0 <= 50)")
    assert ok


def test_criterion_3_sine_bounds():
    t0 = time.perf_counter()
    worst1, worst2 = np.inf, np.inf
    for fam, kw in CORPUS:
        c = rescale_to_2pi(named(fam, **kw))
        K = chord_arc_constant(c)
        s1, s2 = lemma_sin_slack(c, K * (1 + 1e-6))
        worst1, worst2 = min(worst1, s1), min(worst2, s2)
    elapsed = time.perf_counter() - t0
    ok = worst1 >= -1e-9 and worst2 >= -1e-9 and elapsed < 30
    record(3, ok, f"sine bounds min slack {worst1:.3e} / {worst2:.3e} (>= -1e-9), {elapsed:.1f}s (< 30s)")
    assert ok


def test_criterion_4_geometry():
    kc = chord_arc_constant(named("circle", r=1.0))
    ks = chord_arc_constant(named("square", side=1.0))
    C, probe, _ = dual_regularity(named("circle", r=1.0))
    ok = abs(kc - math.pi / 2) <= 1e-3 and abs(ks - 2) <= 1e-3
    ok = ok and abs(C - 2 * math.pi) <= 0.01 * 2 * math.pi and abs(probe.w) < 1e-9
    record(4, ok, f"K(circle)={kc:.6f} K(square)={ks:.6f} C(circle)={C:.5f} at w={probe.w:.1g}")
    assert ok


def test_criterion_5_image_identity():
    cases = [("circle", {"r": 1.0}, [0.0, 1.5]),
             ("polynomial", {"c": 0.3}, [0.0, 0.2 + 0.3j, 1.6, 0.5 + 1.4j])]
    worst = 0.0
    for fam, kw, ws in cases:
        c = named(fam, **kw)
        for w in ws:
            for p in (2, 3):
                energy, _ = pole_image_energy(c, w, p)
                worst = max(worst, abs(4 * math.pi ** 2 * besov_power(c, Pole(w), p) - energy) / energy)
    ok = worst <= 1e-3
    record(5, ok, f"image identity worst rel err {worst:.2e} (tol 1e-3)")
    assert ok


def test_criterion_6_bounds(necessity_report):
    checks = [c for c in necessity_report.checks if c.name.endswith((" upper", " lower"))]
    bad = [c for c in checks if not c.passed]
    worst = min(c.slack / max(c.tolerance / 1e-9, 1e-300) for c in checks)
    ok = not bad and len(checks) > 0
    record(6, ok, f"{len(checks)} bound checks over admissible probes, {len(bad)} failing, "
                  f"min relative slack {worst:.3g}")
    assert ok, [c.line() for c in bad]


def test_criterion_7_trend(necessity_report):
    trend = [c for c in necessity_report.checks if c.name.startswith("trend")]
    bad = [c for c in trend if not c.passed]
    thresholds = regression_table()["necessity"]["C_ratio_threshold"]
    detail = "; ".join(c.line() for c in bad) if bad else f"{len(trend)} trend checks, thresholds {thresholds}"
    record(7, not bad, detail)
    assert not bad, [c.line() for c in bad]


def test_criterion_8_numeric_engine():
    worst_b, worst_d = 0.0, 0.0
    r = np.linspace(0, 0.9, 10)[:, None] * np.exp(2j * np.pi * np.arange(16) / 16)[None, :]
    theta = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    for fam, kw in (("circle", {"r": 1.0}), ("polynomial", {"c": 0.2}), ("polynomial", {"c": 0.3})):
        c = named(fam, **kw)
        exact = fit_map(c, "interior", "closed_form")
        num = fit_numeric_map(c, anchor=0.0)
        worst_b = max(worst_b, np.abs(num.boundary(theta)[0] - exact.boundary(theta)[0]).max())
        worst_d = max(worst_d, np.abs(eval_derivative(num, r) / eval_derivative(exact, r) - 1).max())
    circle = named("circle", r=1.0)
    h = compute_welding(fit_numeric_map(circle), fit_numeric_map(circle, "exterior_reflected"))
    qs = quasisymmetry_constant(h)
    rotation = np.ptp(h.y - h.x)
    ok = worst_b <= 1e-2 and worst_d <= 5e-2 and qs <= 1 + 1e-2
    record(8, ok, f"boundary dev {worst_b:.2e} (<= 1e-2), phi' rel dev {worst_d:.2e} (<= 5e-2), "
                  f"circle welding C={qs:.8f}, rotation spread {rotation:.1e}")
    assert ok


def test_criterion_9_invariants():
    errs = {}
    c = named("koch", 512, level=2)
    moved = c.transformed(2.5 * np.exp(0.7j), 3 - 1j)
    u = parse_function("cos:3")
    errs["besov"] = abs(besov_power(moved, u, 3) / besov_power(c, u, 3) - 1)
    errs["K"] = abs(chord_arc_constant(moved) / chord_arc_constant(c) - 1)
    errs["C"] = abs(dual_regularity(moved)[0] / dual_regularity(c)[0] - 1)
    p03 = named("polynomial", c=0.3)
    mi, _ = maps("polynomial", c=0.3)
    v = parse_function("trigc:5", seed=5)
    k = 3.7 - 2.1j
    b1, b2 = besov_power(p03, v, 3), besov_power(p03, v.scaled(k), 3)
    errs["homogeneity"] = abs(b2 / (abs(k) ** 3 * b1) - 1)
    ref = interior_seminorm(p03, mi, v, 2)
    errs["conformal"] = abs(interior_seminorm(p03, mi.precompose(0.35 - 0.2j, 1.1), v, 2) / ref - 1)
    th = 2 * np.pi * np.arange(512) / 512
    U = analyze_boundary(np.cos(2 * th) + 0.5j * np.sin(3 * th) + np.cos(th), 32)
    z = np.array([0.3 + 0.2j, -0.5j, 0.7])
    uw, uwb = wirtinger_gradient(U, z)
    hstep = 1e-5
    ux = (eval_harmonic(U, z + hstep) - eval_harmonic(U, z - hstep)) / (2 * hstep)
    uy = (eval_harmonic(U, z + 1j * hstep) - eval_harmonic(U, z - 1j * hstep)) / (2 * hstep)
    errs["wirtinger"] = max(np.abs(uw - (ux - 1j * uy) / 2).max() / np.abs(uw).max(),
                            np.abs(uwb - (ux + 1j * uy) / 2).max() / np.abs(uwb).max())
    ok = (errs["besov"] <= 1e-10 and errs["K"] <= 1e-10 and errs["C"] <= 1e-10
          and errs["homogeneity"] <= 1e-12 and errs["conformal"] <= 1e-3 and errs["wirtinger"] <= 1e-8)
    record(9, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))
    assert ok


def test_criterion_10_universal_lower_bound():
    worst = np.inf
    fns = ["cos:1", "sin:3", "trig:6", "pole:0.05+0.02j"]
    for fam, kw in CORPUS:
        c = rescale_to_2pi(named(fam, **kw))
        for spec in fns:
            u = parse_function(spec, seed=1)
            if spec.startswith("pole"):
                u = Pole(c.points.mean() + complex(u.w))
            for p in (2, 3):
                worst = min(worst, besov_power(c, u, p) - 4 / math.pi ** 2 * circle_pullback_power(c, u, p))
    ok = worst >= -1e-6
    record(10, ok, f"besov^p - (4/pi^2) pullback^p min slack {worst:.3e} (>= -1e-6)")
    assert ok
