"""Experiment runners behind ``lab run``.

Every runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport` whose checks cite the tolerance they were judged by.
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ExperimentConfig
from .conformal import MapError, ZipperMap, compute_welding, fit_map, quasisymmetry_constant
from .curve import CurveError, CurveSample, chord_arc_constant, curve_from_spec, make_named_curve
from .kernels import worker_count
from .regularity import (
    RESOLUTION_FACTOR,
    dual_regularity,
    lemma_sin_slack,
    rank_concordance,
    regularity_report,
    rescale_to_2pi,
)
from .report import Check, ExperimentReport, check_ge
from .seminorms import (
    FOUR_PI2,
    Pole,
    Quadrature,
    ResolutionError,
    besov_power,
    circle_pullback_power,
    exterior_power,
    interior_power,
    parse_function,
    pole_image_energy,
)

REAL_KINDS = ("cos", "sin", "trig", "const")
SIN_LOWER = 4.0 / math.pi ** 2


class ExperimentError(ValueError):
    pass


@lru_cache(maxsize=1)
def regression_table() -> dict:
    """Pilot-fixed reference values shipped with the package."""
    text = resources.files("curvelab").joinpath("data/regression.yaml").read_text()
    return yaml.safe_load(text)


# --------------------------------------------------------------------------
# shared helpers


def curve_label(spec: dict) -> str:
    if "name" in spec:
        return str(spec["name"])
    params = {k: v for k, v in spec.items() if k not in ("family", "n_samples", "params", "name", "points", "group")}
    params.update(spec.get("params", {}))
    inner = ",".join(f"{k}={v}" for k, v in params.items() if k != "vertices")
    return f"{spec['family']}({inner})"


def build_curve(spec: dict, n_samples: int) -> CurveSample:
    """Curve from a config entry; parameters may be flat or under ``params``."""
    spec = dict(spec)
    if spec["family"] == "polyline":
        return curve_from_spec(spec)
    params = dict(spec.pop("params", {}) or {})
    n = int(spec.pop("n_samples", n_samples))
    family = spec.pop("family")
    spec.pop("name", None)
    spec.pop("group", None)
    params.update(spec)
    return make_named_curve(family, n, **params)


def quadrature_of(cfg: ExperimentConfig) -> Quadrature:
    q = cfg.quadrature
    return Quadrature(n_trunc=q.n_trunc, radial_order=q.radial_order, angular_order=q.angular_order)


def _curve_key(curve: CurveSample, side: str) -> str:
    h = hashlib.sha256(curve.points.tobytes())
    h.update(side.encode())
    return h.hexdigest()[:20]


def fit_cached(curve: CurveSample, side: str, engine: str = "auto", cache_dir=None):
    """``fit_map`` with an optional on-disk cache for numeric maps."""
    if cache_dir is None:
        return fit_map(curve, side, engine)
    path = Path(cache_dir) / f"map-{_curve_key(curve, side)}.json"
    if path.exists():
        with open(path) as fh:
            shift = complex(*json.load(fh)["shift"])
        fitted = curve if side == "interior" else curve.reflected(shift)
        return ZipperMap.load(path, fitted, source=curve)
    m = fit_map(curve, side, engine)
    if isinstance(m, ZipperMap):
        path.parent.mkdir(parents=True, exist_ok=True)
        m.save(path)
    return m


def parallel_rows(fn, items, workers=None) -> list:
    """Run independent row jobs; results keep the input order."""
    nw = worker_count(workers)
    if nw == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=nw) as pool:
        return list(pool.map(fn, items))


def nondecreasing_slack(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.min(np.diff(v))) if v.size > 1 else 0.0


def _fn_kind(spec: str) -> str:
    return spec.partition(":")[0]


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else abs(a)


# --------------------------------------------------------------------------
# Douglas formula on the circle


def douglas_expected(spec: str) -> float | None:
    kind, _, arg = spec.partition(":")
    if kind in ("cos", "sin"):
        return math.sqrt(int(arg or 1) / 2.0)
    if kind == "const":
        return 0.0
    return None


def run_douglas(cfg: ExperimentConfig) -> ExperimentReport:
    tol = cfg.tolerances["douglas_rel"]
    if any(p != 2 for p in cfg.p):
        raise ExperimentError("the Douglas comparison is only defined for p = 2")
    bad = [f for f in cfg.functions if _fn_kind(f) not in REAL_KINDS]
    if bad:
        raise ExperimentError(f"Douglas equality needs real test functions, got {bad}")
    quad = quadrature_of(cfg)
    report = ExperimentReport("douglas")
    for spec in cfg.curves:
        if spec["family"] != "circle":
            raise ExperimentError(f"Douglas equality is only claimed on circles, got {spec['family']!r}")
        curve = build_curve(spec, cfg.quadrature.n_samples)
        mi = fit_cached(curve, "interior", cfg.engine, cfg.map_cache)
        me = fit_cached(curve, "exterior_reflected", cfg.engine, cfg.map_cache)

        def row(fspec):
            u = parse_function(fspec, cfg.seed)
            vals = [besov_power(curve, u, 2, workers=1) ** 0.5, interior_power(curve, mi, u, 2, quad) ** 0.5,
                    exterior_power(curve, me, u, 2, quad) ** 0.5]
            top = max(vals)
            dev = (top - min(vals)) / top if top > 0 else 0.0
            return {"curve": curve_label(spec), "function": fspec, "besov": vals[0], "interior": vals[1],
                    "exterior": vals[2], "expected": douglas_expected(fspec), "max_pairwise_rel": dev}

        for r in parallel_rows(row, list(cfg.functions)):
            report.rows.append(r)
            exp = r["expected"]
            vals = (r["besov"], r["interior"], r["exterior"])
            if exp == 0.0:
                worst = max(vals)
                report.checks.append(check_ge(f"douglas {r['curve']} {r['function']}", "seminorms of a constant = 0",
                                              1e-12 - worst, 0.0, f"max={worst:.3g}"))
            elif exp is not None:
                err = max(_rel(v, exp) for v in vals)
                report.checks.append(check_ge(f"douglas {r['curve']} {r['function']}",
                                              f"|value - {exp:.6g}|/{exp:.6g} <= {tol:g}", tol - err, 0.0,
                                              f"worst rel err {err:.3g}"))
            else:
                report.checks.append(check_ge(f"douglas {r['curve']} {r['function']}",
                                              f"pairwise rel deviation <= {tol:g}", tol - r["max_pairwise_rel"], 0.0))
    report.series["douglas_interior"] = {
        "x_label": "n", "y_label": "interior^2",
        "x": [i for i, _ in enumerate(report.rows)], "y": [r["interior"] ** 2 for r in report.rows]}
    return report


# --------------------------------------------------------------------------
# equivalence on chord-arc curves


def check_chord_arc_family(spec: dict) -> None:
    fam = spec["family"]
    params = {**spec, **spec.get("params", {})}
    if fam in ("circle", "square", "polygon", "polyline"):
        return
    if fam == "polynomial" and float(params.get("c", 0)) <= 0.35:
        return
    if fam == "koch" and int(params.get("level", 1)) <= 2:
        return
    raise ExperimentError(f"{curve_label(spec)} is outside the chord-arc corpus of this experiment")


def run_equivalence(cfg: ExperimentConfig) -> ExperimentReport:
    tol = cfg.tolerances
    quad = quadrature_of(cfg)
    report = ExperimentReport("equivalence")
    ks, worst = [], {p: [] for p in cfg.p}
    for spec in cfg.curves:
        check_chord_arc_family(spec)
        label = curve_label(spec)
        try:
            curve = build_curve(spec, cfg.quadrature.n_samples)
            K = chord_arc_constant(curve)
            mi = fit_cached(curve, "interior", cfg.engine, cfg.map_cache)
            me = fit_cached(curve, "exterior_reflected", cfg.engine, cfg.map_cache)
        except (CurveError, MapError) as e:
            report.rows.append({"curve": label, "error": str(e)})
            report.checks.append(Check(f"equivalence {label}", "curve and maps build", float("nan"), 0.0, False, str(e)))
            continue
        ks.append(K)
        jobs = [(p, f) for p in cfg.p for f in cfg.functions]

        def one(job):
            p, fspec = job
            u = parse_function(fspec, cfg.seed)
            b = besov_power(curve, u, p, workers=1)
            i = interior_power(curve, mi, u, p, quad)
            e = exterior_power(curve, me, u, p, quad)
            s = circle_pullback_power(curve, u, p, workers=1)
            return p, fspec, b, i, e, s

        results = parallel_rows(one, jobs)
        for p in cfg.p:
            rs = [r for r in results if r[0] == p and r[3] > 0 and r[2] > 0]
            bi = [(r[2] / r[3]) ** (1 / p) for r in rs]
            ei = [(r[4] / r[3]) ** (1 / p) for r in rs]
            sw = [r[2] / r[5] for r in rs]
            row = {"curve": label, "p": p, "K_hat": K, "n_functions": len(rs),
                   "ratio_bi_min": min(bi), "ratio_bi_max": max(bi),
                   "ratio_ei_min": min(ei), "ratio_ei_max": max(ei),
                   "sandwich_min": min(sw), "sandwich_max": max(sw),
                   "bracket": max(max(bi), 1 / min(bi), max(ei), 1 / min(ei))}
            report.rows.append(row)
            worst[p].append(row["ratio_bi_max"])
            name = f"equivalence {label} p={p:g}"
            report.checks.append(check_ge(name + " bracket", f"max(ratio, 1/ratio) <= {tol['bracket_max']:g}",
                                          tol["bracket_max"] - row["bracket"]))
            lo_slack = row["sandwich_min"] - SIN_LOWER
            report.checks.append(check_ge(name + " sandwich low", "besov^p / pullback^p >= 4/pi^2",
                                          lo_slack, tol["sandwich_rel"] * SIN_LOWER))
            report.checks.append(check_ge(name + " sandwich high", "besov^p / pullback^p <= K_hat^2",
                                          K * K - row["sandwich_max"], tol["sandwich_rel"] * K * K))
            real = [r for r in rs if _fn_kind(r[1]) in REAL_KINDS]
            if spec["family"] == "circle" and p == 2 and real:
                # equality on the circle is a statement about real traces
                lo, hi = tol["circle_ratio_low"], tol["circle_ratio_high"]
                rb = [(r[2] / r[3]) ** 0.5 for r in real]
                re_ = [(r[4] / r[3]) ** 0.5 for r in real]
                s = min(min(rb) - lo, hi - max(rb), min(re_) - lo, hi - max(re_))
                report.checks.append(check_ge(name + " circle ratios", f"real-trace ratios in [{lo:g}, {hi:g}]", s))
    for p in cfg.p:
        report.series[f"ratio_vs_K_p{p:g}"] = {"x_label": "K_hat", "y_label": "worst besov/interior",
                                               "x": ks, "y": worst[p]}
    brackets = [r["bracket"] for r in report.rows if "bracket" in r]
    report.summary["bracket"] = max(brackets) if brackets else None
    return report


# --------------------------------------------------------------------------
# necessity: poles u_w = 1/(z - w)


def necessity_probes(curve: CurveSample, probes: list, top: int, min_distance: float):
    """Exterior probes with ``min_distance <= d < diam/4``: the overall ``top``
    dual products plus the best product in each half-octave distance band."""
    adm = [q for q in probes if q.side == "exterior" and min_distance <= q.d < curve.diameter / 4]
    adm.sort(key=lambda q: -q.product)
    chosen = adm[:top]
    band = lambda q: int(math.floor(2.0 * math.log2(q.d / curve.diameter)))  # noqa: E731
    seen = {band(q) for q in chosen}
    for q in adm:
        key = band(q)
        if key not in seen:
            seen.add(key)
            chosen.append(q)
    return chosen


def upper_bound(p: float, d: float) -> float:
    """``4^(p-2)/p * d^-p``."""
    return 4.0 ** (p - 2) / p * d ** -p


def lower_bound(p: float, d: float, image_length: float) -> float:
    """``(1/4pi^2) 8^(1-p) length(G') d^(1-p)``."""
    return 8.0 ** (1 - p) * image_length * d ** (1 - p) / FOUR_PI2


def pole_row(curve, mi, quad, w: complex, d: float, p: float) -> dict:
    u = Pole(w)
    b = besov_power(curve, u, p, workers=1)
    energy, image_length = pole_image_energy(curve, w, p, workers=1)
    i = interior_power(curve, mi, u, p, quad)
    return {"w": w, "d": d, "p": p, "besov_p": b, "interior_p": i, "image_energy": energy,
            "image_length": image_length, "identity_rel": _rel(FOUR_PI2 * b, energy),
            "upper": upper_bound(p, d), "lower": lower_bound(p, d, image_length),
            "ratio": (b / i) ** (1 / p) if i > 0 else None}


def family_key(spec: dict) -> str:
    return str(spec.get("group", spec["family"]))


def run_necessity(cfg: ExperimentConfig) -> ExperimentReport:
    tol = cfg.tolerances
    quad = quadrature_of(cfg)
    report = ExperimentReport("necessity")
    trend = {}
    for spec in cfg.curves:
        label = curve_label(spec)
        curve = build_curve(spec, cfg.quadrature.n_samples)
        K = chord_arc_constant(curve)
        C, cprobe, probes = dual_regularity(curve, k_max=cfg.probes.k_max, grid_size=cfg.probes.grid_size)
        mi = fit_cached(curve, "interior", cfg.engine, cfg.map_cache)
        floor = RESOLUTION_FACTOR * curve.max_segment
        bound_probes = necessity_probes(curve, probes, cfg.probes.top, floor)
        resolved = cfg.probes.resolved_factor * curve.max_segment
        ratio_probes = necessity_probes(curve, probes, cfg.probes.top, resolved)[: cfg.probes.top]
        jobs = [(q, p, "bounds") for p in cfg.p for q in bound_probes]
        jobs += [(q, p, "resolved") for p in cfg.p for q in ratio_probes]

        def one(job):
            q, p, role = job
            try:
                r = pole_row(curve, mi, quad, q.w, q.d, p)
            except ResolutionError as e:
                return {"curve": label, "w": q.w, "p": p, "role": role, "skipped": str(e)}
            r.update(curve=label, role=role)
            return r

        rows = parallel_rows(one, jobs)
        for r in rows:
            report.rows.append(r)
            if "skipped" in r:
                continue
            name = f"necessity {label} p={r['p']:g} w={r['w']:.4g} d={r['d']:.3g}"
            if r["role"] == "resolved":
                report.checks.append(check_ge(name + " identity", f"|4pi^2 besov^p - image energy|/energy <= {tol['identity_rel']:g}",
                                              tol["identity_rel"] - r["identity_rel"]))
            else:
                report.checks.append(check_ge(name + " upper", "4^(p-2)/p d^-p - interior^p >= 0",
                                              r["upper"] - r["interior_p"], tol["bound_rel"] * r["upper"]))
                report.checks.append(check_ge(name + " lower", "besov^p - 8^(1-p) length(G') d^(1-p)/4pi^2 >= 0",
                                              r["besov_p"] - r["lower"], tol["bound_rel"] * r["lower"]))
        worst = {}
        for p in cfg.p:
            ratios = [r["ratio"] for r in rows if r.get("role") == "resolved" and r["p"] == p and r.get("ratio")]
            for fspec in cfg.functions:
                u = parse_function(fspec, cfg.seed)
                i = interior_power(curve, mi, u, p, quad)
                if i > 0:
                    ratios.append((besov_power(curve, u, p) / i) ** (1 / p))
            worst[p] = max(ratios) if ratios else float("nan")
        # welding quasisymmetry, reported alongside (not checked)
        try:
            me = fit_cached(curve, "exterior_reflected", cfg.engine, cfg.map_cache)
            qs = quasisymmetry_constant(compute_welding(mi, me))
        except MapError:
            qs = float("nan")
        summary = {"curve": label, "family": family_key(spec), "K_hat": K, "C_hat": C, "C_probe": cprobe.w,
                   "welding_qs": qs,
                   **{f"worst_ratio_p{p:g}": worst[p] for p in cfg.p}}
        trend.setdefault(family_key(spec), []).append(summary)
    report.summary["trend"] = [s for group in trend.values() for s in group]
    thresholds = regression_table().get("necessity", {}).get("C_ratio_threshold", {})
    for fam, group in trend.items():
        if len(group) < 2:
            continue
        cols = ["K_hat", "C_hat"] + [f"worst_ratio_p{p:g}" for p in cfg.p]
        for col in cols:
            vals = [g[col] for g in group]
            report.checks.append(check_ge(f"trend {fam} {col}", f"{col} nondecreasing along {fam}",
                                          nondecreasing_slack(vals), 0.0, "values " + ", ".join(f"{v:.6g}" for v in vals)))
            report.series[f"{fam}_{col}_vs_K"] = {"x_label": "K_hat", "y_label": col,
                                                 "x": [g["K_hat"] for g in group], "y": vals}
        if fam in thresholds:
            ratio = group[-1]["C_hat"] / group[0]["C_hat"]
            report.checks.append(check_ge(f"trend {fam} C_hat growth", f"C_hat last/first >= {thresholds[fam]:g}",
                                          ratio - thresholds[fam], 0.0, f"ratio {ratio:.6g}"))
    return report


# --------------------------------------------------------------------------
# regularity sweep


def run_regularity_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    report = ExperimentReport("regularity_sweep")

    def one(spec):
        label = curve_label(spec)
        try:
            curve = build_curve(spec, cfg.quadrature.n_samples)
            return regularity_report(curve, label, grid_size=cfg.probes.grid_size, workers=1).row()
        except (CurveError, ValueError) as e:
            return {"curve": label, "error": str(e)}

    report.rows = parallel_rows(one, list(cfg.curves))
    ok = [r for r in report.rows if "error" not in r]
    for r in report.rows:
        if "error" in r:
            report.checks.append(Check(f"regularity {r['curve']}", "row computed", float("nan"), 0.0, False, r["error"]))
    if len(ok) >= 2:
        rho = rank_concordance([r["M_hat"] for r in ok], [r["C_hat"] for r in ok])
        report.summary["rank_concordance"] = rho
        if len(ok) >= 6:
            m = cfg.tolerances["concordance_min"]
            report.checks.append(check_ge("regularity rank concordance", f"spearman(M_hat, C_hat) >= {m:g}", rho - m))
    report.series["M_vs_C"] = {"x_label": "M_hat", "y_label": "C_hat",
                               "x": [r["M_hat"] for r in ok], "y": [r["C_hat"] for r in ok]}
    report.series["C_vs_K"] = {"x_label": "K_hat", "y_label": "C_hat",
                               "x": [r["K_hat"] for r in ok], "y": [r["C_hat"] for r in ok]}
    return report


# --------------------------------------------------------------------------
# self test


def run_selftest(cfg: ExperimentConfig | None = None) -> ExperimentReport:
    """Fast oracle battery: Douglas values, geometry constants, sine bounds."""
    report = ExperimentReport("selftest")
    circle = make_named_curve("circle", 512)
    square = make_named_curve("square", 512, side=1.0)
    quad = Quadrature(n_trunc=64, radial_order=48, angular_order=256)
    mi = fit_map(circle, "interior")
    me = fit_map(circle, "exterior_reflected")
    for n in (1, 4):
        u = parse_function(f"cos:{n}")
        exp = math.sqrt(n / 2)
        vals = [besov_power(circle, u, 2) ** 0.5, interior_power(circle, mi, u, 2, quad) ** 0.5,
                exterior_power(circle, me, u, 2, quad) ** 0.5]
        err = max(_rel(v, exp) for v in vals)
        report.rows.append({"check": f"douglas cos:{n}", "values": vals, "expected": exp})
        report.checks.append(check_ge(f"douglas cos:{n}", "rel err <= 2e-3", 2e-3 - err))
    k_circle = chord_arc_constant(circle)
    k_square = chord_arc_constant(square)
    report.checks.append(check_ge("chord-arc circle", "|K - pi/2| <= 1e-3", 1e-3 - abs(k_circle - math.pi / 2)))
    report.checks.append(check_ge("chord-arc square", "|K - 2| <= 1e-3", 1e-3 - abs(k_square - 2)))
    C, probe, _ = dual_regularity(circle, grid_size=17)
    report.checks.append(check_ge("dual circle", "|C - 2pi|/2pi <= 1e-2", 1e-2 - _rel(C, 2 * math.pi),
                                  detail=f"argmax {probe.w:.3g}"))
    for name, c, K in (("circle", circle, k_circle), ("square", square, k_square)):
        s1, s2 = lemma_sin_slack(rescale_to_2pi(c), K * (1 + 1e-6))
        report.checks.append(check_ge(f"sine upper {name}", "pi|sin| - chord >= 0", s1, 1e-9))
        report.checks.append(check_ge(f"sine lower {name}", "chord - (2/K)|sin| >= 0", s2, 1e-9))
    b = besov_power(circle, Pole(0.0), 2)
    energy, _ = pole_image_energy(circle, 0.0, 2)
    report.checks.append(check_ge("image identity circle w=0", "rel <= 1e-3", 1e-3 - _rel(FOUR_PI2 * b, energy)))
    return report


RUNNERS = {
    "douglas": run_douglas,
    "equivalence": run_equivalence,
    "necessity": run_necessity,
    "regularity_sweep": run_regularity_sweep,
    "selftest": run_selftest,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    report = RUNNERS[cfg.experiment](cfg)
    report.provenance = {
        "package": "curvelab", "version": __version__,
        "python": platform.python_version(), "numpy": np.__version__,
        "config": cfg.to_dict(), "workers": worker_count(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    return report
