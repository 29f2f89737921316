"""Command line front end: ``sinrmodel {analyze,simulate,compare,area}``.

Each run writes plot-ready CSV files plus ``manifest.json`` into ``--out``.
The manifest holds the fully resolved scenario and can be passed back via
``--config`` to reproduce the run.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import config as cfg
from . import griddist as gd
from . import model as m
from . import montecarlo as mc

log = logging.getLogger("sinrmodel")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST = "manifest.json"
REPORT_LEVELS = (0.5, 0.05, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj, sort_keys=True):
    return json.dumps(obj, indent=2, sort_keys=sort_keys, allow_nan=True) + "\n"


def _fmt(x):
    return f"{x:.12g}"


def _safe_name(name):
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def distribution_csv(dist):
    """``sinr_db,pdf,cdf`` rows at grid resolution."""
    if isinstance(dist, gd.PointMass):
        # shown as a one-cell hat so the file stays a density
        h = m.GridSpec().step_db
        dist = gd.resample(dist, gd.DbGrid.from_range(dist.location_db - 2 * h, dist.location_db + 2 * h, h))
    if not isinstance(dist, gd.Gridded):
        raise ValueError("nothing to tabulate")
    nodes = dist.grid.nodes
    cdf = np.clip(gd.cdf(dist, nodes), 0.0, 1.0)
    cdf = np.maximum.accumulate(cdf)
    lines = ["sinr_db,pdf,cdf"]
    lines += [f"{x:.4f},{_fmt(p)},{_fmt(c)}" for x, p, c in zip(nodes, dist.density, cdf)]
    return "\n".join(lines) + "\n"


def summarize(result, thresholds):
    out = {
        "median_db": result.median,
        "p5_db": result.quantile(0.05),
        "outage": {f"{t:g}": result.cdf(t) for t in thresholds},
        "quantiles_db": {f"{p:g}": result.quantile(p) for p in REPORT_LEVELS},
        "association": [float(w) for w in result.association],
        "raw_mass": result.raw_mass,
        "skipped_mass": result.skipped_mass,
    }
    if result.ue_position is not None:
        out["position_m"] = list(result.ue_position)
    return out


def _write_manifest(out_dir, scenario, command, extra=None):
    doc = {
        "manifest_version": 1,
        "package_version": __version__,
        "command": command,
        "seed": scenario.sim.rng_seed,
        "scenario": scenario.document,
    }
    if extra:
        doc.update(extra)
    # key order is kept: target order decides row order in the outputs
    atomic_write(os.path.join(out_dir, MANIFEST), _json(doc, sort_keys=False))


def load_scenario(path):
    """Read a scenario file or a manifest written by an earlier run."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return cfg.loads(text)
    if isinstance(doc, dict) and "manifest_version" in doc:
        return cfg.resolve(doc["scenario"])
    return cfg.resolve(doc, text)


def _model_results(sc, workers):
    names = [n for n, _ in sc.targets()]
    pts = [p for _, p in sc.targets()]
    return dict(zip(names, m.evaluate_points(sc.deployment, sc.shadowing, sc.noise, pts, sc.grid, sc.mode, workers)))


def _require_points(sc):
    if not sc.points:
        raise cfg.ConfigError("targets.points", "no evaluation targets given")


def cmd_analyze(sc, out_dir, workers=None):
    _require_points(sc)
    results = _model_results(sc, workers)
    summary = {}
    for name, r in results.items():
        atomic_write(os.path.join(out_dir, f"analyze_{_safe_name(name)}.csv"), distribution_csv(r.dist))
        summary[name] = summarize(r, sc.thresholds_db)
        log.info("analyze %s: median %.2f dB, P(SINR<%g dB) = %.3e", name, r.median,
                 sc.thresholds_db[0] if sc.thresholds_db else float("nan"),
                 r.cdf(sc.thresholds_db[0]) if sc.thresholds_db else float("nan"))
    atomic_write(os.path.join(out_dir, "analyze_summary.json"), _json(summary))
    return results


def _sim_thresholds(sc, emp, step=0.1):
    if sc.sim_thresholds_db is not None:
        return np.unique(np.asarray(sc.sim_thresholds_db, dtype=float))
    lo = math.floor(emp.samples[0] / step) * step
    hi = math.ceil(emp.samples[-1] / step) * step
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("samples are not finite")
    return np.round(lo + step * np.arange(int(round((hi - lo) / step)) + 1), 10)


def empirical_csv(emp, thresholds):
    lines = ["sinr_db_threshold,empirical_cdf,ci_low,ci_high"]
    for x, c, lo, hi in emp.table(thresholds):
        lines.append(f"{x:.4f},{_fmt(c)},{_fmt(lo)},{_fmt(hi)}")
    return "\n".join(lines) + "\n"


def _simulate_point(sc, point):
    return mc.run(sc.sim, sc.deployment, sc.sim_shadowing, sc.noise, point)


def cmd_simulate(sc, out_dir):
    _require_points(sc)
    runs = {}
    summary = {}
    for name, p in sc.targets():
        emp = _simulate_point(sc, p)
        atomic_write(os.path.join(out_dir, f"simulate_{_safe_name(name)}.csv"),
                     empirical_csv(emp, _sim_thresholds(sc, emp)))
        summary[name] = {
            "samples": emp.count,
            "median_db": emp.quantile(0.5),
            "association": [float(w) for w in emp.association()],
            "probes": [dict(zip(("level", "threshold_db", "empirical_cdf", "ci_low", "ci_high"), r))
                       for r in emp.probes()],
        }
        log.info("simulate %s: %d samples, median %.2f dB", name, emp.count, emp.quantile(0.5))
        runs[name] = emp
    atomic_write(os.path.join(out_dir, "simulate_summary.json"), _json(summary))
    return runs


def compare_target(model_result, emp, ks_tolerance, min_level):
    """KS distance and tail probes of one target; ``passed`` is False on any miss."""
    ks = mc.ks_distance(emp, model_result)
    probes = []
    for level, x, ecdf, lo, hi in emp.probes():
        if level < min_level:
            continue
        mv = float(model_result.cdf(x))
        probes.append({"level": level, "threshold_db": x, "model_cdf": mv, "empirical_cdf": ecdf,
                       "ci_low": lo, "ci_high": hi, "pass": bool(lo <= mv <= hi)})
    passed = ks <= ks_tolerance and all(p["pass"] for p in probes)
    return {"ks": ks, "ks_tolerance": ks_tolerance, "ks_pass": ks <= ks_tolerance,
            "probes": probes, "pass": passed}


def cmd_compare(sc, out_dir, workers=None):
    _require_points(sc)
    results = _model_results(sc, workers)
    report = {}
    rows = ["target,level,threshold_db,model_cdf,empirical_cdf,ci_low,ci_high,pass"]
    for name, p in sc.targets():
        emp = _simulate_point(sc, p)
        rep = compare_target(results[name], emp, sc.ks_tolerance, sc.min_probe_level)
        report[name] = rep
        for pr in rep["probes"]:
            rows.append(",".join([name, f"{pr['level']:g}", f"{pr['threshold_db']:.6f}", _fmt(pr["model_cdf"]),
                                  _fmt(pr["empirical_cdf"]), _fmt(pr["ci_low"]), _fmt(pr["ci_high"]),
                                  "pass" if pr["pass"] else "FAIL"]))
        verdict = "PASS" if rep["pass"] else "FAIL"
        print(f"{name}: KS {rep['ks']:.5f} (tol {sc.ks_tolerance:g}) "
              f"probes {sum(q['pass'] for q in rep['probes'])}/{len(rep['probes'])} -> {verdict}")
    atomic_write(os.path.join(out_dir, "compare_probes.csv"), "\n".join(rows) + "\n")
    atomic_write(os.path.join(out_dir, "compare_report.json"), _json(report))
    return report


def cmd_area(sc, out_dir, workers=None):
    if sc.area is None:
        raise cfg.ConfigError("targets.area", "no evaluation area given")
    r = m.area_sinr(sc.deployment, sc.shadowing, sc.noise, sc.area["polygon"], sc.area["spacing_m"],
                    sc.mode, sc.grid, workers=workers)
    atomic_write(os.path.join(out_dir, "area.csv"), distribution_csv(r.dist))
    lines = ["x_m,y_m,median_db,p5_db," + ",".join(f"cdf_{t:g}" for t in sc.thresholds_db)]
    for (x, y), res in r.locations:
        vals = [f"{x:.3f}", f"{y:.3f}", f"{res.median:.6f}", f"{res.quantile(0.05):.6f}"]
        vals += [_fmt(res.cdf(t)) for t in sc.thresholds_db]
        lines.append(",".join(vals))
    atomic_write(os.path.join(out_dir, "area_locations.csv"), "\n".join(lines) + "\n")
    meds = [res.median for _, res in r.locations]
    summary = summarize(r, sc.thresholds_db)
    summary.update({"locations": len(meds), "median_range_db": [min(meds), max(meds)]})
    atomic_write(os.path.join(out_dir, "area_summary.json"), _json(summary))
    log.info("area: %d locations, medians %.2f..%.2f dB", len(meds), min(meds), max(meds))
    return r


def build_parser():
    p = argparse.ArgumentParser(prog="sinrmodel", description="Downlink SINR distributions under shadowing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("analyze", "model CDF per target point"),
                       ("simulate", "Monte Carlo CDF per target point"),
                       ("compare", "model against Monte Carlo, nonzero exit on mismatch"),
                       ("area", "area-averaged model CDF")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="scenario JSON or a manifest.json")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--seed", type=int, help="Monte Carlo seed")
        s.add_argument("--samples", type=int, help="Monte Carlo sample count")
        s.add_argument("--grid-step", type=float, dest="grid_step", help="dB grid step of the model")
        s.add_argument("--mode", help="best-server | distance | pathloss | site:<i>")
        s.add_argument("--workers", type=int, help=f"process count (default ${m.WORKERS_ENV} or 1)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        sc = load_scenario(args.config)
        sc = cfg.with_overrides(sc, seed=args.seed, samples=args.samples, grid_step=args.grid_step, mode=args.mode)
        os.makedirs(args.out, exist_ok=True)
        _write_manifest(args.out, sc, args.command)
        if args.command == "analyze":
            cmd_analyze(sc, args.out, args.workers)
        elif args.command == "simulate":
            cmd_simulate(sc, args.out)
        elif args.command == "area":
            cmd_area(sc, args.out, args.workers)
        else:
            report = cmd_compare(sc, args.out, args.workers)
            if not all(r["pass"] for r in report.values()):
                return EXIT_FAIL
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except gd.NumericalAccuracyError as exc:
        print(f"numerical accuracy error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
