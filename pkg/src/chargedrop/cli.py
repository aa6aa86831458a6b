"""Command-line entry point: ``chargedrop run|fit|collapse|sweep``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io
from .diagnostics import (
    DiagnosticsRecord,
    collapse_score,
    cone_angle,
    default_cone_window,
    fit_power_law,
    rescale_profiles,
)
from .evolution import FluidParams, StopReason, critical_charge, run
from .exceptions import ChargeDropError, FitFailureError, InvalidParameterError

log = logging.getLogger("chargedrop")

NO_CONE = "no-cone"
# a tip counts as a cone once its curvature has grown this much
CONE_GROWTH = 5.0


class CommandError(Exception):
    def __init__(self, payload: dict, status: int = 1):
        super().__init__(payload.get("message", ""))
        self.payload = payload
        self.status = status


def _error_payload(exc: Exception) -> dict:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    field = getattr(exc, "field", None)
    if field is not None:
        payload["field"] = field
    return payload


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n", encoding="utf-8")


# run ----------------------------------------------------------------------

def execute_run(cfg: io.RunConfig, progress=None) -> dict:
    """Run one simulation and write its output directory; returns the report."""
    out = Path(cfg.output_dir)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for old in snap_dir.glob("*.json"):
        old.unlink()
    peak = [0.0]

    def track(state):
        peak[0] = max(peak[0], float(np.max(np.hypot(*state.fields.velocity.u.T))))
        if progress is not None:
            progress(state)

    started = time.perf_counter()
    result = run(cfg.params, cfg.sim, callback=track)
    wall = time.perf_counter() - started
    io.write_diagnostics(out / "diagnostics.csv", result.diagnostics)
    for k, snap in enumerate(result.snapshots):
        io.write_snapshot(snap_dir / f"{k:04d}.json", snap)
    peak[0] = max(peak[0], float(np.max(np.hypot(*result.snapshots[0].u.T))))
    report = {
        "stop_reason": result.stop_reason.value,
        "error": result.error,
        "failed_step": result.failed_step,
        "steps": result.final.step,
        "n_snapshots": len(result.snapshots),
        "max_speed": peak[0],
        "final": result.final.record.as_dict(),
        "initial": result.diagnostics[0].as_dict(),
        "config": cfg.as_dict(),
        "Q_critical": critical_charge(cfg.params),
        "wall_seconds": wall,
    }
    _write_json(out / "run_report.json", report)
    return report


def cmd_run(args) -> int:
    cfg = io.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = Path(args.output_dir)

    def progress(state):
        if args.verbose and state.step % 50 == 0:
            r = state.record
            log.info("step %d t=%.6g k_f=%.4g v_f=%.4g", state.step, r.t, r.k_f, r.v_f)

    report = execute_run(cfg, progress)
    print(json.dumps({k: report[k] for k in ("stop_reason", "steps", "final")}, indent=2))
    if report["stop_reason"] == StopReason.SOLVER_FAILURE.value:
        raise CommandError({"error": "SolverFailure", "message": report["error"], "step": report["failed_step"]}, 3)
    return 0


# fit ----------------------------------------------------------------------

def select_fit_window(cols: dict, t_start=None, decade=False):
    t = cols["t"]
    mask = np.ones(len(t), dtype=bool)
    if t_start is not None:
        mask &= t >= t_start
    if decade:
        if "k_f" not in cols:
            raise InvalidParameterError("the k_f column is needed for --last-decade", field="k_f")
        kf = cols["k_f"]
        mask &= kf >= kf[-1] / 10.0
    return mask


def fit_column(path, column, t_start=None, decade=False, min_rows=8) -> dict:
    cols = io.read_csv_columns(path)
    if column not in cols:
        raise InvalidParameterError(f"no column {column!r} in {path}", field="column")
    if "t" not in cols:
        raise InvalidParameterError(f"no t column in {path}", field="t")
    mask = select_fit_window(cols, t_start, decade)
    n = int(mask.sum())
    base = {"column": column, "rows": n,
            "t_first": float(cols["t"][mask][0]) if n else None,
            "t_last": float(cols["t"][mask][-1]) if n else None}
    if n < min_rows:
        raise CommandError({"error": "FitFailureError", "message": f"only {n} rows in the fit window, need {min_rows}", **base}, 4)
    try:
        fit = fit_power_law(np.column_stack([cols["t"][mask], cols[column][mask]]))
    except FitFailureError as exc:
        raise CommandError({**_error_payload(exc), **base}, 4) from exc
    return {**base, **asdict(fit)}


def cmd_fit(args) -> int:
    report = fit_column(args.csv, args.column, args.t_start, args.last_decade, args.min_rows)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


# collapse -----------------------------------------------------------------

def collapse_snapshots(directory, last=4, region=5.0):
    paths = io.snapshot_paths(directory)
    if len(paths) < 2:
        raise CommandError({"error": "TipDetectionError", "message": f"need at least 2 snapshots in {directory}"}, 5)
    paths = paths[-last:]
    snaps = [io.read_snapshot(p) for p in paths]
    rescaled = rescale_profiles([s.curve for s in snaps])
    score = collapse_score(rescaled, region=region)
    return snaps, paths, rescaled, score


def cmd_collapse(args) -> int:
    snaps, paths, rescaled, score = collapse_snapshots(args.dir, args.last, args.region)
    base = Path(args.dir)
    csv_path = Path(args.out) if args.out else base / "collapse.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["snapshot", "t", "kf", "theta_index", "R", "Z"])
        for p, s, prof in zip(paths, snaps, rescaled):
            for k, (R, Z) in enumerate(prof):
                w.writerow([p.stem, io._fmt(s.t), io._fmt(s.kf), k, io._fmt(R), io._fmt(Z)])
    report = {"snapshots": [p.name for p in paths], "t": [s.t for s in snaps], "kf": [s.kf for s in snaps],
              "region": args.region, "collapse_score": score, "rescaled_csv": str(csv_path)}
    _write_json(csv_path.with_suffix(".json"), report)
    print(json.dumps(report, indent=2))
    return 0


# sweep --------------------------------------------------------------------

def _upper_half(nodes):
    from .mesh import GeneratingCurve, geometry

    curve = GeneratingCurve(np.asarray(nodes, dtype=float))
    if curve.z[0] < curve.z[-1]:
        curve = GeneratingCurve(curve.nodes[::-1] * [1.0, -1.0])
    return curve, geometry(curve)


def pole_curvature(nodes) -> float:
    """Mean curvature of the element touching the upper pole."""
    _, geom = _upper_half(nodes)
    return float(geom.mean_curvature[0])


def singularity_at_pole(nodes) -> bool:
    """Whether the largest curvature sits in the rounded core of the upper tip.

    The core is taken as one radius of curvature of arclength from the pole.
    A neck pinching a droplet off the end fails this test.
    """
    curve, geom = _upper_half(nodes)
    k = geom.mean_curvature
    mid_z = 0.5 * (curve.z.max() + curve.z.min())
    k_up = np.where(geom.midpoints[:, 1] >= mid_z, k, -np.inf)
    i = int(np.argmax(k_up))
    s_mid = geom.arc_lengths[:i].sum() + 0.5 * geom.arc_lengths[i]
    return bool(s_mid <= 1.0 / k[i])


def classify_tip(initial_nodes, final_nodes, window=None):
    """Return the cone semiangle in degrees, or :data:`NO_CONE`.

    A cone needs the pole curvature grown by :data:`CONE_GROWTH` with the
    largest curvature still at the pole. A drop that pinches off a droplet
    (its largest curvature at a neck) is not a cone.
    """
    k0, k1 = pole_curvature(initial_nodes), pole_curvature(final_nodes)
    if not (k1 >= CONE_GROWTH * k0 and singularity_at_pole(final_nodes)):
        return NO_CONE
    from .mesh import GeneratingCurve

    window = window or default_cone_window(k1)
    return cone_angle(GeneratingCurve(np.asarray(final_nodes, dtype=float)), window)


def _sweep_one(cfg: io.RunConfig, lam: float):
    try:
        report = execute_run(cfg)
        snaps = io.snapshot_paths(cfg.output_dir)
        first, final = io.read_snapshot(snaps[0]), io.read_snapshot(snaps[-1])
        verdict = classify_tip(first.nodes, final.nodes)
        angle = verdict if verdict == NO_CONE else io._fmt(verdict)
        return [lam, angle, report["stop_reason"]]
    except Exception as exc:  # per-lambda failures are recorded, the sweep continues
        log.warning("lambda=%s failed: %s", lam, exc)
        return [lam, "error", f"{type(exc).__name__}: {exc}"]


def sweep_configs(base: io.RunConfig, lambdas, scale_time=True):
    """One config per viscosity ratio, each with its own output directory.

    With ``scale_time`` the horizon grows with ``(mu1 + mu2)``, which sets
    the flow time scale, relative to the base config's ratio.
    """
    q = base.q_factor if base.q_factor is not None else 1.0
    base_sum = base.params.mu1 + base.params.mu2
    out = []
    for lam in lambdas:
        if not lam > 0.0:
            raise InvalidParameterError(f"lambda must be positive, got {lam}", field="lambda")
        params = FluidParams(mu1=lam * base.params.mu2, mu2=base.params.mu2, gamma=base.params.gamma, eps0=base.params.eps0)
        params.Q = q * critical_charge(params)
        t_max = base.sim.t_max * ((params.mu1 + params.mu2) / base_sum if scale_time else 1.0)
        sim = replace(base.sim, t_max=t_max)
        out.append(replace(base, sim=sim, params=params, q_factor=q, output_dir=Path(base.output_dir) / f"lambda_{lam:g}"))
    return out


def cmd_sweep(args) -> int:
    base = io.load_config(args.config)
    if args.output_dir:
        base.output_dir = Path(args.output_dir)
    lambdas = [float(x) for x in args.lambdas.split(",") if x.strip()]
    cfgs = sweep_configs(base, lambdas, scale_time=not args.no_time_scaling)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, cfgs, lambdas))
    else:
        rows = [_sweep_one(c, lam) for c, lam in zip(cfgs, lambdas)]
    Path(base.output_dir).mkdir(parents=True, exist_ok=True)
    out = Path(base.output_dir) / "sweep.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "semiangle_deg", "stop_reason"])
        w.writerows([[f"{r[0]:g}", r[1], r[2]] for r in rows])
    print(out.read_text(encoding="utf-8"), end="")
    return 0


def read_sweep(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        angle = r["semiangle_deg"]
        out.append((float(r["lambda"]), angle if angle in (NO_CONE, "error") else float(angle), r["stop_reason"]))
    return out


# entry --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chargedrop", description="Charged viscous drop simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve one drop")
    r.add_argument("config")
    r.add_argument("--output-dir")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fit", help="power-law blow-up fit of one diagnostics column")
    f.add_argument("csv")
    f.add_argument("column")
    f.add_argument("--t-start", type=float, default=None, help="ignore rows before this time")
    f.add_argument("--last-decade", action="store_true", help="keep rows with k_f above a tenth of its final value")
    f.add_argument("--min-rows", type=int, default=8)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("collapse", help="rescale tip profiles and score their collapse")
    c.add_argument("dir")
    c.add_argument("--last", type=int, default=4)
    c.add_argument("--region", type=float, default=5.0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_collapse)

    s = sub.add_parser("sweep", help="cone angle against viscosity ratio")
    s.add_argument("config")
    s.add_argument("--lambdas", required=True, help="comma-separated viscosity ratios")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--output-dir")
    s.add_argument("--no-time-scaling", action="store_true")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CommandError as exc:
        print(json.dumps(exc.payload), file=sys.stderr)
        return exc.status
    except (ChargeDropError, OSError, ValueError) as exc:
        print(json.dumps(_error_payload(exc)), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
