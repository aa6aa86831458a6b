"""Config files, diagnostics CSV and snapshot JSON readers/writers."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .diagnostics import DiagnosticsRecord
from .evolution import FluidParams, SimConfig, Snapshot, critical_charge
from .exceptions import InvalidParameterError

OUTPUT_DIR_ENV = "CHARGEDROP_OUTPUT_DIR"
_ALIASES = {"lambda": "viscosity_ratio", "eps": "eps_perturb"}
_SIM_KEYS = {f.name: f.type for f in fields(SimConfig)}


@dataclass
class RunConfig:
    sim: SimConfig
    params: FluidParams
    output_dir: Path = Path("run_output")
    snapshot_every: int = 50
    seed: int = 0
    q_factor: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = {k: v for k, v in self.sim.as_dict().items()}
        d.update(mu1=self.params.mu1, mu2=self.params.mu2, gamma=self.params.gamma,
                 eps0=self.params.eps0, Q=self.params.Q, output_dir=str(self.output_dir), seed=self.seed)
        if self.q_factor is not None:
            d["Q_factor"] = self.q_factor
        return d


def _number(key, text):
    try:
        value = float(text)
    except ValueError:
        raise InvalidParameterError(f"{key}: not a number: {text!r}", field=key) from None
    return value


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def build_config(values: dict) -> RunConfig:
    values = {_ALIASES.get(k, k): v for k, v in values.items()}
    sim_kw = {}
    for key in list(values):
        if key in _SIM_KEYS and key != "snapshot_every":
            v = _number(key, values.pop(key))
            sim_kw[key] = int(v) if key in ("N", "max_steps", "remesh_every") else v
    snapshot_every = int(_number("snapshot_every", values.pop("snapshot_every", 50)))
    sim_kw["snapshot_every"] = snapshot_every
    mu2 = _number("mu2", values.pop("mu2", 1.0))
    if not mu2 > 0.0:
        raise InvalidParameterError(f"mu2 must be positive, got {mu2}", field="mu2")
    if "viscosity_ratio" in values and "mu1" in values:
        raise InvalidParameterError("give either lambda or mu1, not both", field="lambda")
    if "viscosity_ratio" in values:
        lam = _number("lambda", values.pop("viscosity_ratio"))
        if not lam > 0.0:
            raise InvalidParameterError(f"lambda must be positive, got {lam}", field="lambda")
        mu1 = lam * mu2
    else:
        mu1 = _number("mu1", values.pop("mu1", 1.0))
    gamma = _number("gamma", values.pop("gamma", 1.0))
    eps0 = _number("eps0", values.pop("eps0", 1.0))
    q_factor = None
    if "Q" in values and "Q_factor" in values:
        raise InvalidParameterError("give either Q or Q_factor, not both", field="Q_factor")
    params = FluidParams(mu1=mu1, mu2=mu2, gamma=gamma, eps0=eps0, Q=0.0)
    if "Q_factor" in values:
        q_factor = _number("Q_factor", values.pop("Q_factor"))
        if q_factor < 0.0:
            raise InvalidParameterError(f"Q_factor must be non-negative, got {q_factor}", field="Q_factor")
        params.Q = q_factor * critical_charge(params, 1.0)
    elif "Q" in values:
        params = FluidParams(mu1=mu1, mu2=mu2, gamma=gamma, eps0=eps0, Q=_number("Q", values.pop("Q")))
    out_dir = Path(values.pop("output_dir", "run_output"))
    if os.environ.get(OUTPUT_DIR_ENV):
        out_dir = Path(os.environ[OUTPUT_DIR_ENV])
    seed = int(_number("seed", values.pop("seed", 0)))
    if values:
        raise InvalidParameterError(f"unknown config keys: {', '.join(sorted(values))}", field=sorted(values)[0])
    return RunConfig(sim=SimConfig(**sim_kw), params=params, output_dir=out_dir,
                     snapshot_every=snapshot_every, seed=seed, q_factor=q_factor)


def load_config(path) -> RunConfig:
    return build_config(parse_config_text(Path(path).read_text(encoding="utf-8")))


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.as_dict().items():
        if k == "Q" and cfg.q_factor is not None:
            continue
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _fmt(x):
    return format(float(x), ".17g")


def write_diagnostics(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(DiagnosticsRecord.FIELDS)
        for rec in records:
            w.writerow([_fmt(getattr(rec, k)) for k in DiagnosticsRecord.FIELDS])


def read_csv_columns(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def read_diagnostics(path) -> list[DiagnosticsRecord]:
    cols = read_csv_columns(path)
    n = len(next(iter(cols.values()))) if cols else 0
    return [DiagnosticsRecord(**{k: float(cols[k][i]) for k in DiagnosticsRecord.FIELDS}) for i in range(n)]


def snapshot_to_dict(s: Snapshot) -> dict:
    return {
        "step": int(s.step),
        "t": float(s.t),
        "nodes": s.nodes.tolist(),
        "sigma": s.sigma.tolist(),
        "u": s.u.tolist(),
        "V": float(s.V),
        "kf": float(s.kf),
        "zf": float(s.zf),
    }


def _dumps(obj):
    # repr of a Python float round-trips exactly (up to 17 significant digits)
    return json.dumps(obj, indent=None, allow_nan=True)


def write_snapshot(path, s: Snapshot):
    Path(path).write_text(_dumps(snapshot_to_dict(s)), encoding="utf-8")


def read_snapshot(path) -> Snapshot:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return Snapshot(
        step=int(d.get("step", 0)),
        t=float(d["t"]),
        nodes=np.array(d["nodes"], dtype=float),
        sigma=np.array(d["sigma"], dtype=float),
        u=np.array(d["u"], dtype=float).reshape(-1, 2),
        V=float(d["V"]),
        kf=float(d["kf"]),
        zf=float(d["zf"]),
    )


def snapshot_paths(directory) -> list[Path]:
    directory = Path(directory)
    if (directory / "snapshots").is_dir():
        directory = directory / "snapshots"
    return sorted(directory.glob("*.json"))


def write_curve_csv(path, curve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_index", "r", "z"])
        for k, (r, z) in enumerate(curve.nodes):
            w.writerow([k, _fmt(r), _fmt(z)])


def read_curve_csv(path):
    from .mesh import GeneratingCurve

    cols = read_csv_columns(path)
    order = np.argsort(cols["theta_index"])
    return GeneratingCurve(np.column_stack([cols["r"][order], cols["z"][order]]))
