"""Time evolution of a charged drop under the kinematic condition.

Nondimensional units: R = gamma = eps0 = mu2 = 1 by default, time in units
of ``mu2 R / gamma``. Each step solves for the charge, forms the traction
jump ``gamma kappa - sigma^2 / (2 eps0)``, solves for the interface
velocity, and moves every node along its normal with the midpoint rule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .assembly import assemble
from .diagnostics import DiagnosticsRecord, make_record
from .electrostatics import ChargeSolution, electric_traction, solve_charge
from .exceptions import ChargeDropError, InvalidParameterError, StepTooSmallError
from .mesh import GeneratingCurve, RemeshPolicy, enclosed_volume, geometry, make_perturbed_sphere, remesh
from .stokes import TractionJump, VelocityField, solve_velocity

log = logging.getLogger(__name__)

# capillary stiffness: explicit steps need dt below ~ C mu_sum h / gamma
CAPILLARY_DT_FACTOR = 8.0


def critical_charge(params: "FluidParams", R: float = 1.0) -> float:
    """Rayleigh limit ``sqrt(32 gamma pi^2 eps0 R^3)``."""
    return math.sqrt(32.0 * params.gamma * math.pi ** 2 * params.eps0 * R ** 3)


@dataclass
class FluidParams:
    mu1: float = 1.0
    mu2: float = 1.0
    gamma: float = 1.0
    eps0: float = 1.0
    Q: float = 0.0

    def __post_init__(self):
        for name in ("mu1", "mu2", "gamma", "eps0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise InvalidParameterError(f"{name} must be positive, got {value}", field=name)
        if not (np.isfinite(self.Q) and self.Q >= 0.0):
            raise InvalidParameterError(f"Q must be non-negative, got {self.Q}", field="Q")

    @property
    def viscosity_ratio(self) -> float:
        return self.mu1 / self.mu2

    @classmethod
    def critical(cls, q_factor=1.0, viscosity_ratio=1.0, **kw) -> "FluidParams":
        p = cls(mu1=viscosity_ratio * kw.pop("mu2", 1.0), **kw)
        p.Q = q_factor * critical_charge(p)
        return p


@dataclass
class SimConfig:
    N: int = 256
    eps_perturb: float = 0.1
    cfl: float = 0.5
    t_max: float = 50.0
    stop_curvature: Optional[float] = None
    stop_dt: float = 1e-10
    max_steps: int = 200_000
    snapshot_every: int = 50
    snapshot_kf_factor: Optional[float] = 1.25
    remesh_every: int = 10
    remesh_power: float = 1.0
    remesh_length_change: float = 0.2

    def __post_init__(self):
        if not (0.0 < self.cfl <= 0.5):
            raise InvalidParameterError("cfl must lie in (0, 0.5]", field="cfl")
        if not (0.0 <= self.eps_perturb <= 0.1):
            raise InvalidParameterError("eps_perturb must lie in [0, 0.1]", field="eps_perturb")
        if self.N < 16:
            raise InvalidParameterError("N must be at least 16", field="N")
        if not self.t_max > 0.0:
            raise InvalidParameterError("t_max must be positive", field="t_max")
        if self.stop_curvature is None:
            self.stop_curvature = 0.2 * self.N

    def as_dict(self):
        return asdict(self)


class StopReason(str, Enum):
    CURVATURE = "curvature-threshold"
    DT_FLOOR = "dt-floor"
    T_MAX = "t-max"
    SOLVER_FAILURE = "solver-failure"
    MAX_STEPS = "max-steps"


@dataclass
class Fields:
    """Everything solved for on one curve."""

    curve: GeneratingCurve
    geom: object
    charge: ChargeSolution
    traction: TractionJump
    velocity: VelocityField


@dataclass
class SimState:
    t: float
    curve: GeneratingCurve
    step: int = 0
    record: Optional[DiagnosticsRecord] = None
    fields: Optional[Fields] = None
    min_length_at_remesh: float = field(default=0.0)


@dataclass
class Snapshot:
    step: int
    t: float
    nodes: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    V: float
    kf: float
    zf: float

    @property
    def curve(self) -> GeneratingCurve:
        return GeneratingCurve(self.nodes)


def solve_fields(curve: GeneratingCurve, params: FluidParams) -> Fields:
    geom = geometry(curve)
    ops = assemble(curve, geom, stokes=True)
    charge = solve_charge(curve, geom, params.Q, operators=ops)
    jump = params.gamma * geom.mean_curvature - electric_traction(charge, params)
    traction = TractionJump(magnitude=jump, normals=geom.normals)
    velocity = solve_velocity(curve, geom, traction, params, operators=ops)
    return Fields(curve, geom, charge, traction, velocity)


def node_velocity(fields: Fields) -> np.ndarray:
    """Normal velocity vectors at the nodes (tangential part discarded)."""
    u = fields.velocity.u
    geom = fields.geom
    h = geom.arc_lengths
    un = np.empty((len(u) + 1, 2))
    un[1:-1] = (u[1:] * h[:-1, None] + u[:-1] * h[1:, None]) / (h[1:] + h[:-1])[:, None]
    un[0] = u[0]
    un[-1] = u[-1]
    if fields.curve.closed:
        un[0, 0] = un[-1, 0] = 0.0
    nn = geom.node_normals
    vn = np.einsum("ij,ij->i", un, nn)
    return vn[:, None] * nn


def stable_dt(fields: Fields, params: FluidParams, cfl: float) -> float:
    """Largest step allowed by advection, curvature and capillary stiffness."""
    geom = fields.geom
    hmin = float(geom.arc_lengths.min())
    umax = float(np.max(np.hypot(*fields.velocity.u.T)))
    kmax = float(np.max(np.abs(geom.mean_curvature)))
    pe = float(np.max(electric_traction(fields.charge, params)))
    mu_sum = params.mu1 + params.mu2
    limits = [CAPILLARY_DT_FACTOR * mu_sum * hmin / params.gamma]
    if pe > 0.0:
        limits.append(mu_sum / pe)
    if umax > 0.0:
        limits.append(hmin / umax)
        limits.append(1.0 / (kmax * umax))
    return cfl * min(limits)


def _moved(curve: GeneratingCurve, vel: np.ndarray, dt: float) -> GeneratingCurve:
    nodes = curve.nodes + dt * vel
    if curve.closed:
        nodes[0, 0] = nodes[-1, 0] = 0.0
    return GeneratingCurve(nodes)


def step(state: SimState, params: FluidParams, config: SimConfig) -> SimState:
    """Advance one midpoint-rule step; returns the new state with fresh fields."""
    f1 = state.fields if state.fields is not None else solve_fields(state.curve, params)
    record = state.record or make_record(state.t, state.curve, f1.geom, f1.charge, f1.velocity)
    dt = stable_dt(f1, params, config.cfl)
    dt = min(dt, config.t_max - state.t) if config.t_max > state.t else dt
    if dt < config.stop_dt:
        raise StepTooSmallError(f"time step {dt:.3e} below floor {config.stop_dt:.1e}")
    v1 = node_velocity(f1)
    half = _moved(state.curve, v1, 0.5 * dt)
    f2 = solve_fields(half, params)
    v2 = node_velocity(f2)
    new_curve = _moved(state.curve, v2, dt)
    new_curve.validate()

    min_len = state.min_length_at_remesh or float(f1.geom.arc_lengths.min())
    nstep = state.step + 1
    cur_min = float(np.hypot(*np.diff(new_curve.nodes, axis=0).T).min())
    if abs(cur_min - min_len) > config.remesh_length_change * min_len or nstep % config.remesh_every == 0:
        new_curve = remesh(new_curve, RemeshPolicy(n_elements=config.N, power=config.remesh_power))
        min_len = float(np.hypot(*np.diff(new_curve.nodes, axis=0).T).min())

    fields = solve_fields(new_curve, params)
    t = state.t + dt
    rec = make_record(t, new_curve, fields.geom, fields.charge, fields.velocity)
    return SimState(t=t, curve=new_curve, step=nstep, record=rec, fields=fields, min_length_at_remesh=min_len)


@dataclass
class RunResult:
    snapshots: list
    diagnostics: list
    stop_reason: StopReason
    final: SimState
    error: Optional[str] = None
    failed_step: Optional[int] = None


def _snapshot(state: SimState) -> Snapshot:
    f = state.fields
    return Snapshot(
        step=state.step,
        t=state.t,
        nodes=state.curve.nodes.copy(),
        sigma=f.charge.sigma.copy(),
        u=f.velocity.u.copy(),
        V=f.charge.potential,
        kf=state.record.k_f,
        zf=state.record.z_f,
    )


def initial_state(params: FluidParams, config: SimConfig) -> SimState:
    curve = make_perturbed_sphere(R=1.0, eps=config.eps_perturb, l=2, N=config.N)
    fields = solve_fields(curve, params)
    rec = make_record(0.0, curve, fields.geom, fields.charge, fields.velocity)
    return SimState(t=0.0, curve=curve, step=0, record=rec, fields=fields,
                    min_length_at_remesh=float(fields.geom.arc_lengths.min()))


def run(params: FluidParams, config: SimConfig, callback: Optional[Callable[[SimState], None]] = None) -> RunResult:
    """Evolve the perturbed sphere until a stopping criterion fires."""
    state = initial_state(params, config)
    diagnostics = [state.record]
    snapshots = [_snapshot(state)]
    last_snap_kf = state.record.k_f
    reason = StopReason.MAX_STEPS
    error = None
    failed = None
    while state.step < config.max_steps:
        if state.record.k_f >= config.stop_curvature:
            reason = StopReason.CURVATURE
            break
        if state.t >= config.t_max * (1.0 - 1e-12):
            reason = StopReason.T_MAX
            break
        try:
            state = step(state, params, config)
        except StepTooSmallError as exc:
            reason, error = StopReason.DT_FLOOR, str(exc)
            break
        except (ChargeDropError, np.linalg.LinAlgError, FloatingPointError) as exc:
            reason, error, failed = StopReason.SOLVER_FAILURE, f"{type(exc).__name__}: {exc}", state.step + 1
            log.warning("solver failure at step %d: %s", failed, exc)
            break
        diagnostics.append(state.record)
        kf_due = config.snapshot_kf_factor and state.record.k_f >= config.snapshot_kf_factor * last_snap_kf
        if state.step % config.snapshot_every == 0 or kf_due:
            snapshots.append(_snapshot(state))
            last_snap_kf = state.record.k_f
        if callback is not None:
            callback(state)
    if snapshots[-1].step != state.step:
        snapshots.append(_snapshot(state))
    return RunResult(snapshots, diagnostics, reason, state, error, failed)


def deformation(curve: GeneratingCurve) -> float:
    """Pole-to-equator deformation ``(L - B)/(L + B)`` of the meridian."""
    L = 0.5 * (curve.z.max() - curve.z.min())
    B = float(curve.r.max())
    return (L - B) / (L + B)
