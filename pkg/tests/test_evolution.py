import math

import numpy as np
import pytest
from scipy.spatial.distance import directed_hausdorff

from chargedrop.evolution import (
    FluidParams,
    SimConfig,
    StopReason,
    critical_charge,
    deformation,
    initial_state,
    node_velocity,
    run,
    stable_dt,
    step,
)
from chargedrop.exceptions import InvalidParameterError
from chargedrop.mesh import enclosed_volume


def hausdorff(a, b):
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def test_critical_charge_values():
    assert critical_charge(FluidParams()) == pytest.approx(4 * math.pi * math.sqrt(2), rel=1e-14)
    assert critical_charge(FluidParams()) == pytest.approx(17.7715, abs=1e-4)
    assert critical_charge(FluidParams(), R=4.0) == pytest.approx(142.172, abs=1e-3)
    assert critical_charge(FluidParams(gamma=2.0)) == pytest.approx(8 * math.pi, rel=1e-14)


@pytest.mark.parametrize("field,value", [("mu1", -1.0), ("mu2", 0.0), ("gamma", -2.0), ("eps0", float("nan")), ("Q", -1.0)])
def test_fluid_params_name_bad_field(field, value):
    with pytest.raises(InvalidParameterError) as err:
        FluidParams(**{field: value})
    assert err.value.field == field
    assert field in str(err.value)


@pytest.mark.parametrize("kw", [dict(cfl=0.0), dict(cfl=0.6), dict(eps_perturb=0.2), dict(N=8), dict(t_max=0.0)])
def test_sim_config_validation(kw):
    with pytest.raises(InvalidParameterError):
        SimConfig(**kw)


def test_default_stop_curvature_scales_with_resolution():
    assert SimConfig(N=128).stop_curvature == pytest.approx(0.2 * 128)


def test_equilibrium_sphere_does_not_move():
    p = FluidParams(Q=0.0)
    cfg = SimConfig(N=64, eps_perturb=0.0, t_max=1e9)
    state = initial_state(p, cfg)
    for _ in range(5):
        new = step(state, p, cfg)
        assert np.abs(new.curve.nodes - state.curve.nodes).max() < 1e-6
        state = new


def test_time_step_is_finite_at_equilibrium():
    p = FluidParams(Q=0.0)
    state = initial_state(p, SimConfig(N=64, eps_perturb=0.0))
    dt = stable_dt(state.fields, p, 0.5)
    assert np.isfinite(dt) and dt > 0.0


def test_node_velocity_keeps_poles_on_axis():
    p = FluidParams.critical(1.0, 2.0)
    state = initial_state(p, SimConfig(N=48, eps_perturb=0.1))
    v = node_velocity(state.fields)
    assert v[0, 0] == 0.0 and v[-1, 0] == 0.0


def _deformation_series(q, steps=20, N=256, eps=0.01, lam=1.0):
    p = FluidParams.critical(q, lam)
    cfg = SimConfig(N=N, eps_perturb=eps, t_max=1e9)
    state = initial_state(p, cfg)
    out = [deformation(state.curve)]
    for _ in range(steps):
        state = step(state, p, cfg)
        out.append(deformation(state.curve))
    return np.array(out)


def test_subcritical_half_charge_decays():
    d = _deformation_series(0.5, N=128)
    assert np.all(np.diff(d) < 0.0)


@pytest.mark.parametrize("lam,q", [(1.0, 0.0), (10.0, 0.0), (0.1, 0.0), (1.0, 0.5), (1.0, 1.2)])
def test_linear_growth_rate(lam, q):
    # amplitude rate of the l = 2 mode against small-deformation theory
    p = FluidParams.critical(q, lam)
    cfg = SimConfig(N=64, eps_perturb=0.01, t_max=1e9)
    state = initial_state(p, cfg)
    d0, t0 = deformation(state.curve), state.t
    for _ in range(30):
        state = step(state, p, cfg)
    measured = math.log(deformation(state.curve) / d0) / (state.t - t0)
    exact = -0.5 * 40 * (lam + 1) / ((2 * lam + 3) * (19 * lam + 16)) * (1 - q * q)
    assert measured == pytest.approx(exact, rel=0.03, abs=2e-3)


def test_run_stops_at_t_max_and_conserves_volume():
    p = FluidParams.critical(1.2, 1.0)
    cfg = SimConfig(N=48, eps_perturb=0.1, t_max=3.0, snapshot_every=5)
    res = run(p, cfg)
    assert res.stop_reason == StopReason.T_MAX
    assert res.final.t == pytest.approx(3.0)
    v0 = res.diagnostics[0].volume
    assert all(abs(r.volume / v0 - 1) < 5e-3 for r in res.diagnostics)
    assert res.snapshots[0].step == 0 and res.snapshots[-1].step == res.final.step
    for s in res.snapshots:
        assert s.sigma @ _areas(s) == pytest.approx(p.Q, rel=1e-10)


def _areas(snapshot):
    from chargedrop.mesh import geometry

    return geometry(snapshot.curve).ring_areas


def test_curvature_stop():
    p = FluidParams.critical(1.0, 1.0)
    cfg = SimConfig(N=32, eps_perturb=0.1, t_max=10.0, stop_curvature=1.0)
    res = run(p, cfg)
    assert res.stop_reason == StopReason.CURVATURE
    assert len(res.diagnostics) == 1


def test_run_is_deterministic():
    p = FluidParams.critical(1.1, 2.0)
    cfg = SimConfig(N=32, eps_perturb=0.1, t_max=2.0)
    a, b = run(p, cfg), run(p, cfg)
    assert [r.as_dict() for r in a.diagnostics] == [r.as_dict() for r in b.diagnostics]
    np.testing.assert_array_equal(a.final.curve.nodes, b.final.curve.nodes)


def test_halving_the_step_changes_the_shape_little():
    p = FluidParams.critical(1.2, 1.0)
    coarse = run(p, SimConfig(N=64, eps_perturb=0.1, t_max=8.0, cfl=0.5))
    fine = run(p, SimConfig(N=64, eps_perturb=0.1, t_max=8.0, cfl=0.25))
    start = coarse.snapshots[0].nodes
    moved = hausdorff(fine.final.curve.nodes, start)
    gap = hausdorff(coarse.final.curve.nodes, fine.final.curve.nodes)
    assert moved > 0.02
    assert gap < 0.01 * moved
    assert enclosed_volume(fine.final.curve) == pytest.approx(enclosed_volume(coarse.final.curve), rel=1e-3)
