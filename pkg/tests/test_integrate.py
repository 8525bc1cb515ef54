import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lepra_oc.controls import ControlSchedule, Grid
from lepra_oc.integrate import IntegrationError, Trajectory, integrate_adjoint, integrate_forward, total_cost, trapezoid
from lepra_oc.model import DEFAULT_X0, STATE_NAMES
from lepra_oc.oracle import analytic_pk, self_convergence
from lepra_oc.params import CostWeights, simulation_params, table_params
from lepra_oc.scenarios import build_scenario


def constant_traj(grid, **cols):
    arr = np.zeros((grid.n_nodes, 11))
    for k, v in cols.items():
        arr[:, STATE_NAMES.index(k)] = v
    return Trajectory(grid, arr)


def test_zero_controls_keep_pk_zero():
    sc = build_scenario("no-drug-30")
    tr = integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
    assert np.all(tr.column("c1") == 0.0) and np.all(tr.column("c2") == 0.0)
    np.testing.assert_array_equal(tr.at(0.0), DEFAULT_X0.as_array())


def test_pk_matches_closed_form():
    p = table_params()
    g = Grid(5.0, 0.01)
    c = ControlSchedule.constant(g, {("rifampin", 1): 130.0}, {("rifampin", 1): 1000.0})
    tr = integrate_forward(np.zeros(11), c, p)
    c1, c2 = analytic_pk(130.0, p, 5.0)
    assert tr.at(5.0)[0] == pytest.approx(c1, rel=1e-8)
    assert tr.at(5.0)[1] == pytest.approx(c2, rel=1e-8)


def test_step_halving_ratio():
    e1, e2 = self_convergence(DEFAULT_X0.as_array(), lambda g: ControlSchedule(g), simulation_params(), T=5.0)
    assert e1 / e2 >= 14


def test_forward_is_deterministic():
    sc = build_scenario("mdt-60-delay")
    a = integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
    b = integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
    assert a.states.tobytes() == b.states.tobytes()


def test_blow_up_reports_step():
    sc = build_scenario("no-drug-30", params_preset="table")
    with pytest.raises(IntegrationError) as exc:
        integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
    assert exc.value.step > 0


def test_off_grid_delay_rejected():
    sc = build_scenario("mdt-30")
    with pytest.raises(ValueError):
        integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params().replace(tau_d=0.05))


@pytest.mark.parametrize("name", ["mdt-30", "mdt-60-delay", "no-drug-30"])
def test_transversality_exact(name):
    sc = build_scenario(name)
    p = sc.resolved_params()
    fwd = integrate_forward(sc.x0_array(), sc.initial_controls(), p)
    for form in ("exact", "instantaneous"):
        adj = integrate_adjoint(fwd, sc.initial_controls(), p, form=form)
        assert adj.states[-1].tobytes() == np.zeros(11).tobytes()


def test_lambda8_identically_zero():
    g = Grid(5.0, 0.1)
    p = simulation_params()
    fwd = constant_traj(g, S=500.0)
    adj = integrate_adjoint(fwd, ControlSchedule(g), p)
    assert np.all(adj.column("lambda8") == 0.0)
    assert np.any(adj.column("lambda4") != 0.0)


def test_adjoint_fine_grid_reference():
    base = build_scenario("mdt-30").replace(param_overrides=(("tau_d", 1.0),))

    def lam0(h):
        sc = base.replace(grid=Grid(2.0, h))
        c, p = sc.initial_controls(), sc.resolved_params()
        return integrate_adjoint(integrate_forward(sc.x0_array(), c, p), c, p).states[0]

    ref = lam0(0.0005)
    np.testing.assert_allclose(lam0(0.0025), ref, rtol=1e-6, atol=1e-6 * np.max(np.abs(ref)))


def test_total_cost_examples():
    g = Grid(30.0, 0.1)
    w = CostWeights()
    assert total_cost(constant_traj(g, I=250.0, B=2500.0), ControlSchedule(g), w) == pytest.approx(82500, rel=1e-12)
    c = ControlSchedule.constant(g, {("rifampin", 1): 20.0}, {("rifampin", 1): 60.0})
    assert total_cost(constant_traj(g), c, w) == pytest.approx(18000, rel=1e-12)
    lin = np.zeros((g.n_nodes, 11))
    lin[:, 3] = 3.0 * g.times + 1.0
    assert total_cost(Trajectory(g, lin), ControlSchedule(g), w) == pytest.approx(1.5 * 900 + 30, rel=1e-12)


def test_total_cost_monotone_in_controls():
    g = Grid(10.0, 0.5)
    tr = constant_traj(g, I=1.0)
    lo = ControlSchedule.constant(g, {("dapsone", 1): 5.0}, {("dapsone", 1): 300.0})
    hi = ControlSchedule.constant(g, {("dapsone", 1): 6.0}, {("dapsone", 1): 300.0})
    assert total_cost(tr, hi, CostWeights()) > total_cost(tr, lo, CostWeights())
    with pytest.raises(ValueError):
        total_cost(tr, ControlSchedule(Grid(5.0, 0.5)), CostWeights())


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(1, 200))
def test_trapezoid_exact_on_affine(a, b, n):
    h = 0.25
    t = np.arange(n + 1) * h
    T = n * h
    assert trapezoid(a * t + b, h) == pytest.approx(a * T**2 / 2 + b * T, rel=1e-12, abs=1e-9)


def test_csv_header_and_round_trip(tmp_path):
    sc = build_scenario("mdt-30")
    tr = integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    assert path.read_text().splitlines()[0] == "t,c1,c2,S,I,B,Ig,Ta,I10,I12,I15,I17"
    back = Trajectory.from_csv(path, tr.grid)
    assert back.states.tobytes() == tr.states.tobytes()


def test_interp_midpoint():
    g = Grid(1.0, 0.5)
    arr = np.outer(g.times, np.ones(11))
    tr = Trajectory(g, arr)
    np.testing.assert_allclose(tr.interp(0.25), 0.25)
    with pytest.raises(ValueError):
        tr.at(0.3)
    assert math.isclose(tr.at(1.0)[0], 1.0)
