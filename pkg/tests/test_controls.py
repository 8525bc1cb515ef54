import numpy as np
import pytest

from lepra_oc.controls import ControlSchedule, DoseWindow, Grid, grid_steps


def test_grid_basics():
    g = Grid(30.0, 0.1)
    assert g.n_steps == 300 and g.n_nodes == 301 and g.t0 == 0.0
    assert g.times[-1] == pytest.approx(30.0)
    assert g.lag_steps(30.0) == 300


@pytest.mark.parametrize("T,h", [(30.0, 0.07), (-1.0, 0.1), (1.0, 0.0)])
def test_grid_rejects_misalignment(T, h):
    with pytest.raises(ValueError):
        Grid(T, h)


def test_grid_steps_rejects_off_grid_delay():
    with pytest.raises(ValueError):
        grid_steps(0.15, 0.1, "tau")


def test_window_bounds_and_readonly():
    g = Grid(1.0, 0.5)
    w = DoseWindow("rifampin", 1, [1.0, 2.0, 3.0], 5.0)
    assert w.label == "rifampin.1" and w.drug_index == 0
    with pytest.raises(ValueError):
        w.values[0] = 9.0
    with pytest.raises(ValueError):
        DoseWindow("rifampin", 1, [1.0, 6.0, 3.0], 5.0)
    with pytest.raises(ValueError):
        DoseWindow("aspirin", 1, [0.0] * 3, 5.0)
    with pytest.raises(ValueError):
        ControlSchedule(g, (w, w))


def test_shifted_window_entering_and_support():
    g = Grid(2.0, 0.5)
    w = DoseWindow("dapsone", 2, [1.0, 2.0, 3.0, 4.0, 5.0], 10.0, shift=1.0)
    nodes, mids = w.entering(g)
    np.testing.assert_array_equal(nodes, [0, 0, 1, 2, 3])
    np.testing.assert_array_equal(mids, [0, 0, 1.5, 2.5])
    np.testing.assert_array_equal(w.support(g), [True, True, True, False, False])
    assert w.value_at(0.5, g) == 0.0
    assert w.value_at(1.25, g) == pytest.approx(1.5)


def test_source_and_penalty_rates():
    g = Grid(1.0, 0.5)
    c = ControlSchedule.constant(g, {("rifampin", 1): 20.0, ("dapsone", 1): 100.0},
                                 {("rifampin", 1): 60.0, ("dapsone", 1): 300.0})
    nodes, mids = c.source_rates(type("P", (), {"V1": 25.0})())
    np.testing.assert_allclose(nodes, 120 / 25)
    np.testing.assert_allclose(mids, 120 / 25)

    class W:
        @staticmethod
        def for_drug(i):
            return 1.5

    np.testing.assert_allclose(c.penalty_rates(W), 1.5 * (400 + 10000))
    z = ControlSchedule.zeros_like(c)
    assert all(not np.any(a) for a in z.arrays())
    assert z.labels == ["rifampin.1", "dapsone.1"]
