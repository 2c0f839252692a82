import csv
import dataclasses
import io

import numpy as np
import pytest

from interval_observer import matops as mo
from interval_observer import sim
from interval_observer.decomp import decompose_model
from interval_observer.model import Box, henon_dt, model_from_dict
from interval_observer.synthesis import ObserverGain


def ct_linear(a, x0=1.0):
    return model_from_dict({"time_type": "CT", "A": [[a]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]],
                            "W": {"low": [0], "up": [0]}, "V": {"low": [0], "up": [0]},
                            "X0": {"low": [x0], "up": [x0]}})


def quiet_henon(X0=None):
    m = henon_dt()
    return dataclasses.replace(m, W=Box([0.0, 0.0], [0.0, 0.0]), V=Box([0.0], [0.0]),
                               X0=m.X0 if X0 is None else X0, X0_base=None)


def test_step_plant_henon():
    m = henon_dt()
    x, y = sim.step_plant(m, np.zeros(2), np.zeros(2), np.array([0.03]))
    np.testing.assert_allclose(x, [0.05, 0.0])
    np.testing.assert_allclose(y, [0.08])


def test_step_plant_ct_constant_and_exponential():
    m0 = ct_linear(0.0)
    x = np.array([2.5])
    for dt in (1e-3, 0.1, 1.0):
        np.testing.assert_array_equal(sim.step_plant(m0, x, [0.0], [0.0], dt)[0], x)
    m = ct_linear(-1.0)
    x = np.array([1.0])
    for _ in range(100):
        x, _ = sim.step_plant(m, x, [0.0], [0.0], 0.01)
    assert abs(x[0] - np.exp(-1.0)) <= 1e-8


def test_step_plant_requires_dt():
    with pytest.raises(ValueError):
        sim.step_plant(ct_linear(-1.0), [1.0], [0.0], [0.0])


def test_degenerate_box_tracks_plant(henon, rng):
    m = quiet_henon()
    dec, _ = decompose_model(m)
    obs = sim.IntervalObserver(m, dec, henon.gain)
    x = m.X0.sample(rng)
    y = m.measure(x, np.zeros(1))
    fr = sim.step_observer(obs, sim.FramerState(x, x), y)
    x_next, _ = sim.step_plant(m, x, np.zeros(2), np.zeros(1))
    np.testing.assert_allclose(fr.xlow, x_next, atol=1e-14)
    np.testing.assert_allclose(fr.xup, x_next, atol=1e-14)


def test_linear_open_loop_is_interval_arithmetic(rng):
    A = np.array([[0.5, -0.3], [0.2, 0.1]])
    m = model_from_dict({"time_type": "DT", "A": A.tolist(), "B": np.eye(2).tolist(), "C": [[1.0, 0.0]],
                         "D": [[1.0]], "W": {"low": [0, 0], "up": [0, 0]}, "V": {"low": [0], "up": [0]},
                         "X0": {"low": [-1, -1], "up": [1, 1]}})
    dec, _ = decompose_model(m)
    obs = sim.IntervalObserver(m, dec, ObserverGain.zero(2, 1, "DT"))
    xl, xu = np.array([-1.0, 0.0]), np.array([0.5, 2.0])
    fr = sim.step_observer(obs, sim.FramerState(xl, xu), np.array([0.3]))
    lo, up = mo.interval_affine_bounds(A, xl, xu)
    np.testing.assert_allclose(fr.xlow, lo)
    np.testing.assert_allclose(fr.xup, up)


def test_henon_containment_100_runs(henon):
    for policy in ("uniform", "extreme-vertex"):
        tr = sim.run_batch(henon.model, henon.dec, henon.gain, 50, noise_policy=policy, seed=3, runs=100)
        rep = sim.containment_check(tr)
        assert rep.passed and rep.pass_rate == 1.0
        assert np.all(tr.framer_lows <= tr.framer_ups)
        assert rep.domain_exits == 0


def test_henon_trace_settles(henon):
    tr = sim.run(henon.model, henon.dec, henon.gain, 50, seed=0)
    assert len(tr.times) == 51 and tr.true_states.shape == (51, 2)
    assert np.all(tr.error_norms >= 0)
    gm = sim.gain_metrics(tr, sim.noise_widths(henon.model))
    assert gm.settled
    assert gm.steady_state_error < 0.1 * gm.sup_error
    assert gm.empirical_l2_gain <= henon.gain.gamma


def test_zero_noise_point_start_has_no_error(henon):
    m = quiet_henon(X0=Box([0.3, -0.2], [0.3, -0.2]))
    dec, _ = decompose_model(m)
    tr = sim.run(m, dec, henon.gain, 30, noise_policy="zero")
    np.testing.assert_allclose(tr.error_norms, 0.0, atol=1e-12)


def test_nesting_when_x0_shrinks(henon):
    m = henon.model
    small = Box(m.X0.low * 0.5, m.X0.up * 0.5)
    big = sim.run_batch(m, henon.dec, henon.gain, 40, seed=7, runs=10)
    x0 = big.true_states[:, 0].copy()
    x0 = np.clip(x0, small.low, small.up)
    a = sim.run_batch(m, henon.dec, henon.gain, 40, seed=7, runs=10, x0=x0)
    b = sim.run_batch(m, henon.dec, henon.gain, 40, seed=7, runs=10, x0=x0, X0=small)
    assert np.all(b.framer_lows >= a.framer_lows - 1e-12)
    assert np.all(b.framer_ups <= a.framer_ups + 1e-12)


def test_pendulum_transformed_containment(pendulum_feasible):
    s = pendulum_feasible
    tr = sim.run_batch(s.model, s.dec, s.gain, 5.0, 1e-3, seed=1, runs=4)
    rep = sim.containment_check(tr)
    assert rep.passed and rep.domain_exits == 0
    assert np.all(np.isfinite(tr.error_norms)) and tr.error_norms[:, -1].max() < tr.error_norms[:, 0].min()
    base = s.model.to_base(tr.true_states)
    assert np.all(np.isfinite(base[..., 2]))


def test_containment_negative_control(henon):
    tr = sim.run(henon.model, henon.dec, henon.gain, 20, seed=0)
    bad = dataclasses.replace(tr, framer_ups=tr.framer_ups.copy())
    bad.framer_ups[7, 1] = tr.true_states[7, 1] - 0.5
    rep = sim.containment_check(bad)
    assert len(rep.violations) == 1
    v = rep.violations[0]
    assert (v.step, v.t, v.coord) == (7, 7.0, 1)
    assert rep.pass_rate == 0.0


def test_containment_empty_trace():
    e = np.zeros((0, 2))
    tr = sim.SimulationTrace(np.zeros(0), e, e, e, np.zeros((0, 1)), e, np.zeros((0, 1)))
    rep = sim.containment_check(tr)
    assert rep.passed and rep.violations == []


def _const_trace(c, steps):
    c = np.asarray(c, float)
    z = np.zeros((steps, c.size))
    return sim.SimulationTrace(np.arange(steps, dtype=float), z, z, z + c, np.zeros((steps, 1)), z, z)


def test_gain_metrics_trivial_cases():
    gm = sim.gain_metrics(_const_trace([0.0, 0.0], 10), np.zeros(3))
    assert gm.empirical_l2_gain is None and gm.sup_error == 0 and gm.steady_state_error == 0
    gm = sim.gain_metrics(_const_trace([3.0, 4.0], 10), [1.0, 0.0, 0.0])
    assert gm.empirical_l2_gain == pytest.approx(5.0)
    assert gm.sup_error == pytest.approx(5.0) and gm.steady_state_error == pytest.approx(5.0)


def test_run_is_deterministic(henon):
    a = sim.run(henon.model, henon.dec, henon.gain, 30, seed=11)
    b = sim.run(henon.model, henon.dec, henon.gain, 30, seed=11)
    assert a.to_csv() == b.to_csv()
    c = sim.run(henon.model, henon.dec, henon.gain, 30, seed=12)
    assert a.to_csv() != c.to_csv()


def test_csv_layout_and_round_trip(henon):
    tr = sim.run(henon.model, henon.dec, henon.gain, 5, seed=0)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "x1", "x2", "xlow1", "xlow2", "xup1", "xup2", "y1", "eps_norm"]
    data = np.array(rows[1:], float)
    np.testing.assert_array_equal(data[:, 1:3], tr.true_states)
    np.testing.assert_array_equal(data[:, -1], tr.error_norms)


def test_bad_arguments(henon):
    with pytest.raises(ValueError):
        sim.run(henon.model, henon.dec, henon.gain, 0)
    with pytest.raises(ValueError):
        sim.run(henon.model, henon.dec, henon.gain, 5, noise_policy="gaussian")
    with pytest.raises(ValueError):
        sim.IntervalObserver(henon.model, henon.dec, ObserverGain.zero(3, 1, "DT"))


def test_held_measurement_breaks_large_injection(pendulum_feasible):
    # the injected term K y is a known signal; holding y over a step feeds
    # the framers something the plant never saw, which co-integration avoids
    s = pendulum_feasible
    held = sim.run_batch(s.model, s.dec, s.gain, 2.0, 1e-3, seed=0, runs=2, measurement="zoh")
    cont = sim.run_batch(s.model, s.dec, s.gain, 2.0, 1e-3, seed=0, runs=2, measurement="continuous")
    assert not sim.containment_check(held).passed
    assert sim.containment_check(cont).passed
