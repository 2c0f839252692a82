import numpy as np
import pytest

from interval_observer.decomp import (decompose_model, is_sign_stable, jss_split, selectors,
                                      tight_decomposition, width_bounds)
from interval_observer.model import PENDULUM_PARAMS, ct_pendulum, henon_dt
from oracles import width_bound_excess, random_boxes, tightness_errors
from test_model import linear_model


def test_jss_split_scalar():
    H, lo, up = jss_split([[-0.2]], [[0.2]], "lower")
    assert H[0, 0] == -0.2 and lo[0, 0] == 0.0 and up[0, 0] == pytest.approx(0.4)
    H, lo, up = jss_split([[-0.2]], [[0.2]], "upper")
    assert H[0, 0] == 0.2 and lo[0, 0] == pytest.approx(-0.4) and up[0, 0] == 0.0


def test_jss_split_linear_and_mask():
    A = np.array([[1.0, -2.0], [0.5, 3.0]])
    H, lo, up = jss_split(A, A)
    np.testing.assert_array_equal(H, A)
    assert not lo.any() and not up.any()
    H, _, _ = jss_split(A - 1, A + 1, np.array([[True, False], [False, True]]))
    np.testing.assert_array_equal(H, [[2.0, -3.0], [-0.5, 4.0]])
    with pytest.raises(ValueError):
        jss_split(A + 1, A)
    with pytest.raises(ValueError):
        jss_split(A, A, "middle")


def test_henon_split():
    m = henon_dt()
    H, lo, up = jss_split(m.Jf_low, m.Jf_up, "lower")
    np.testing.assert_allclose(H[0], [-0.2, 1.0, 1.0, 0.0])
    np.testing.assert_allclose(up, [[0.4, 0, 0, 0], [0, 0, 0, 0]], atol=1e-15)
    assert not lo.any()


def test_tight_decomposition_monotone_cases():
    cube = lambda z: z ** 3
    neg = lambda z: -z
    assert tight_decomposition(cube, selectors([[0.0]], [[1.0]]), [2.0], [-1.0])[0] == 8.0
    assert tight_decomposition(neg, selectors([[-1.0]], [[0.0]]), [2.0], [-1.0])[0] == 1.0
    z = np.array([0.3])
    assert tight_decomposition(cube, np.ones((1, 1)), z, z)[0] == cube(z)[0]


def test_selectors_reject_sign_change():
    assert not is_sign_stable([[-1.0]], [[1.0]])
    with pytest.raises(ValueError):
        selectors([[-1.0]], [[1.0]])
    np.testing.assert_array_equal(selectors([[0.0, -1.0]], [[0.0, 0.0]]), [[1.0, 0.0]])


def test_width_bounds_examples():
    assert width_bounds([[0.0]], [[0.4]])[0, 0] == 0.4
    assert width_bounds([[-0.4]], [[0.0]])[0, 0] == 0.4
    assert width_bounds([[0.0]], [[0.0]])[0, 0] == 0.0


def test_decompose_henon():
    dec, wb = decompose_model(henon_dt())
    np.testing.assert_allclose(dec.A, [[-0.2, 1.0], [0.3, 0.0]])
    np.testing.assert_allclose(dec.B, np.eye(2))
    np.testing.assert_allclose(dec.C, [[1.0, 0.0]])
    np.testing.assert_allclose(dec.D, [[1.0]])
    np.testing.assert_allclose(wb.Fphi_x, [[0.4, 0.0], [0.0, 0.0]])
    assert not wb.Fpsi_x.any() and not wb.Fpsi_v.any()
    z = np.array([[0.5, -0.2, 0.3]])
    np.testing.assert_allclose(dec.psi(z), 0.0, atol=1e-15)


def test_decompose_linear_model():
    dec, wb = decompose_model(linear_model([[0.5, 0.1], [0.0, 0.2]], C=[[1.0, 1.0]]))
    for F in (wb.Fphi_x, wb.Fphi_w, wb.Fpsi_x, wb.Fpsi_v):
        assert not F.any()
    z = np.random.default_rng(0).normal(size=(4, 4))
    np.testing.assert_allclose(dec.phi(z), 0.0, atol=1e-14)


def test_decompose_pendulum_width():
    dec, wb = decompose_model(ct_pendulum())
    assert wb.Fphi_x[1, 0] == pytest.approx(2 * PENDULUM_PARAMS["a1"])
    assert wb.Fphi_x[1, 0] == pytest.approx(71.26)


@pytest.mark.parametrize("build", [henon_dt, ct_pendulum])
def test_reconstruction(build, rng):
    m = build()
    dec, _ = decompose_model(m)
    x = m.from_base(m.domain.sample(rng, 100))
    w, v = m.W.sample(rng, 100), m.V.sample(rng, 100)
    f = x @ dec.A.T + w @ dec.B.T + dec.phi(np.hstack([x, w]))
    h = x @ dec.C.T + v @ dec.D.T + dec.psi(np.hstack([x, v]))
    np.testing.assert_allclose(f, m.f(x, w), rtol=0, atol=1e-12 * (1 + np.abs(f).max()))
    np.testing.assert_allclose(h, m.h(x, v), rtol=0, atol=1e-12 * (1 + np.abs(h).max()))


@pytest.mark.parametrize("build", [henon_dt, ct_pendulum])
def test_decomposition_axioms(build, rng):
    m = build()
    dec, _ = decompose_model(m)
    lo, up = random_boxes(m, 200, rng)
    mid = lo + (up - lo) * rng.random(lo.shape)
    zd = lambda a, b: tight_decomposition(dec.phi, dec.sel_phi, a, b)
    # non-decreasing in the first argument, non-increasing in the second
    assert np.all(zd(up, mid) >= zd(mid, mid) - 1e-9)
    assert np.all(zd(mid, lo) >= zd(mid, mid) - 1e-9)
    np.testing.assert_allclose(zd(mid, mid), dec.phi(mid), rtol=0, atol=0)


@pytest.mark.parametrize("build", [henon_dt, ct_pendulum])
def test_tightness_small_sample(build, rng):
    m = build()
    dec, _ = decompose_model(m)
    lo, up = random_boxes(m, 20, rng)
    worst = max(tightness_errors(dec.phi, dec.sel_phi, dec.Jphi_low, dec.Jphi_up, a, b) for a, b in zip(lo, up))
    assert worst <= 1e-9


@pytest.mark.parametrize("build", [henon_dt, ct_pendulum])
def test_width_bound_small_sample(build, rng):
    m = build()
    dec, wb = decompose_model(m)
    lo, up = random_boxes(m, 50, rng)
    F = np.hstack([wb.Fphi_x, wb.Fphi_w])
    assert width_bound_excess(dec.phi, dec.sel_phi, F, lo, up) <= 1e-12
