import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gqp_lab import surfaces as S
from gqp_lab.errors import InvalidInputError, IrregularPointError, OutOfDomainError

BUILTINS = {
    "sphere": S.sphere(),
    "catenoid": S.catenoid(),
    "torus": S.torus(),
    "bilayer-neck": S.bilayer_neck(),
}


def test_sphere_chart_origin_and_outward_normal():
    pt, cv, _ = S.geometry(S.sphere(), 0.0, 0.0)
    np.testing.assert_allclose(pt.position, [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(cv.n, [1.0, 0.0, 0.0], atol=1e-15)
    assert cv.K == pytest.approx(1.0, abs=1e-14)
    # outward normal: b_ij = n . X_ij gives negative curvatures on a convex surface
    assert cv.kappa1 == pytest.approx(-1.0, abs=1e-14)
    assert cv.kappa2 == pytest.approx(-1.0, abs=1e-14)
    assert cv.discriminant == 0.0


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_sphere_is_umbilic_everywhere(a):
    ch = S.sphere(a)
    u, v = S.sample_points(ch, 200, seed=1)
    _, cv, _ = S.geometry(ch, u, v)
    assert np.all(cv.discriminant == 0.0)
    np.testing.assert_allclose(cv.K, 1.0 / a ** 2, rtol=1e-13)
    np.testing.assert_allclose(np.abs(cv.H), 1.0 / a, rtol=1e-13)


def test_catenoid_neck_curvatures():
    _, cv, sd = S.geometry(S.catenoid(1.0), 0.3, 0.0)
    assert cv.kappa1 == pytest.approx(1.0, abs=1e-14)
    assert cv.kappa2 == pytest.approx(-1.0, abs=1e-14)
    assert cv.H == pytest.approx(0.0, abs=1e-15)
    assert cv.K == pytest.approx(-1.0, abs=1e-14)
    assert sd.grad_n_sq == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("theta", [0.0, 0.7, 2.0, math.pi - 1e-3])
def test_torus_curvatures_closed_form(theta):
    R, r = 2.0, 1.0
    _, cv, _ = S.geometry(S.torus(R, r), 0.4, theta)
    c = math.cos(theta)
    assert cv.K == pytest.approx(c / (r * (R + r * c)), abs=1e-14)
    assert abs(cv.H) == pytest.approx((R + 2 * r * c) / (2 * r * (R + r * c)), abs=1e-14)
    assert sorted(np.abs([cv.kappa1, cv.kappa2])) == pytest.approx(
        sorted([1.0 / r, abs(c / (R + r * c))]), abs=1e-14)


def test_torus_outer_equator_values():
    # K = 1/3 and |H| = 2/3 at theta = 0 for R = 2, r = 1
    _, cv, _ = S.geometry(S.torus(), 0.0, 0.0)
    assert cv.K == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert abs(cv.H) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_plane_is_flat():
    _, cv, sd = S.geometry(S.plane(), [0.1, 2.0], [0.5, 4.0])
    assert np.all(cv.K == 0) and np.all(cv.H == 0)
    assert np.all(sd.grad_n_sq == 0)


def test_bilayer_asymptotically_flat():
    _, cv, _ = S.geometry(S.bilayer_neck(), 0.0, np.array([50.0, -50.0]))
    assert np.all(np.abs(cv.K) < 1e-5)


def test_sphere_pole_is_irregular():
    with pytest.raises(IrregularPointError):
        S.evaluate(S.sphere(), 0.0, math.pi / 2)


def test_out_of_domain():
    with pytest.raises(OutOfDomainError):
        S.evaluate(S.sphere(), 0.0, 2.0)
    with pytest.raises(OutOfDomainError):
        S.evaluate(S.catenoid(), 0.0, float("nan"))


def test_periodic_coordinates_wrap():
    ch = S.torus()
    a = S.evaluate(ch, 0.3, 0.2).position
    b = S.evaluate(ch, 0.3 + 4 * math.pi, 0.2 - 2 * math.pi).position
    np.testing.assert_allclose(a, b, atol=1e-14)


@pytest.mark.parametrize("kind,params", [("torus", {"R": 1.0, "r": 1.0}), ("torus", {"R": 0.5, "r": 1.0}),
                                         ("sphere", {"a": -1.0}), ("catenoid", {"c": 0.0}),
                                         ("bilayer-neck", {"Rb": float("inf")})])
def test_invalid_parameters_rejected(kind, params):
    with pytest.raises(InvalidInputError):
        S.make_chart(kind, **params)


def test_unknown_surface_and_parameter():
    with pytest.raises(InvalidInputError):
        S.make_chart("klein-bottle")
    with pytest.raises(InvalidInputError):
        S.make_chart("sphere", c=1.0)


def test_make_chart_defaults():
    ch = S.make_chart("torus", R=3.0)
    assert ch.params == {"R": 3.0, "r": 1.0}
    assert ch.compact and ch.euler_characteristic == 0


def test_catenoid_polar_metric_tends_to_flat():
    g_rr, g_pp = S.catenoid_polar_metric(S.catenoid(), np.array([10.0, 100.0]))
    # g_rr = r^2 / (r^2 - c^2) exactly
    np.testing.assert_allclose(g_rr, [100 / 99, 10000 / 9999], rtol=1e-12)
    np.testing.assert_allclose(g_pp, 1.0, rtol=1e-14)
    with pytest.raises(OutOfDomainError):
        S.catenoid_polar_metric(S.catenoid(), 0.5)


def test_custom_revolution_matches_builtin():
    R, r = 2.0, 1.0
    curve = lambda t: (R + r * np.cos(t), -r * np.sin(t), -r * np.cos(t),  # noqa: E731
                       r * np.sin(t), r * np.cos(t), -r * np.sin(t))
    ch = S.revolution(curve, (-math.pi, math.pi), periodic_v=True, euler_characteristic=0)
    u, v = S.sample_points(ch, 50, seed=3)
    a = S.geometry(ch, u, v)[1]
    b = S.geometry(S.torus(R, r), u, v)[1]
    np.testing.assert_allclose(a.K, b.K, atol=1e-14)


# --- identities at random points --------------------------------------------

@pytest.mark.parametrize("kind", sorted(BUILTINS))
def test_normal_field_identities(kind):
    ch = BUILTINS[kind]
    u, v = S.sample_points(ch, 1000, seed=11)
    _, cv, sd = S.geometry(ch, u, v)
    scale = cv.kappa1 ** 2 + cv.kappa2 ** 2 + 1e-300
    assert np.max(np.abs(sd.grad_n_sq - sd.identity_grad_n_sq) / scale) < 1e-10
    assert np.max(np.abs(sd.div_n - sd.identity_div_n) / np.sqrt(scale)) < 1e-10
    assert np.max(np.abs(sd.n_lap_n + sd.div_n_sq - 2 * cv.K) / scale) < 1e-10
    # degree density is K sqrt(g)
    assert np.max(np.abs(sd.degree_density - cv.K * cv.sqrt_g) / (scale * cv.sqrt_g)) < 1e-10


@given(gap=st.floats(0.05, 4.0), r=st.floats(0.2, 1.0), u=st.floats(0, 2 * math.pi),
       v=st.floats(-math.pi, math.pi))
def test_torus_identities_property(gap, r, u, v):
    ch = S.torus(r + gap, r)
    _, cv, sd = S.geometry(ch, u, v)
    scale = cv.kappa1 ** 2 + cv.kappa2 ** 2
    assert abs(sd.grad_n_sq - (4 * cv.H ** 2 - 2 * cv.K)) <= 1e-10 * scale
    assert abs(sd.div_n + 2 * cv.H) <= 1e-10 * math.sqrt(scale)
    assert cv.kappa1 >= cv.kappa2


@given(c=st.floats(0.1, 10.0), u=st.floats(0, 2 * math.pi), x=st.floats(-3.0, 3.0))
def test_catenoid_minimal_property(c, u, x):
    _, cv, sd = S.geometry(S.catenoid(c), u, x * c)
    k = abs(cv.K)
    assert abs(cv.H) <= 1e-12 * math.sqrt(k)
    # minimal surface: (grad n)^2 = -2K
    assert sd.grad_n_sq == pytest.approx(-2 * cv.K, rel=1e-10)


@given(a=st.floats(0.1, 10.0), lam=st.floats(0.2, 5.0), u=st.floats(0, 2 * math.pi), x=st.floats(-1.2, 1.2))
def test_curvature_scaling_property(a, lam, u, x):
    k1 = S.geometry(S.sphere(a), u, x)[1].K
    k2 = S.geometry(S.sphere(a * lam), u, x)[1].K
    assert k2 == pytest.approx(k1 / lam ** 2, rel=1e-12)
