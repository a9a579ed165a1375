import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gqp_lab import surfaces as S
from gqp_lab.errors import InvalidInputError
from gqp_lab.potential import NATURAL, PhysicalUnits, discrepancy_report, potential_fields


def test_sphere_forms():
    _, _, sd = potential_fields(S.sphere(), 0.1, 0.2)
    assert sd.V_dacosta == 0.0 and not np.signbit(sd.V_dacosta)
    assert sd.grad_n_sq == pytest.approx(2.0, abs=1e-14)
    assert sd.div_n_sq == pytest.approx(4.0, abs=1e-13)
    # normal-field forms disagree with the curvature form on a non-minimal surface
    assert sd.V_paper7 == pytest.approx(-3.0, abs=1e-13)
    assert sd.V_paper8 == pytest.approx(-6.0, abs=1e-13)
    assert sd.V_corrected == pytest.approx(0.0, abs=1e-13)


def test_catenoid_neck_forms():
    _, _, sd = potential_fields(S.catenoid(), 0.0, 0.0)
    assert sd.V_dacosta == pytest.approx(-1.0, abs=1e-14)
    assert sd.V_paper7 == pytest.approx(-1.0, abs=1e-14)
    assert sd.V_paper8 == pytest.approx(-2.0, abs=1e-14)


def test_torus_outer_equator_potential():
    _, _, sd = potential_fields(S.torus(), 0.0, 0.0)
    # kappa = 1 and 1/3: -(1/4)(2/3)^2
    assert sd.V_dacosta == pytest.approx(-1.0 / 9.0, abs=1e-15)


@given(x=st.floats(-4, 4), c=st.floats(0.2, 5.0))
def test_catenoid_potential_closed_form(x, c):
    t = x * c
    _, _, sd = potential_fields(S.catenoid(c), 0.0, t)
    rho = c * math.cosh(t / c)
    assert sd.V_dacosta == pytest.approx(-c * c / rho ** 4, rel=1e-12)


@given(hbar=st.floats(0.1, 10), mass=st.floats(0.1, 10))
def test_units_scale_linearly(hbar, mass):
    units = PhysicalUnits(hbar, mass)
    _, _, a = potential_fields(S.torus(), 0.2, 1.0, NATURAL)
    _, _, b = potential_fields(S.torus(), 0.2, 1.0, units)
    assert b.V_dacosta == pytest.approx(a.V_dacosta * units.kinetic, rel=1e-12)
    assert b.p_sq == pytest.approx(-2 * mass * b.V_dacosta, rel=1e-12)


@pytest.mark.parametrize("hbar,mass", [(0.0, 1.0), (1.0, -1.0), (float("nan"), 1.0)])
def test_bad_units(hbar, mass):
    with pytest.raises(InvalidInputError):
        PhysicalUnits(hbar, mass)


@pytest.mark.parametrize("ch", [S.sphere(), S.catenoid(), S.torus(), S.bilayer_neck()], ids=lambda c: c.kind)
def test_corrected_form_matches(ch):
    u, v = S.sample_points(ch, 1000, seed=5)
    rep = discrepancy_report(ch, u, v)
    assert rep.corrected_ok
    assert rep.max_scaled_corrected < 1e-10


def test_catenoid_discrepancy():
    ch = S.catenoid()
    u, v = S.sample_points(ch, 500, seed=2)
    rep = discrepancy_report(ch, u, v)
    # on a minimal surface V_paper8 = 2 V_dacosta and V_paper7 = V_dacosta
    assert rep.max_rel_paper8 == pytest.approx(1.0, abs=1e-10)
    assert rep.max_rel_paper7 < 1e-10
    # minimal-surface claim K = (grad n)^2 fails: (grad n)^2 = -2K
    assert rep.minimal_points == 500
    assert rep.mean_grad_n_sq_over_K == pytest.approx(-2.0, abs=1e-10)


def test_sphere_discrepancy_is_absolute_only():
    ch = S.sphere()
    u, v = S.sample_points(ch, 200, seed=2)
    rep = discrepancy_report(ch, u, v)
    assert rep.max_rel_paper8 is None       # V_dacosta vanishes everywhere
    assert rep.max_abs_paper8 == pytest.approx(6.0, abs=1e-12)


def test_discrepancy_needs_samples():
    with pytest.raises(InvalidInputError):
        discrepancy_report(S.torus(), np.zeros(10), np.zeros(10))
