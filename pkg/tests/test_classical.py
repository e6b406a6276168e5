from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdexact import classical as cl
from rdexact.verify import Grid

SQ2 = math.sqrt(2.0)


def _fig3():
    return cl.dlv2(2, 1, SQ2, SQ2, 2, 2, branch="ratio")


def _burgers_shipped():
    return cl.burgers(**cl.burgers_exact(2.0, 2.0, 0.025))


ALL = {
    "linear_rd": lambda: cl.linear_rd(1, 100, 1),
    "dlv2": _fig3,
    "dlv3": lambda: cl.dlv3(4, 1),
    "gray_scott": lambda: cl.gray_scott(0.125),
    "burgers": _burgers_shipped,
}


# --- linear -------------------------------------------------------------------

def test_linear_rd_values():
    s = cl.linear_rd(1, 100, 1)
    assert s.u(0.0, 0.0) == pytest.approx(2.0)
    assert s.v(0.0, 0.0) == pytest.approx(99.0)
    tau = np.linspace(0, 3, 7)
    assert np.max(np.abs(s.u(math.pi / 2, tau))) < 1e-15
    assert np.all(cl.linear_rd(1, 5, 5).v(np.linspace(-3, 3, 9), 0.7) == 0.0)


# --- two species ----------------------------------------------------------------

def test_dlv2_fig3_constants():
    d = _fig3().derived
    assert d["nu0"] == pytest.approx(0.5)
    assert d["nu1"] == pytest.approx(-SQ2 / 4)
    assert d["A"] == pytest.approx(1.0)
    assert d["B"] == pytest.approx(SQ2 / 2)
    assert d["regime"] == "exclusion"


def test_dlv2_far_field_and_asymptotic_state():
    s = _fig3()
    assert s.u(60.0, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert s.v(60.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    regime, limit = s.asymptotic_state()
    assert regime == "exclusion"
    assert limit == pytest.approx((SQ2, 0.0))
    # tau -> infinity at fixed xi
    assert s.u(0.0, 50.0) == pytest.approx(SQ2, abs=1e-3)
    assert abs(s.v(0.0, 50.0)) <= 1e-3


def test_dlv2_coexistence_branch():
    s = cl.dlv2(1, 1, 2, 1, 1, 2, branch="zero")
    regime, limit = s.asymptotic_state()
    assert regime == "coexistence"
    assert limit == pytest.approx((1 / 3, 1 / 3), abs=1e-15)
    xi = np.linspace(-10, 10, 41)
    assert np.max(np.abs(s.u(xi, 80.0) - 1 / 3)) <= 1e-3
    assert np.max(np.abs(s.v(xi, 80.0) - 1 / 3)) <= 1e-3
    assert cl.residual_constant_system(s).passed


def test_dlv2_preconditions():
    with pytest.raises(cl.ClassicalError):
        cl.dlv2(2, 1, SQ2, SQ2, 2, 0, branch="ratio")
    with pytest.raises(cl.ClassicalError):
        cl.dlv2(2, 1, 2, 1, 1, 2, branch="zero")  # a1 != a2
    with pytest.raises(cl.ClassicalError):
        cl.dlv2(1, 1, SQ2, SQ2, 2, 2, branch="ratio")  # A = 0
    with pytest.raises(cl.ClassicalError, match="inconsistent"):
        cl.dlv2(3, 1, 1, 2, 2, 3, branch="ratio")
    with pytest.raises(cl.ClassicalError):
        cl.dlv2(2, 1, SQ2, SQ2, 2, 2, branch="other")


# --- three species ------------------------------------------------------------

def test_dlv3_limits():
    s = cl.dlv3(4, 1)
    far = s.fields(60.0, 0.0)
    assert (far["u"], far["v"], far["w"]) == pytest.approx((0.0, 4.0, 0.0), abs=1e-12)
    near = s.fields(-60.0, 0.0)
    assert (near["u"], near["v"], near["w"]) == pytest.approx((4 * (3 - 1), 0.0, 2 * (4 - 3)),
                                                              abs=1e-12)


def test_dlv3_positive_on_a_dense_sample():
    s = cl.dlv3(4, 1)
    rng = np.random.default_rng(0)
    # keep |xi - theta tau| < 15 so 1 - tanh stays above double underflow
    xi, tau = rng.uniform(-8, 8, 10_000), rng.uniform(0, 6, 10_000)
    f = s.fields(xi, tau)
    assert all(np.all(f[k] > 0) for k in ("u", "v", "w"))


def test_dlv3_precondition():
    with pytest.raises(cl.ClassicalError):
        cl.dlv3(2.5, 1)
    with pytest.raises(cl.ClassicalError):
        cl.dlv3(12.5, 1)


# --- Gray-Scott -----------------------------------------------------------------

def test_gray_scott_speed():
    s = cl.gray_scott(0.125)
    expected = SQ2 * (1 - 3 * math.sqrt(0.5)) / 4
    assert s.derived["theta"] == pytest.approx(expected, rel=1e-14)
    assert s.derived["theta"] == pytest.approx(-0.396447, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 0.25))
def test_gray_scott_mass_is_one(b1):
    s = cl.gray_scott(b1)
    xi, tau = np.meshgrid(np.linspace(-30, 30, 100), np.linspace(0, 10, 100))
    f = s.fields(xi, tau)
    assert np.max(np.abs(f["u"] + f["v"] - 1.0)) <= 1e-12


def test_gray_scott_degenerate_and_invalid():
    s = cl.gray_scott(0.25)
    assert np.all(np.isfinite(s.u(np.linspace(-5, 5, 11), 1.0)))
    assert cl.residual_constant_system(s).passed
    with pytest.raises(cl.ClassicalError, match=r"b1 out of \(0, 1/4\]"):
        cl.gray_scott(0.3)
    with pytest.raises(cl.ClassicalError, match="b2 = 0"):
        cl.gray_scott(0.125, 0.1)


# --- Burgers --------------------------------------------------------------------

def test_burgers_formula_defaults():
    s = cl.burgers(2, 1, 2, 2, B=-1.0)
    assert s.derived["A"] == pytest.approx(111 / 8)
    s = cl.burgers(2, 1, 2, 2, A=-111 / 8, B=-1.0)
    assert s.derived["A"] == pytest.approx(-111 / 8)


def test_burgers_kink_identities():
    s = _burgers_shipped()
    A, B = s.derived["A"], s.derived["B"]
    tau = np.linspace(0, 2, 9)
    xi0 = (10 + 2 * A * tau) / 20
    np.testing.assert_allclose(s.u(xi0, tau), B, rtol=0, atol=1e-15)
    xi, tau = np.meshgrid(np.linspace(-10, 10, 80), np.linspace(0, 2, 80))
    u, v = s.u(xi, tau), s.v(xi, tau)
    mask = np.abs(v) > 1e-6
    ratio = (u[mask] - B) / v[mask]
    assert np.max(np.abs(ratio + 2 * A / B)) <= 1e-10 * abs(2 * A / B)


def test_burgers_exact_parameter_set():
    p = cl.burgers_exact(2.0, 2.0, 0.025)
    assert p["b1"] == pytest.approx(2.05)
    assert p["b2"] == pytest.approx(82.0)
    assert p["B"] == pytest.approx(1 / 800)
    assert p["K"] == pytest.approx(400 / 39)
    assert cl.residual_constant_system(cl.burgers(**p)).passed


def test_inconsistent_burgers_parameters_do_not_solve_the_system():
    # negative control: the naive kink constants leave a large residual
    for A in (111 / 8, -111 / 8):
        s = cl.burgers(2, 1, 2, 2, A=A, B=-1.0 if A > 0 else 1.0)
        rep = cl.residual_constant_system(s)
        assert not rep.passed
        assert rep.max_abs > 1.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0), st.floats(0.01, 0.1))
def test_burgers_exact_family_is_exact(c1, c2, A):
    s = cl.burgers(**cl.burgers_exact(c1, c2, A))
    assert cl.residual_constant_system(s, cl.standard_grid(s, n=41)).passed


# --- residuals ------------------------------------------------------------------

@pytest.mark.parametrize("family", sorted(ALL))
def test_every_family_solves_its_system(family):
    rep = cl.residual_constant_system(ALL[family]())
    assert rep.passed, rep.to_dict()
    assert rep.max_abs <= 1e-6


def test_linear_rd_on_the_documented_grid():
    s = cl.linear_rd(1, 100, 1)
    g = Grid(-2 * math.pi, 2 * math.pi, 101, 0.0, 2.0, 101)
    assert cl.residual_constant_system(s, g, h_t=2e-4).passed
    g = Grid(-10, 10, 101, 0, 3, 101)
    assert cl.residual_constant_system(_fig3(), g).max_abs <= 1e-6


@pytest.mark.parametrize("family", sorted(ALL))
def test_perturbed_solution_fails(family):
    s = ALL[family]().perturbed("u", lambda old, xi, tau: old + 0.01)
    rep = cl.residual_constant_system(s)
    assert not rep.passed
    assert rep.max_abs >= 1e-3


@pytest.mark.parametrize("family", sorted(ALL))
def test_parameter_records_round_trip(family):
    s = ALL[family]()
    again = cl.from_dict(s.to_dict())
    xi, tau = np.meshgrid(np.linspace(-3, 3, 11), np.linspace(0, 1, 11))
    a, b = s.fields(xi, tau), again.fields(xi, tau)
    for k in s.field_names:
        np.testing.assert_array_equal(a[k], b[k])


def test_from_dict_errors():
    with pytest.raises(cl.ClassicalError, match="missing"):
        cl.from_dict({"family": "dlv3", "a1": 4})
    with pytest.raises(cl.ClassicalError, match="unknown family"):
        cl.from_dict({"family": "kdv"})
