from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdexact import riccati as ric
from rdexact.coeffexpr import CoeffSet, ExprError, parse

EX1A = CoeffSet(a=1.0, c=-1.0, d=-1.0)
HEAT = CoeffSet(a=1.0)
# nonzero f and g so the kernel quadratures are exercised
DRIFT = CoeffSet(a=1.0, b=parse("0.1"), c=-1.0, d=-1.0, f=parse("0.3"), g=parse("cos(t)"))


def test_ex1a_basis():
    basis = ric.build_characteristic(EX1A, (0.0, 3.0))
    t = np.linspace(0.0, 3.0, 61)
    np.testing.assert_allclose(basis.eta(t), 2.0, atol=1e-14)
    np.testing.assert_allclose(basis.sigma(t), 0.0, atol=1e-14)
    np.testing.assert_allclose(basis.mu0(t), np.exp(2 * t) - 1, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(basis.mu1(t), 1.0, rtol=1e-8)
    np.testing.assert_allclose(basis.W(t), np.exp(t), rtol=1e-8)
    assert not basis.quadratures


def test_heat_kernel_basis_and_kernel():
    basis = ric.build_characteristic(HEAT, (0.0, 2.0))
    t = np.linspace(0, 2, 21)
    np.testing.assert_allclose(basis.mu0(t), 2 * t, atol=1e-10)
    np.testing.assert_allclose(basis.W(t), 1.0, atol=1e-12)
    k = ric.kernel_at(basis, 1.0)
    assert (k.alpha0, k.beta0, k.gamma0) == pytest.approx((-0.25, 0.5, -0.25), abs=1e-10)
    assert (k.delta0, k.epsilon0, k.kappa0) == (0.0, 0.0, 0.0)


def test_half_diffusion_basis():
    basis = ric.build_characteristic(CoeffSet(a=0.5), (0.0, 3.0))
    t = np.linspace(0, 3, 31)
    np.testing.assert_allclose(basis.mu0(t), t, atol=1e-10)
    np.testing.assert_allclose(basis.mu1(t), 1.0, atol=1e-12)


def test_ex1a_kernel_closed_forms():
    basis = ric.build_characteristic(EX1A, (0.0, 3.0))
    t = np.linspace(0.2, 3.0, 40)
    k = ric.kernel_at(basis, t)
    e2 = np.exp(2 * t)
    np.testing.assert_allclose(k.beta0, np.exp(t) / (e2 - 1), rtol=1e-8)
    np.testing.assert_allclose(k.gamma0, -1 / (2 * (e2 - 1)) - 0.5, rtol=1e-8)
    with pytest.raises(ric.SingularPointError):
        ric.kernel_at(basis, 0.0)


def test_ex1a_propagate_matches_reference_closed_forms():
    basis = ric.build_characteristic(EX1A, (0.0, 3.0))
    state = ric.propagate(basis, ric.RiccatiInit())
    t = np.linspace(0, 3, 50)
    s = state(t)
    rel = lambda got, want: np.max(np.abs(got - want) / np.abs(want))
    assert rel(s["beta"], np.exp(-t)) <= 1e-8
    assert rel(s["mu"], np.exp(2 * t)) <= 1e-8
    np.testing.assert_allclose(s["gamma"], np.exp(-t) * np.sinh(t), rtol=1e-8, atol=1e-15)
    for name in ("alpha", "delta", "epsilon", "kappa"):
        np.testing.assert_allclose(s[name], 0.0, atol=1e-12)


def test_reference_closed_forms_of_shipped_states(shipped_runs):
    t = np.linspace(0, 3, 50)
    s = shipped_runs["ex_3_2_1"].state(t)
    np.testing.assert_allclose(s["mu"], 1 + np.tanh(t), rtol=1e-8)
    np.testing.assert_allclose(s["beta"], math.sqrt(2), rtol=1e-8)
    np.testing.assert_allclose(s["gamma"], t, rtol=1e-8, atol=1e-12)
    t = np.linspace(0.5, 2, 50)
    s = shipped_runs["ex_3_3_2"].state(t)
    np.testing.assert_allclose(s["mu"], np.cosh(t) ** 2, rtol=1e-8)
    np.testing.assert_allclose(s["beta"], np.cosh(t) ** -4, rtol=1e-8)
    np.testing.assert_allclose(s["gamma"], -np.cosh(t) ** -8 / 8, rtol=1e-8)
    np.testing.assert_allclose(s["delta"], 2 * np.cosh(t), rtol=1e-8)
    np.testing.assert_allclose(s["epsilon"], -np.cosh(t) ** -3 / 3, rtol=1e-8)
    np.testing.assert_allclose(s["kappa"], -np.cosh(t) ** 2, rtol=1e-8)
    np.testing.assert_allclose(s["alpha"], -1.0, rtol=1e-8)


def test_reduced_states_match_reference_forms():
    c = CoeffSet(a=parse("exp(-2*sin(t))"), c=parse("cos(t)"), g=parse("cos(t)"))
    s = ric.solve_reduced(c, (0.0, 2.0))
    t = np.linspace(0, 2, 50)
    v = s(t)
    np.testing.assert_allclose(v["beta"], np.exp(np.sin(t)), rtol=1e-9)
    np.testing.assert_allclose(v["gamma"], t, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(v["epsilon"], 1 - np.exp(np.sin(t)), rtol=1e-9, atol=1e-12)
    assert ric.verify_riccati(s).passed
    c2 = CoeffSet(a=parse("exp(t)/cos(sin(t))^2"), c=parse("-tan(sin(t))*cos(t)"),
                  g=parse("sin(t)/cos(sin(t))"))
    v = ric.solve_reduced(c2, (0.0, 1.0), beta0=1.0, gamma0=1.0, epsilon0=1.0)(t[:25] / 2)
    tt = t[:25] / 2
    np.testing.assert_allclose(v["beta"], np.cos(np.sin(tt)), rtol=1e-9)
    np.testing.assert_allclose(v["gamma"], np.exp(tt), rtol=1e-9)
    np.testing.assert_allclose(v["epsilon"], np.cos(tt), rtol=1e-9)


def test_solve_modified_examples():
    base = ric.propagate(ric.build_characteristic(HEAT, (0.0, 2.0)), ric.RiccatiInit())
    t = np.linspace(0, 2, 41)
    s = ric.solve_modified(base, "0", 0.7)(t)
    np.testing.assert_array_equal(s["kappa2"], 0.7)
    s = ric.solve_modified(base, "2", 0.0)(t)
    np.testing.assert_allclose(s["kappa2"], -np.log(np.abs(2 * t + 1)), atol=1e-10)
    np.testing.assert_allclose(s["kappa1"] + s["kappa2"], s["kappa"], atol=1e-14)
    s = ric.solve_modified(base, "3*sin(6*t)*exp(sin(3*t)^2)", 0.0)(t)
    np.testing.assert_allclose(s["kappa2"], -np.sin(3 * t) ** 2, atol=1e-9)


def test_solve_modified_cuts_at_log_singularity():
    base = ric.propagate(ric.build_characteristic(HEAT, (0.0, 2.0)), ric.RiccatiInit())
    s = ric.solve_modified(base, "-1", 0.0)  # log argument 1 - t vanishes at t = 1
    assert s.interval[1] == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ric.BlowUpError):
        s(1.5)


def test_verify_riccati_ex1a_and_negative_control():
    state = ric.propagate(ric.build_characteristic(EX1A, (0.0, 3.0)), ric.RiccatiInit())
    rep = ric.verify_riccati(state, EX1A, n=200)
    assert rep.passed and rep.max_abs <= 1e-7
    const = ric.RiccatiState.from_functions(
        {"mu": np.ones_like, "alpha": np.zeros_like, "beta": np.ones_like,
         "gamma": np.zeros_like, "delta": np.zeros_like, "epsilon": np.zeros_like,
         "kappa": np.zeros_like}, (0.0, 1.0))
    bad = ric.verify_riccati(const, CoeffSet(a=1.0))
    assert not bad.passed
    gamma = next(e for e in bad.equations if e.name == "gamma")
    assert gamma.max_abs == pytest.approx(1.0, abs=1e-9)


def test_blow_up_boundary_is_enforced():
    # heat kernel with alpha(0) = 1: mu = 1 - 4t vanishes at t = 1/4
    state = ric.propagate(ric.build_characteristic(HEAT, (0.0, 1.0)), ric.RiccatiInit(alpha=1.0))
    assert state.interval[1] == pytest.approx(0.25, abs=1e-6)
    assert state.blowup[1] == pytest.approx(0.25, abs=1e-6)
    with pytest.raises(ric.BlowUpError):
        state(0.5)


def test_precondition_errors():
    with pytest.raises(ric.RiccatiError):
        ric.build_characteristic(HEAT, (0.0, 1.0), t0=2.0)
    with pytest.raises(ExprError):
        ric.build_characteristic(CoeffSet(a=parse("t - 0.5")), (0.0, 1.0))
    with pytest.raises(ric.RiccatiError):
        ric.RiccatiInit(mu=0.0)
    with pytest.raises(ric.RiccatiError):
        ric.RiccatiInit(beta=float("nan"))
    basis = ric.build_characteristic(HEAT, (0.0, 1.0))
    with pytest.raises(ric.RiccatiError):
        ric.propagate(basis, ric.RiccatiInit(t0=0.5))


# --- properties ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _basis(coeff_name: str, t0: float):
    coeffs = {"ex1a": EX1A, "drift": DRIFT}[coeff_name]
    return ric.build_characteristic(coeffs, (t0, t0 + 1.0), t0=t0)


_inits = st.builds(
    ric.RiccatiInit,
    mu=st.sampled_from([1.0, -1.0]).flatmap(lambda s: st.floats(0.5, 2.0).map(lambda v: s * v)),
    alpha=st.floats(-0.2, 0.2),
    beta=st.floats(0.5, 2.0),
    gamma=st.floats(-1, 1),
    delta=st.floats(-1, 1),
    epsilon=st.floats(-1, 1),
    kappa=st.floats(-1, 1),
)


@settings(max_examples=40, deadline=None)
@given(_inits, st.sampled_from(["ex1a", "drift"]))
def test_propagation_is_continuous_at_t0(init, coeffs):
    state = ric.propagate(_basis(coeffs, 0.0), init)
    near = state(1e-6)
    for name in ric.COMPONENTS:
        v0 = getattr(init, name)
        assert abs(near[name] - v0) <= 1e-4 * (1 + abs(v0))


@settings(max_examples=25, deadline=None)
@given(_inits, st.floats(0.0, 0.5))
def test_reinitialising_midway_reproduces_the_state(init, s):
    t_star = 0.25
    first = ric.propagate(_basis("drift", 0.0), init)
    assert first.interval[1] >= t_star + s
    mid = first(t_star)
    second = ric.propagate(_basis("drift", t_star), ric.RiccatiInit(t0=t_star, **mid))
    a, b = first(t_star + s), second(t_star + s)
    for name in ric.COMPONENTS:
        assert abs(a[name] - b[name]) <= 1e-6 * (1 + abs(a[name]))


@settings(max_examples=25, deadline=None)
@given(_inits)
def test_literal_formulas_agree_away_from_t0(init):
    basis = _basis("drift", 0.0)
    state = ric.propagate(basis, init)
    t = np.linspace(0.2, min(1.0, state.interval[1]), 9)
    lit = ric.literal_state_at(basis, init, t)
    got = state(t)
    for name in ric.COMPONENTS:
        np.testing.assert_allclose(got[name], lit[name], rtol=1e-8, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(_inits)
def test_substitution_identity_holds(init):
    state = ric.propagate(_basis("drift", 0.0), init)
    rep = ric.verify_riccati(state, DRIFT, n=60)
    sub = next(e for e in rep.equations if e.name == "mu")
    assert sub.max_abs <= 1e-7


def test_every_shipped_state_is_certified(shipped_runs):
    for name, run in shipped_runs.items():
        assert run.report["checks"]["riccati"]["pass"], name
        assert run.report["checks"]["riccati"]["max_abs"] <= 1e-6, name
