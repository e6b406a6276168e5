"""Closed-form solutions of the constant-coefficient model systems.

Five families, each paired with the PDE system it solves (in the variables
xi, tau):

* linear reaction-diffusion   u_t = a1 u_xx - b1 u + v,  v_t = a1 v_xx - b2 v
* two-species Lotka-Volterra  u_t = u_xx + u (a1 - b1 u - c1 v), same for v
* three-species Lotka-Volterra
* Gray-Scott                  u_t = u_xx - u v^2 + b1 (1 - u), v_t = v_xx + u v^2 - b1 v + b2
* coupled Burgers             u_t = u_xx - b1 u u_x - c1 (u v)_x, same for v
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .verify import DEFAULT_TOL_CLASSICAL, FieldDerivs, Grid, ResidualReport, residual

__all__ = [
    "ClassicalError",
    "ConstantSystem",
    "ClassicalSolution",
    "linear_rd",
    "dlv2",
    "dlv3",
    "gray_scott",
    "burgers",
    "burgers_exact",
    "residual_constant_system",
    "standard_grid",
    "from_dict",
    "FAMILIES",
]

FAMILIES = ("linear_rd", "dlv2", "dlv3", "gray_scott", "burgers")


class ClassicalError(ValueError):
    """Parameters outside a family's admissible set."""


# ---------------------------------------------------------------------------
# the constant-coefficient systems


@dataclass(frozen=True)
class ConstantSystem:
    """A constant-coefficient system, evaluated as LHS - RHS on derivative data."""

    family: str
    params: Mapping[str, float]
    fields: tuple[str, ...]

    @property
    def equations(self) -> tuple[str, ...]:
        return self.fields

    def rhs(self, F: Mapping[str, FieldDerivs]) -> dict:
        p = self.params
        fam = self.family
        if fam == "linear_rd":
            u, v = F["u"], F["v"]
            return {
                "u": p["a1"] * u.fxx - p["b1"] * u.f + v.f,
                "v": p["a1"] * v.fxx - p["b2"] * v.f,
            }
        if fam == "dlv2":
            u, v = F["u"], F["v"]
            return {
                "u": u.fxx + u.f * (p["a1"] - p["b1"] * u.f - p["c1"] * v.f),
                "v": v.fxx + v.f * (p["a2"] - p["b2"] * u.f - p["c2"] * v.f),
            }
        if fam == "dlv3":
            u, v, w = F["u"], F["v"], F["w"]
            out = {}
            for name, fd, i in (("u", u, 1), ("v", v, 2), ("w", w, 3)):
                out[name] = fd.fxx + fd.f * (
                    p[f"a{i}"] - p[f"b{i}"] * u.f - p[f"c{i}"] * v.f - p[f"e{i}"] * w.f
                )
            return out
        if fam == "gray_scott":
            u, v = F["u"], F["v"]
            uv2 = u.f * v.f ** 2
            return {
                "u": u.fxx - uv2 + p["b1"] * (1.0 - u.f),
                "v": v.fxx + uv2 - p["b1"] * v.f + p["b2"],
            }
        if fam == "burgers":
            u, v = F["u"], F["v"]
            uv_x = u.fx * v.f + u.f * v.fx
            return {
                "u": u.fxx - p["b1"] * u.f * u.fx - p["c1"] * uv_x,
                "v": v.fxx - p["b2"] * v.f * v.fx - p["c2"] * uv_x,
            }
        raise ClassicalError(f"unknown family {fam!r}")

    def residuals(self, x, t, F: Mapping[str, FieldDerivs]) -> dict:
        r = self.rhs(F)
        return {k: F[k].ft - r[k] for k in self.fields}


# ---------------------------------------------------------------------------
# solutions


@dataclass(frozen=True)
class ClassicalSolution:
    """Closed-form (u, v[, w]) with the constant-coefficient system it solves."""

    family: str
    params: Mapping[str, float]
    system: ConstantSystem
    funcs: Mapping[str, Callable] = field(repr=False)
    derived: Mapping[str, float] = field(default_factory=dict)

    @property
    def arity(self) -> int:
        return len(self.system.fields)

    @property
    def field_names(self) -> tuple[str, ...]:
        return self.system.fields

    def fields(self, xi, tau) -> dict:
        xi = np.asarray(xi, dtype=float)
        tau = np.asarray(tau, dtype=float)
        shape = np.broadcast_shapes(xi.shape, tau.shape)
        return {k: np.broadcast_to(fn(xi, tau), shape) for k, fn in self.funcs.items()}

    def u(self, xi, tau):
        return self.funcs["u"](np.asarray(xi, float), np.asarray(tau, float))

    def v(self, xi, tau):
        return self.funcs["v"](np.asarray(xi, float), np.asarray(tau, float))

    def w(self, xi, tau):
        if "w" not in self.funcs:
            raise AttributeError(f"{self.family} solution has no third field")
        return self.funcs["w"](np.asarray(xi, float), np.asarray(tau, float))

    def perturbed(self, name: str, fn: Callable) -> "ClassicalSolution":
        """Copy with one field replaced by ``fn(old_value, xi, tau)`` (negative controls)."""
        funcs = dict(self.funcs)
        old = funcs[name]
        funcs[name] = lambda xi, tau: fn(old(xi, tau), xi, tau)
        return ClassicalSolution(self.family, self.params, self.system, funcs, self.derived)

    def to_dict(self) -> dict:
        return {"family": self.family, **{k: float(v) for k, v in self.input_params().items()}}

    def input_params(self) -> dict:
        return dict(self.derived.get("_inputs", {})) or dict(self.params)

    # dlv2 only
    def regime(self) -> str:
        if self.family != "dlv2":
            raise ClassicalError("asymptotic regimes are defined for dlv2 only")
        return self.derived["regime"]

    def asymptotic_state(self):
        """(regime, limit) for dlv2; limit is None when the regime is unknown."""
        regime = self.regime()
        p = self.params
        if regime == "exclusion":
            return regime, (p["a1"] / p["b1"], 0.0)
        if regime == "coexistence":
            Bh, Ch = self.derived["B_hat"], self.derived["C_hat"]
            return regime, (
                p["a1"] * (Ch - 1.0) / (p["b2"] * (Ch - Bh)),
                p["a1"] * (1.0 - Bh) / (p["c2"] * (Ch - Bh)),
            )
        return regime, None


def _finite(**kw):
    for k, v in kw.items():
        if not math.isfinite(float(v)):
            raise ClassicalError(f"parameter {k} must be finite")
    return {k: float(v) for k, v in kw.items()}


def linear_rd(a1: float, b1: float, b2: float) -> ClassicalSolution:
    p = _finite(a1=a1, b1=b1, b2=b2)
    a1, b1, b2 = p["a1"], p["b1"], p["b2"]

    def u(xi, tau):
        return (np.exp(-(b1 + a1) * tau) + np.exp(-(b2 + a1) * tau)) * np.cos(xi)

    def v(xi, tau):
        return (b1 - b2) * np.exp(-(b2 + a1) * tau) * np.cos(xi)

    system = ConstantSystem("linear_rd", p, ("u", "v"))
    return ClassicalSolution("linear_rd", p, system, {"u": u, "v": v}, {"_inputs": p})


def _tanh_front(A: float):
    k = math.sqrt(A / 24.0)
    s = 5.0 * A / 12.0
    return lambda xi, tau: (1.0 - np.tanh(k * xi - s * tau)) ** 2


def dlv2(a1, a2, b1, b2, c1, c2, branch: str = "ratio", strict: bool = True) -> ClassicalSolution:
    """Travelling wave of the two-species Lotka-Volterra system.

    ``branch`` is "ratio" (nu0 = a2/c2) or "zero" (nu0 = 0, needs a1 = a2).
    The front profile is (A/4B)(1 - tanh(sqrt(A/24) xi - 5A tau/12))^2.
    With ``strict`` the ratio branch enforces the v-equation compatibility
    nu1 A + nu0 B = 0; the zero branch is exact for every admissible input.
    """
    inputs = _finite(a1=a1, a2=a2, b1=b1, b2=b2, c1=c1, c2=c2)
    a1, a2, b1, b2, c1, c2 = (inputs[k] for k in ("a1", "a2", "b1", "b2", "c1", "c2"))
    if branch == "ratio":
        if c2 == 0.0:
            raise ClassicalError("branch 'ratio' needs c2 != 0")
        nu0 = a2 / c2
        A = a1 - a2 * c1 / c2
    elif branch == "zero":
        if a1 != a2 or c1 == c2 or b1 == b2:
            raise ClassicalError("branch 'zero' needs a1 = a2, c1 != c2 and b1 != b2")
        nu0 = 0.0
        A = a1
    else:
        raise ClassicalError(f"unknown dlv2 branch {branch!r}")
    if c1 != c2 and b1 != b2:
        nu1 = (b1 - b2) / (c2 - c1)
    elif c1 == c2 and b1 == b2:
        if a1 == 0.0 or c1 == 0.0:
            raise ClassicalError("nu1 = -a2 b1/(a1 c1) needs a1, c1 != 0")
        nu1 = -a2 * b1 / (a1 * c1)
    else:
        raise ClassicalError("nu1 undefined: need (c1 != c2 and b1 != b2) or (c1 = c2 and b1 = b2)")
    B = (c1 * b2 - b1 * c2) / (c1 - c2) if branch == "zero" else b1 + c1 * nu1
    if A <= 0.0:
        raise ClassicalError(f"A = {A:.6g} must be positive")
    if B == 0.0:
        raise ClassicalError("B = 0")
    compat = nu1 * A + nu0 * B
    if strict and branch == "ratio" and abs(compat) > 1e-12 * max(1.0, abs(nu1 * A), abs(nu0 * B)):
        raise ClassicalError(f"parameters inconsistent with the v-equation (nu1 A + nu0 B = {compat:.3g})")

    front = _tanh_front(A)
    amp = A / (4.0 * B)
    u = lambda xi, tau: amp * front(xi, tau)
    v = lambda xi, tau: nu0 + nu1 * amp * front(xi, tau)

    A_hat = a1 / a2 if a2 != 0 else math.inf
    B_hat = b1 / b2 if b2 != 0 else math.inf
    C_hat = c1 / c2 if c2 != 0 else math.inf
    if nu0 != 0.0 and A_hat > max(B_hat, C_hat):
        regime = "exclusion"
    elif nu0 == 0.0 and ((B_hat > A_hat == 1.0 > C_hat) or (C_hat > A_hat == 1.0 > B_hat)):
        regime = "coexistence"
    else:
        regime = "unknown"
    derived = {
        "A": A, "B": B, "nu0": nu0, "nu1": nu1,
        "A_hat": A_hat, "B_hat": B_hat, "C_hat": C_hat,
        "regime": regime, "branch": branch, "_inputs": inputs,
    }
    system = ConstantSystem("dlv2", inputs, ("u", "v"))
    return ClassicalSolution("dlv2", inputs, system, {"u": u, "v": v}, derived)


def dlv3(a1: float, theta: float) -> ClassicalSolution:
    """Travelling wave of the three-species Lotka-Volterra system.

    The remaining system constants follow from a1 and theta; positivity needs
    theta + 2 < a1 < 4 (theta + 2).
    """
    inputs = _finite(a1=a1, theta=theta)
    a1, th = inputs["a1"], inputs["theta"]
    if not th + 2.0 < a1 < 4.0 * (th + 2.0):
        raise ClassicalError(f"need theta + 2 < a1 < 4(theta + 2), got a1={a1}, theta={th}")
    den1 = 8.0 - a1 + 4.0 * th
    den2 = 2.0 + th - a1
    if den1 == 0.0 or den2 == 0.0:
        raise ClassicalError("degenerate constants: 8 - a1 + 4 theta or 2 + theta - a1 vanishes")
    consts = {
        "a1": a1, "a2": a1, "a3": a1,
        "b1": 1.0,
        "b2": -(a1 - 24.0) / den1,
        "b3": -(a1 - 4.0 - 2.0 * th) / den1,
        "c1": -(4.0 * th - a1 - 16.0) / a1,
        "c2": 1.0,
        "c3": -(2.0 * th - a1 - 4.0) / a1,
        "e1": -(a1 - 4.0 - 2.0 * th) / den2,
        "e2": -(a1 - 4.0 + 2.0 * th) / den2,
        "e3": 1.0,
    }
    cu = 2.0 + th - a1 / 4.0
    cv = a1 / 4.0
    cw = a1 - th - 2.0
    u = lambda xi, tau: cu * (1.0 - np.tanh(xi - th * tau)) ** 2
    v = lambda xi, tau: cv * (1.0 + np.tanh(xi - th * tau)) ** 2
    w = lambda xi, tau: cw * (1.0 - np.tanh(xi - th * tau))
    system = ConstantSystem("dlv3", consts, ("u", "v", "w"))
    derived = {**consts, "theta": th, "_inputs": inputs}
    return ClassicalSolution("dlv3", consts, system, {"u": u, "v": v, "w": w}, derived)


def gray_scott(b1: float, b2: float = 0.0) -> ClassicalSolution:
    inputs = _finite(b1=b1, b2=b2)
    b1 = inputs["b1"]
    if inputs["b2"] != 0.0:
        raise ClassicalError("this Gray-Scott family requires b2 = 0")
    if not 0.0 < b1 <= 0.25:
        raise ClassicalError("b1 out of (0, 1/4]")
    s = math.sqrt(1.0 - 4.0 * b1)
    amp = math.sqrt(2.0 + 2.0 * s - 4.0 * b1) / 4.0
    k = math.sqrt(1.0 + s - 2.0 * b1) / 4.0
    theta = math.sqrt(2.0) * (1.0 - 3.0 * s) / 4.0
    u0 = (3.0 - s) / 4.0
    v0 = (1.0 + s) / 4.0
    u = lambda xi, tau: u0 - amp * np.tanh(k * (xi - theta * tau))
    v = lambda xi, tau: v0 + amp * np.tanh(k * (xi - theta * tau))
    system = ConstantSystem("gray_scott", inputs, ("u", "v"))
    derived = {"theta": theta, "k": k, "amplitude": amp, "_inputs": inputs}
    return ClassicalSolution("gray_scott", inputs, system, {"u": u, "v": v}, derived)


def burgers(b1, b2, c1, c2, A: float | None = None, B: float = 1.0,
            K: float | None = None) -> ClassicalSolution:
    """Kink of the coupled Burgers system.

    u = B - 2 A K tanh(A(20 xi - 10 - 2 A tau)), v = B K tanh(...). By default
    A = 4 c1 c2 - 1/(4 c1) - 2 and K = 2 c1 - 1/(4 c1 c2) - 1; either can be
    overridden. Only specific parameter sets make the pair exact (see
    :func:`burgers_exact`); check with :func:`residual_constant_system`.
    """
    inputs = _finite(b1=b1, b2=b2, c1=c1, c2=c2)
    b1, b2, c1, c2 = (inputs[k] for k in ("b1", "b2", "c1", "c2"))
    if c1 == 0.0 or c2 == 0.0:
        raise ClassicalError("c1 and c2 must be non-zero")
    A_formula = 4.0 * c1 * c2 - 1.0 / (4.0 * c1) - 2.0
    K_formula = 2.0 * c1 - 1.0 / (4.0 * c1 * c2) - 1.0
    A = A_formula if A is None else float(A)
    K = K_formula if K is None else float(K)
    B = float(B)
    arg = lambda xi, tau: A * (20.0 * xi - 10.0 - 2.0 * A * tau)
    u = lambda xi, tau: B - 2.0 * A * K * np.tanh(arg(xi, tau))
    v = lambda xi, tau: B * K * np.tanh(arg(xi, tau))
    system = ConstantSystem("burgers", inputs, ("u", "v"))
    derived = {"A": A, "B": B, "K": K, "A_formula": A_formula, "K_formula": K_formula,
               "_inputs": {**inputs, "A": A, "B": B, "K": K}}
    return ClassicalSolution("burgers", inputs, system, {"u": u, "v": v}, derived)


def burgers_exact(c1: float, c2: float, A: float) -> dict:
    """A parameter set for which the Burgers kink is an exact solution.

    The ansatz is exact iff A = 10 B c2, b1 = c2 + c1/(20 c2),
    b2 = 20 c2^2 + c1 and K = 200 c2/(10 c2^2 - c1/2).
    """
    c1, c2, A = float(c1), float(c2), float(A)
    if c2 == 0.0 or 10.0 * c2 * c2 == c1 / 2.0:
        raise ClassicalError("no exact kink for these c1, c2")
    return {
        "b1": c2 + c1 / (20.0 * c2),
        "b2": 20.0 * c2 * c2 + c1,
        "c1": c1,
        "c2": c2,
        "A": A,
        "B": A / (10.0 * c2),
        "K": 200.0 * c2 / (10.0 * c2 * c2 - c1 / 2.0),
    }


# ---------------------------------------------------------------------------


def standard_grid(sol: ClassicalSolution, n: int = 101) -> Grid:
    """A grid that covers the interesting part of each family's solution."""
    fam = sol.family
    if fam == "linear_rd":
        # keep the fastest decay mode resolved by the time stencil
        p = sol.params
        rate = max(abs(p["a1"] + p["b1"]), abs(p["a1"] + p["b2"]), 1.0)
        return Grid(-2 * math.pi, 2 * math.pi, n, 0.0, min(2.0, 10.0 / rate), n)
    if fam == "dlv2":
        return Grid(-10.0, 10.0, n, 0.0, 3.0, n)
    if fam == "dlv3":
        return Grid(-5.0, 5.0, n, 0.0, 2.0, n)
    if fam == "gray_scott":
        return Grid(-20.0, 20.0, n, 0.0, 5.0, n)
    if fam == "burgers":
        A = abs(sol.derived["A"])
        # the kink sits at 20 xi = 10 + 2 A tau and has width ~ 1/(20 A)
        w = max(0.5, 3.0 / (20.0 * A)) if A > 0 else 1.0
        return Grid(0.5 - w, 0.5 + w, n, 0.0, 1.0, n)
    raise ClassicalError(f"unknown family {fam!r}")


def residual_constant_system(sol: ClassicalSolution, grid: Grid | None = None,
                             tol: float = DEFAULT_TOL_CLASSICAL, **kw) -> ResidualReport:
    """PDE residual of the closed form in its own constant-coefficient system."""
    grid = grid if grid is not None else standard_grid(sol)
    return residual(sol.system, sol, grid, tol=tol, label=f"classical:{sol.family}", **kw)


def from_dict(d: Mapping) -> ClassicalSolution:
    """Build a solution from a parameter record (as stored in scenario configs)."""
    d = dict(d)
    fam = d.pop("family", None)
    try:
        if fam == "linear_rd":
            return linear_rd(d.get("a1", 1.0), d["b1"], d["b2"])
        if fam == "dlv2":
            return dlv2(d["a1"], d["a2"], d["b1"], d["b2"], d["c1"], d["c2"],
                        branch=d.get("branch", "ratio"))
        if fam == "dlv3":
            return dlv3(d["a1"], d["theta"])
        if fam == "gray_scott":
            return gray_scott(d["b1"], d.get("b2", 0.0))
        if fam == "burgers":
            return burgers(d["b1"], d["b2"], d["c1"], d["c2"], A=d.get("A"),
                           B=d.get("B", 1.0), K=d.get("K"))
    except KeyError as exc:
        raise ClassicalError(f"{fam}: missing parameter {exc.args[0]!r}") from None
    raise ClassicalError(f"unknown family {fam!r}")
