"""Variable-coefficient systems and their exact solutions via similarity maps.

A Riccati state (alpha, ..., kappa, mu) plus a classical solution (u, v[, w])
gives

    psi(x, t) = mu^{-1/2} exp(S) u(beta x + epsilon, gamma),  S = alpha x^2 + delta x + kappa

(and likewise phi from v). The variable-coefficient system that psi, phi
solve shares the linear operator

    L[F] = a F_xx - (b x^2 - d - L_i - x f) F - (g - c x) F_x

and differs by family in its interaction terms, whose coefficients are fixed
by the state (all proportional to a beta^2). The Burgers family uses the
reduced map psi = beta u(beta x + epsilon, gamma) instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .classical import ClassicalSolution
from .coeffexpr import CoeffSet, Expr, evaluate
from .riccati import RiccatiState, verify_riccati
from .verify import FieldDerivs

__all__ = [
    "TransformError",
    "GeneralizedSystem",
    "GeneralizedSolution",
    "similarity_map",
    "build_linear_rd",
    "build_exponential",
    "build_dlv2",
    "build_dlv3",
    "build_gray_scott",
    "build_burgers",
    "build",
]

FIELD_NAMES = ("psi", "phi", "phi3")


class TransformError(ValueError):
    pass


# last scalar-time evaluation; the method of lines asks for the same t repeatedly
_LAST: tuple = (None, None, None)


def _state_on(state: RiccatiState, t) -> dict:
    """State components broadcast to the shape of ``t``, evaluated once per distinct time."""
    global _LAST
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        cached_state, cached_t, cached = _LAST
        tf = float(t)
        if cached_state is state and cached_t == tf:
            return cached
        vals = state(t)
        _LAST = (state, tf, vals)
        return vals
    tu, inv = np.unique(t, return_inverse=True)
    vals = state(tu)
    return {k: np.asarray(v)[inv].reshape(t.shape) for k, v in vals.items()}


def _coeffs_on(coeffs: CoeffSet, names, t) -> dict:
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return {n: float(evaluate(getattr(coeffs, n), t)) for n in names}
    tu, inv = np.unique(t, return_inverse=True)
    out = {}
    for n in names:
        v = np.broadcast_to(np.asarray(evaluate(getattr(coeffs, n), tu), dtype=float), tu.shape)
        out[n] = v[inv].reshape(t.shape)
    return out


def similarity_map(state: RiccatiState, x, t, reduced: bool | None = None):
    """(prefactor, xi, tau) of the similarity map at (x, t).

    Full and modified states give mu^{-1/2} exp(alpha x^2 + delta x + kappa);
    the reduced (Burgers) map gives beta. ``reduced`` defaults to whether the
    state is of kind "reduced".
    """
    if reduced is None:
        reduced = state.kind == "reduced"
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    s = _state_on(state, t if t.ndim == 0 else np.broadcast_to(t, np.broadcast_shapes(x.shape, t.shape)))
    xi = s["beta"] * x + s["epsilon"]
    tau = s["gamma"]
    if reduced:
        return s["beta"] * np.ones_like(xi), xi, tau
    mu = np.asarray(s["mu"])
    if np.any(mu <= 0.0):
        raise TransformError("mu(t) <= 0: the similarity map is undefined there")
    S = s["alpha"] * x * x + s["delta"] * x + s["kappa"]
    return np.exp(S) / np.sqrt(mu), xi, tau


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralizedSystem:
    """A variable-coefficient system whose interaction coefficients come from a Riccati state.

    ``params`` holds the classical constants the coefficients are built from
    (b_i, c_i, ... per family). ``a_scale`` multiplies a(t) wherever it
    appears explicitly in the equations; it exists for sensitivity controls.
    """

    family: str
    coeffs: CoeffSet
    state: RiccatiState
    params: Mapping[str, float]
    fields: tuple[str, ...]
    h: Expr | None = None
    a_scale: float = 1.0

    @property
    def equations(self) -> tuple[str, ...]:
        return self.fields

    @property
    def arity(self) -> int:
        return len(self.fields)

    def scaled_a(self, factor: float) -> "GeneralizedSystem":
        return replace(self, a_scale=self.a_scale * float(factor))

    def coefficients(self, x, t) -> dict:
        """Derived coefficients (h, L_i, h_i, r_i, s_i, M_i as applicable) at (x, t)."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape, t.shape)
        # a scalar time (method of lines) is evaluated once, not per node
        tb = t if t.ndim == 0 else np.broadcast_to(t, shape)
        fam, p = self.family, self.params
        a = _coeffs_on(self.coeffs, ("a",), tb)["a"]
        if fam == "exponential":
            return {"h": np.broadcast_to(np.asarray(evaluate(self.h, tb), dtype=float), shape)}
        s = _state_on(self.state, tb)
        ab2 = a * s["beta"] ** 2
        if fam == "burgers":
            return {}
        S = s["alpha"] * x * x + s["delta"] * x + s["kappa"]
        root_mu = np.sqrt(s["mu"])
        out: dict[str, np.ndarray] = {}
        if fam == "linear_rd":
            out["h"] = ab2
            out["L1"] = -p["b1"] * ab2
            out["L2"] = -p["b2"] * ab2
        elif fam in ("dlv2", "dlv3"):
            n = 2 if fam == "dlv2" else 3
            damp = ab2 * root_mu * np.exp(-S)
            for i in range(1, n + 1):
                out[f"L{i}"] = p[f"a{i}"] * ab2
                out[f"h{i}"] = -p[f"b{i}"] * damp
                out[f"r{i}"] = -p[f"c{i}"] * damp
                if n == 3:
                    out[f"s{i}"] = -p[f"e{i}"] * damp
        elif fam == "gray_scott":
            out["h1"] = ab2 * s["mu"] * np.exp(-2.0 * S)
            out["L1"] = -p["b1"] * ab2
            grow = ab2 * np.exp(S) / root_mu
            out["M1"] = p["b1"] * grow
            out["M2"] = p["b2"] * grow
        else:
            raise TransformError(f"unknown family {fam!r}")
        return {k: np.broadcast_to(v, shape) for k, v in out.items()}

    def rhs(self, x, t, F: Mapping[str, FieldDerivs]) -> dict:
        """Right-hand sides of every equation given field values and x-derivatives."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape, t.shape, np.shape(F[self.fields[0]].f))
        tb = t if t.ndim == 0 else np.broadcast_to(t, shape)
        v = _coeffs_on(self.coeffs, CoeffSet.NAMES, tb)
        a = self.a_scale * v["a"]
        fam = self.family
        if fam == "burgers":
            p = self.params
            psi, phi = F["psi"], F["phi"]
            prod_x = psi.fx * phi.f + psi.f * phi.fx
            c, g = v["c"], v["g"]
            return {
                "psi": a * psi.fxx - p["b1"] * a * psi.f * psi.fx - p["c1"] * a * prod_x
                + c * (psi.f + x * psi.fx) - g * psi.fx,
                "phi": a * phi.fxx - p["b2"] * a * phi.f * phi.fx - p["c2"] * a * prod_x
                + c * (phi.f + x * phi.fx) - g * phi.fx,
            }
        k = self.coefficients(x, tb)
        pot = v["b"] * x * x - v["d"] - x * v["f"]
        drift = v["g"] - v["c"] * x

        def lin(fd, L=0.0):
            return a * fd.fxx - (pot - L) * fd.f - drift * fd.fx

        if fam == "exponential":
            return {"psi": lin(F["psi"]) + k["h"] * F["phi"].f, "phi": lin(F["phi"])}
        if fam == "linear_rd":
            return {"psi": lin(F["psi"], k["L1"]) + k["h"] * F["phi"].f,
                    "phi": lin(F["phi"], k["L2"])}
        if fam == "dlv2":
            u, w = F["psi"].f, F["phi"].f
            return {
                "psi": lin(F["psi"], k["L1"]) + (k["h1"] * u + k["r1"] * w) * u,
                "phi": lin(F["phi"], k["L2"]) + (k["h2"] * u + k["r2"] * w) * w,
            }
        if fam == "dlv3":
            vals = [F[n].f for n in self.fields]
            out = {}
            for i, n in enumerate(self.fields, start=1):
                inter = k[f"h{i}"] * vals[0] + k[f"r{i}"] * vals[1] + k[f"s{i}"] * vals[2]
                out[n] = lin(F[n], k[f"L{i}"]) + inter * vals[i - 1]
            return out
        if fam == "gray_scott":
            cubic = k["h1"] * F["psi"].f * F["phi"].f ** 2
            return {
                "psi": lin(F["psi"], k["L1"]) - cubic + k["M1"],
                "phi": lin(F["phi"], k["L1"]) + cubic + k["M2"],
            }
        raise TransformError(f"unknown family {fam!r}")

    def residuals(self, x, t, F: Mapping[str, FieldDerivs]) -> dict:
        r = self.rhs(x, t, F)
        return {n: F[n].ft - r[n] for n in self.fields}


@dataclass(frozen=True)
class GeneralizedSolution:
    """Exact fields (psi, phi[, phi3]) of a :class:`GeneralizedSystem`."""

    system: GeneralizedSystem
    state: RiccatiState
    classical: ClassicalSolution | None = None
    y: float = 0.0
    field_names: tuple[str, ...] = field(default=("psi", "phi"))

    @property
    def family(self) -> str:
        return self.system.family

    def fields(self, x, t) -> dict:
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape, t.shape)
        x = np.broadcast_to(x, shape)
        if t.ndim:
            t = np.broadcast_to(t, shape)
        if self.family == "exponential":
            s = _state_on(self.state, t)
            mu = s["mu"]
            if np.any(mu <= 0.0):
                raise TransformError("mu(t) <= 0: the solution is undefined there")
            y = self.y
            S1 = (s["alpha"] * x * x + s["beta"] * x * y + s["gamma"] * y * y
                  + s["delta"] * x + s["epsilon"] * y + s["kappa1"])
            psi = np.exp(S1) / np.sqrt(mu)
            return {"psi": psi, "phi": psi * np.exp(s["kappa2"])}
        pref, xi, tau = similarity_map(self.state, x, t, reduced=self.family == "burgers")
        cl = self.classical.fields(xi, tau)
        src = ("u", "v", "w")
        return {n: pref * cl[src[i]] for i, n in enumerate(self.field_names)}

    def __call__(self, x, t) -> dict:
        return self.fields(x, t)

    def psi(self, x, t):
        return self.fields(x, t)["psi"]

    def phi(self, x, t):
        return self.fields(x, t)["phi"]

    def phi3(self, x, t):
        if "phi3" not in self.field_names:
            raise AttributeError("no third field")
        return self.fields(x, t)["phi3"]


# ---------------------------------------------------------------------------
# builders


def _need_family(classical: ClassicalSolution, family: str):
    if classical.family != family:
        raise TransformError(f"expected a {family} classical solution, got {classical.family}")


def _need_full(state: RiccatiState):
    if state.kind not in ("full", "modified") or "mu" not in state.names:
        raise TransformError("this family needs a full Riccati state (mu, alpha, ..., kappa)")
    if state.coeffs is None:
        raise TransformError("state carries no coefficient set")


def _assemble(family, state, classical, params, names):
    system = GeneralizedSystem(family, state.coeffs, state, dict(params), names)
    return system, GeneralizedSolution(system, state, classical, field_names=names)


def build_linear_rd(state: RiccatiState, classical: ClassicalSolution):
    """Linear coupled system: h = a beta^2, L_i = -b_i a beta^2.

    The target constant system has unit diffusion, so the classical a1 must be 1.
    """
    _need_family(classical, "linear_rd")
    _need_full(state)
    if classical.params["a1"] != 1.0:
        raise TransformError("the generalized linear system maps onto unit diffusion (a1 = 1)")
    return _assemble("linear_rd", state, classical, classical.params, ("psi", "phi"))


def build_exponential(state: RiccatiState, y: float = 0.0):
    """Exponential-type pair psi, phi = psi exp(kappa2) for the linear system with h(t)."""
    if state.kind != "modified" or state.h is None:
        raise TransformError("exponential family needs a modified state (kappa1, kappa2, h)")
    y = float(y)
    if not np.isfinite(y):
        raise TransformError("y must be finite")
    system = GeneralizedSystem("exponential", state.coeffs, state, {"y": y}, ("psi", "phi"),
                               h=state.h)
    return system, GeneralizedSolution(system, state, None, y=y)


def build_dlv2(state: RiccatiState, classical: ClassicalSolution):
    _need_family(classical, "dlv2")
    _need_full(state)
    return _assemble("dlv2", state, classical, classical.params, ("psi", "phi"))


def build_dlv3(state: RiccatiState, classical: ClassicalSolution):
    _need_family(classical, "dlv3")
    _need_full(state)
    return _assemble("dlv3", state, classical, classical.params, ("psi", "phi", "phi3"))


def build_gray_scott(state: RiccatiState, classical: ClassicalSolution):
    _need_family(classical, "gray_scott")
    _need_full(state)
    return _assemble("gray_scott", state, classical, classical.params, ("psi", "phi"))


def build_burgers(state: RiccatiState, classical: ClassicalSolution, validate: bool = True,
                  tol: float = 1e-7):
    """Burgers family on the reduced map psi = beta u(beta x + epsilon, gamma).

    Only a, c, g enter; b, d, f must vanish. With ``validate`` the reduced
    system beta' = c beta, gamma' = a beta^2, epsilon' = -g beta is certified
    on the state first.
    """
    _need_family(classical, "burgers")
    coeffs = state.coeffs
    if coeffs is None:
        raise TransformError("state carries no coefficient set")
    for name in ("b", "d", "f"):
        if not coeffs.is_zero(name):
            raise TransformError(f"the Burgers family needs {name}(t) = 0")
    if validate:
        view = replace(state, kind="reduced")
        report = verify_riccati(view, coeffs, tol=tol)
        if not report.passed:
            raise TransformError(f"reduced Riccati system not satisfied: {report.summary()}")
    return _assemble("burgers", state, classical, classical.params, ("psi", "phi"))


_BUILDERS = {
    "linear_rd": build_linear_rd,
    "dlv2": build_dlv2,
    "dlv3": build_dlv3,
    "gray_scott": build_gray_scott,
    "burgers": build_burgers,
}


def build(state: RiccatiState, classical: ClassicalSolution):
    """Dispatch on the classical family."""
    try:
        builder = _BUILDERS[classical.family]
    except KeyError:
        raise TransformError(f"unknown family {classical.family!r}") from None
    return builder(state, classical)
