"""Method-of-lines cross-check for the generalized systems.

Second-order central differences in x, scipy's RK45 in t, and Dirichlet
boundary values taken from the exact solution at every stage. The point is
independence: the integrator only sees the system's right-hand side and the
exact solution's values at t0 and on the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .ode import IntegrationError
from .verify import FieldDerivs

__all__ = ["MolProblem", "MolResult", "ConvergenceResult", "integrate", "convergence_study"]

SCHEMES = ("central", "onesided")


@dataclass(frozen=True)
class MolProblem:
    """``system`` provides ``fields`` and ``rhs(x, t, F)``; ``solution`` provides ``fields(x, t)``."""

    system: object
    solution: object
    x_lo: float
    x_hi: float
    nx: int
    t0: float
    t1: float

    def __post_init__(self):
        if self.nx < 11:
            raise ValueError("nx must be at least 11")
        if not self.x_lo < self.x_hi:
            raise ValueError("need x_lo < x_hi")
        if self.t1 < self.t0:
            raise ValueError("need t0 <= t1")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    def with_nx(self, nx: int) -> "MolProblem":
        return MolProblem(self.system, self.solution, self.x_lo, self.x_hi, nx, self.t0, self.t1)


@dataclass(frozen=True)
class MolResult:
    x: np.ndarray
    t1: float
    numeric: dict
    exact: dict
    linf: float
    l2: float
    n_steps: int
    n_fev: int
    per_field: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "nx": int(self.x.size),
            "t1": self.t1,
            "linf": self.linf,
            "l2": self.l2,
            "n_steps": self.n_steps,
            "n_fev": self.n_fev,
            "per_field": {k: dict(v) for k, v in sorted(self.per_field.items())},
        }


def _exact(solution, x, t) -> dict:
    return {k: np.broadcast_to(np.asarray(v, dtype=float), x.shape)
            for k, v in solution.fields(x, float(t)).items()}


def _derivs(u: np.ndarray, dx: float, scheme: str) -> FieldDerivs:
    """Interior x-derivatives of a full nodal vector (boundaries included)."""
    uxx = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
    if scheme == "central":
        ux = (u[2:] - u[:-2]) / (2.0 * dx)
    else:
        # first-order forward difference (kept as a negative control for the order study)
        ux = (u[2:] - u[1:-1]) / dx
    zero = np.zeros_like(uxx)
    return FieldDerivs(u[1:-1], ux, uxx, zero, zero)


def integrate(p: MolProblem, rtol: float = 1e-8, atol: float = 1e-10,
              scheme: str = "central") -> MolResult:
    """Integrate the semi-discrete system from t0 to t1 and compare with the exact solution."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    x = p.x
    names = tuple(p.system.fields)
    n_in = p.nx - 2
    xi = x[1:-1]
    ends = x[[0, -1]]
    init = _exact(p.solution, x, p.t0)
    for k in names:
        if not np.all(np.isfinite(init[k])):
            raise IntegrationError("exact solution not finite at t0", p.t0)
    y0 = np.concatenate([init[k][1:-1] for k in names])

    def full(y, t):
        bc = _exact(p.solution, ends, t)
        return {k: np.concatenate(([bc[k][0]], y[i * n_in:(i + 1) * n_in], [bc[k][1]]))
                for i, k in enumerate(names)}

    def rhs(t, y):
        u = full(y, t)
        F = {k: _derivs(u[k], p.dx, scheme) for k in names}
        with np.errstate(all="ignore"):
            r = p.system.rhs(xi, t, F)
        out = np.concatenate([np.asarray(r[k], dtype=float) for k in names])
        if not np.all(np.isfinite(out)):
            raise IntegrationError("non-finite right-hand side", t)
        return out

    if p.t1 == p.t0:
        numeric = {k: init[k].copy() for k in names}
        n_steps = n_fev = 0
    else:
        sol = solve_ivp(rhs, (p.t0, p.t1), y0, method="RK45", rtol=rtol, atol=atol)
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if sol.t.size else p.t0
            raise IntegrationError(f"stiffness or step failure: {sol.message}", t_fail)
        numeric = full(sol.y[:, -1], p.t1)
        n_steps = int(sol.t.size - 1)
        n_fev = int(sol.nfev)
    exact = _exact(p.solution, x, p.t1)
    per_field = {}
    for k in names:
        err = np.abs(numeric[k] - exact[k])
        per_field[k] = {"linf": float(err.max()), "l2": float(math.sqrt(p.dx * np.sum(err ** 2)))}
    linf = max(v["linf"] for v in per_field.values())
    l2 = math.sqrt(sum(v["l2"] ** 2 for v in per_field.values()))
    return MolResult(x, float(p.t1), numeric, exact, linf, l2, n_steps, n_fev, per_field)


@dataclass(frozen=True)
class ConvergenceResult:
    nx: tuple[int, ...]
    h: tuple[float, ...]
    errors: tuple[float, ...]
    order: float | str  # fitted slope, or "floor" when every error is at round-off level

    def to_dict(self) -> dict:
        return {"nx": list(self.nx), "h": list(self.h), "linf": list(self.errors),
                "order": self.order}


FLOOR = 1e-9


def convergence_study(p: MolProblem, nx_list: Sequence[int], floor: float = FLOOR,
                      **kw) -> ConvergenceResult:
    """Run :func:`integrate` for each nx and fit the slope of log(error) against log(dx)."""
    nx_list = [int(n) for n in nx_list]
    if len(nx_list) < 3 or any(b <= a for a, b in zip(nx_list, nx_list[1:])):
        raise ValueError("need at least three strictly increasing nx values")
    results = [integrate(p.with_nx(n), **kw) for n in nx_list]
    h = [r.x[1] - r.x[0] for r in results]
    errs = [r.linf for r in results]
    if max(errs) <= floor:
        order: float | str = "floor"
    else:
        order = float(np.polyfit(np.log(h), np.log(np.maximum(errs, 1e-300)), 1)[0])
    return ConvergenceResult(tuple(nx_list), tuple(float(v) for v in h),
                             tuple(float(e) for e in errs), order)
