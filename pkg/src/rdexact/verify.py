"""Residual certification of exact solutions by numerical differentiation.

Fields are black boxes ``(x, t) -> value``. Derivatives come from 5-point
stencils with one Richardson level (steps h and h/2), which is exact for
polynomials up to degree 5 and sixth-order accurate otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .coeffexpr import DomainError, ExprError

__all__ = [
    "Grid",
    "EquationResidual",
    "ResidualReport",
    "FieldDerivs",
    "PDESystem",
    "derivative_1d",
    "field_derivs",
    "residual",
    "EVAL_ERRORS",
    "DEFAULT_TOL_CLASSICAL",
    "DEFAULT_TOL_GENERALIZED",
]

DEFAULT_TOL_CLASSICAL = 1e-6
DEFAULT_TOL_GENERALIZED = 1e-5

# errors that mark a node as a domain failure rather than a bug
EVAL_ERRORS = (DomainError, ExprError, ArithmeticError, ValueError)


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid; ``margin`` trims that fraction off each end."""

    x_lo: float
    x_hi: float
    nx: int
    t_lo: float
    t_hi: float
    nt: int
    margin: float = 0.0

    def __post_init__(self):
        if self.nx < 3 or self.nt < 3:
            raise ValueError("grid needs at least 3 nodes per axis")
        if not (self.x_lo < self.x_hi and self.t_lo < self.t_hi):
            raise ValueError("grid bounds must be increasing")
        if not 0.0 <= self.margin < 0.5:
            raise ValueError("margin must be in [0, 0.5)")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        mx = self.margin * (self.x_hi - self.x_lo)
        mt = self.margin * (self.t_hi - self.t_lo)
        x = np.linspace(self.x_lo + mx, self.x_hi - mx, self.nx)
        t = np.linspace(self.t_lo + mt, self.t_hi - mt, self.nt)
        return x, t

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, T) arrays of shape (nt, nx)."""
        x, t = self.axes()
        X, T = np.meshgrid(x, t)
        return X, T

    def steps(self) -> tuple[float, float]:
        """Default differentiation steps (1e-3 of each span)."""
        return 1e-3 * (self.x_hi - self.x_lo), 1e-3 * (self.t_hi - self.t_lo)

    def to_dict(self) -> dict:
        return {"x": [self.x_lo, self.x_hi], "nx": self.nx, "t": [self.t_lo, self.t_hi],
                "nt": self.nt, "margin": self.margin}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Grid":
        return cls(float(d["x"][0]), float(d["x"][1]), int(d.get("nx", 81)),
                   float(d["t"][0]), float(d["t"][1]), int(d.get("nt", 81)),
                   float(d.get("margin", 0.0)))


@dataclass(frozen=True)
class EquationResidual:
    name: str
    max_abs: float
    mean_abs: float
    argmax: tuple[float, ...]
    domain_failures: int = 0

    @classmethod
    def from_values(cls, name: str, r, ok, coords: Sequence[np.ndarray], failures: int = 0):
        r = np.asarray(r, dtype=float)
        # non-finite residuals count as failed nodes
        ok = np.asarray(ok, dtype=bool) & np.isfinite(r)
        failures = max(failures, int(np.count_nonzero(~ok)))
        if not np.any(ok):
            return cls(name, float("inf"), float("inf"), (), failures)
        rr = np.where(ok, r, -1.0)
        i = np.unravel_index(int(np.argmax(rr)), r.shape)
        loc = tuple(float(np.asarray(c)[i]) for c in coords)
        return cls(name, float(r[ok].max()), float(r[ok].mean()), loc, failures)

    @property
    def finite(self) -> bool:
        return np.isfinite(self.max_abs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_abs": _json_float(self.max_abs),
            "mean_abs": _json_float(self.mean_abs),
            "argmax": list(self.argmax),
            "domain_failures": self.domain_failures,
        }


def _json_float(v: float):
    return float(v) if np.isfinite(v) else None


@dataclass(frozen=True)
class ResidualReport:
    """Per-equation residual summary. Passes iff every max <= tol with no failures."""

    equations: tuple[EquationResidual, ...]
    tol: float
    label: str = ""

    @property
    def max_abs(self) -> float:
        return max((e.max_abs for e in self.equations), default=0.0)

    @property
    def domain_failures(self) -> int:
        return max((e.domain_failures for e in self.equations), default=0)

    @property
    def passed(self) -> bool:
        return all(e.max_abs <= self.tol and e.domain_failures == 0 for e in self.equations)

    def __getitem__(self, name: str) -> EquationResidual:
        for e in self.equations:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.equations)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "tol": self.tol,
            "pass": self.passed,
            "max_abs": _json_float(self.max_abs),
            "domain_failures": self.domain_failures,
            "equations": [e.to_dict() for e in self.equations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{self.label}: max={self.max_abs:.3e} tol={self.tol:.1e} [{status}]"


# ---------------------------------------------------------------------------
# one-dimensional derivatives (Riccati certification)

_CENTRAL = (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0)
_FORWARD = (np.arange(5.0), np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0)


def _stencil_d1(fn, t, h, offsets, weights, sign):
    pts = t[:, None] + sign[:, None] * offsets[None, :] * h
    vals = fn(pts)
    out = {}
    for k, v in vals.items():
        out[k] = (np.asarray(v) * weights[None, :]).sum(axis=1) * sign / h
    return out


def derivative_1d(fn: Callable[[np.ndarray], Mapping[str, np.ndarray]], t, h: float,
                  lo: float = -np.inf, hi: float = np.inf) -> dict:
    """First derivatives of every component returned by ``fn``.

    Central 5-point stencil with Richardson extrapolation; nodes closer than
    2h to ``lo``/``hi`` use the one-sided 5-point stencil (also fourth order)
    pointing into the interval.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    central = (t - 2 * h >= lo) & (t + 2 * h <= hi)
    forward = ~central & (t - 2 * h < lo)
    backward = ~central & ~forward
    result: dict[str, np.ndarray] = {}
    for mask, (offs, w), s in (
        (central, _CENTRAL, 1.0),
        (forward, _FORWARD, 1.0),
        (backward, _FORWARD, -1.0),
    ):
        if not np.any(mask):
            continue
        tm = t[mask]
        sign = np.full(tm.shape, s)
        d_h = _stencil_d1(fn, tm, h, offs, w, sign)
        d_h2 = _stencil_d1(fn, tm, h / 2.0, offs, w, sign)
        for k in d_h:
            if k not in result:
                result[k] = np.empty(t.shape)
            result[k][mask] = (16.0 * d_h2[k] - d_h[k]) / 15.0
    return result


# ---------------------------------------------------------------------------
# space-time derivatives


@dataclass(frozen=True)
class FieldDerivs:
    f: np.ndarray
    fx: np.ndarray
    fxx: np.ndarray
    ft: np.ndarray
    err: np.ndarray  # max of the Richardson correction sizes


def _d_pair(vm2, vm1, v0, vp1, vp2, h):
    d1 = (vm2 - 8.0 * vm1 + 8.0 * vp1 - vp2) / (12.0 * h)
    d2 = (-vm2 + 16.0 * vm1 - 30.0 * v0 + 16.0 * vp1 - vp2) / (12.0 * h * h)
    return d1, d2


def field_derivs(fn: Callable, x, t, h_x: float, h_t: float):
    """Values and derivatives (f, f_x, f_xx, f_t) of a field at (x, t).

    ``fn(x, t)`` may return one array or a dict of arrays; the result mirrors
    it (a FieldDerivs or a dict of FieldDerivs). Derivatives use 5-point
    central stencils at steps h and h/2 combined by Richardson extrapolation;
    ``err`` is the size of the Richardson correction.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    k = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    # one call for the whole stencil: 6 x-offsets, 6 t-offsets, the centre
    xs = np.concatenate([x[None] + (k * h_x)[:, None].reshape((6,) + (1,) * x.ndim),
                         np.broadcast_to(x, (6,) + x.shape), x[None]])
    ts = np.concatenate([np.broadcast_to(t, (6,) + t.shape),
                         t[None] + (k * h_t)[:, None].reshape((6,) + (1,) * t.ndim), t[None]])
    raw = fn(xs, ts)
    single = not isinstance(raw, Mapping)
    vals = {"_": raw} if single else raw
    out = {}
    for name, v in vals.items():
        v = np.broadcast_to(np.asarray(v, dtype=float), xs.shape)
        c = v[12]
        xm2, xm1, xmh, xph, xp1, xp2 = v[0], v[1], v[2], v[3], v[4], v[5]
        tm2, tm1, tmh, tph, tp1, tp2 = v[6], v[7], v[8], v[9], v[10], v[11]
        dx_h, dxx_h = _d_pair(xm2, xm1, c, xp1, xp2, h_x)
        dx_2, dxx_2 = _d_pair(xm1, xmh, c, xph, xp1, h_x / 2.0)
        dt_h, _ = _d_pair(tm2, tm1, c, tp1, tp2, h_t)
        dt_2, _ = _d_pair(tm1, tmh, c, tph, tp1, h_t / 2.0)
        fx = (16.0 * dx_2 - dx_h) / 15.0
        fxx = (16.0 * dxx_2 - dxx_h) / 15.0
        ft = (16.0 * dt_2 - dt_h) / 15.0
        err = np.maximum.reduce([np.abs(fx - dx_2), np.abs(fxx - dxx_2), np.abs(ft - dt_2)])
        out[name] = FieldDerivs(c.copy(), fx, fxx, ft, err)
    return out["_"] if single else out


# ---------------------------------------------------------------------------
# PDE residuals


class PDESystem(Protocol):
    equations: tuple[str, ...]
    fields: tuple[str, ...]

    def residuals(self, x, t, F: Mapping[str, FieldDerivs]) -> Mapping[str, np.ndarray]:
        ...


def _fields_fn(solution):
    return solution.fields if hasattr(solution, "fields") and callable(solution.fields) else solution


def residual(system: PDESystem, solution, grid: Grid, tol: float = DEFAULT_TOL_GENERALIZED,
             h_x: float | None = None, h_t: float | None = None, derivs=None,
             label: str = "") -> ResidualReport:
    """Evaluate LHS - RHS of every equation of ``system`` at every grid node.

    ``solution`` is a callable ``(x, t) -> {field: values}`` or an object with
    such a ``fields`` method. Nodes where the fields or coefficients cannot be
    evaluated are counted as domain failures. ``derivs`` may carry a
    precomputed ``field_derivs`` result for the same grid and steps.
    """
    fn = _fields_fn(solution)
    X, T = grid.mesh()
    dh_x, dh_t = grid.steps()
    h_x = dh_x if h_x is None else h_x
    h_t = dh_t if h_t is None else h_t
    eqs = tuple(system.equations)

    def compute(xx, tt, F=None):
        if F is None:
            F = field_derivs(fn, xx, tt, h_x, h_t)
        with np.errstate(all="ignore"):
            return {e: np.asarray(r, dtype=float) for e, r in system.residuals(xx, tt, F).items()}

    ok = np.ones(X.shape, dtype=bool)
    try:
        res = compute(X, T, derivs)
    except EVAL_ERRORS:
        res = {e: np.full(X.shape, np.nan) for e in eqs}
        for i in range(X.shape[0]):
            try:
                row = compute(X[i], T[i])
                for e in eqs:
                    res[e][i] = row[e]
                continue
            except EVAL_ERRORS:
                pass
            for j in range(X.shape[1]):
                try:
                    node = compute(X[i, j:j + 1], T[i, j:j + 1])
                except EVAL_ERRORS:
                    ok[i, j] = False
                    continue
                for e in eqs:
                    res[e][i, j] = node[e][0]
    failures = int(np.count_nonzero(~ok))
    entries = tuple(
        EquationResidual.from_values(e, np.abs(res[e]), ok, [X, T], failures) for e in eqs
    )
    return ResidualReport(entries, tol, label)
