"""Two-sided adaptive integration with Hermite dense output.

Stepping is scipy's Dormand-Prince 5(4) pair. The accepted steps are kept and
turned into a piecewise Hermite interpolant. Slopes at the knots come from the
right-hand side itself. By default second derivatives are added (a central
difference of the right-hand side along the flow), giving a quintic, C2
interpolant; ``order=3`` gives the plain cubic Hermite spline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly, CubicHermiteSpline

__all__ = ["IntegrationError", "DenseSolution", "integrate_dense"]


class IntegrationError(RuntimeError):
    """Step-size underflow, non-finite state or other solver failure."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message if t is None else f"{message} (near t={t:.6g})")


@dataclass(frozen=True)
class DenseSolution:
    """Piecewise Hermite interpolant (cubic or quintic) over the accepted step knots."""

    t: np.ndarray  # increasing knots
    y: np.ndarray  # shape (n_knots, n_states)
    dy: np.ndarray
    t0: float
    n_steps: int
    n_fev: int
    ddy: np.ndarray | None = None

    def __post_init__(self):
        if self.ddy is None:
            spline = CubicHermiteSpline(self.t, self.y, self.dy, axis=0)
        else:
            spline = BPoly.from_derivatives(self.t, np.stack([self.y, self.dy, self.ddy], axis=1))
        object.__setattr__(self, "_spline", spline)

    @property
    def order(self) -> int:
        return 3 if self.ddy is None else 5

    @property
    def t_lo(self) -> float:
        return float(self.t[0])

    @property
    def t_hi(self) -> float:
        return float(self.t[-1])

    def __call__(self, t, derivative: int = 0):
        """Interpolated states at ``t``; shape ``t.shape + (n_states,)``."""
        tt = np.asarray(t, dtype=float)
        lo, hi = self.t[0], self.t[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(tt < lo - slack) or np.any(tt > hi + slack):
            raise ValueError(f"t outside dense-output range [{lo:.6g}, {hi:.6g}]")
        tt = np.clip(tt, lo, hi)
        if derivative == 0:
            return self._spline(tt)
        return self._spline.derivative(derivative)(tt)

    def component(self, i: int) -> Callable:
        return lambda t: self(t)[..., i]


def _one_side(rhs, t0, y0, t_end, rtol, atol, max_step):
    sol = solve_ivp(
        rhs, (t0, t_end), y0, method="RK45", rtol=rtol, atol=atol,
        max_step=max_step, vectorized=False,
    )
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else t0
        raise IntegrationError(f"integration failed: {sol.message}", t_fail)
    if not np.all(np.isfinite(sol.y)):
        bad = int(np.argmax(~np.all(np.isfinite(sol.y), axis=0)))
        raise IntegrationError("non-finite state", float(sol.t[bad]))
    return sol.t, sol.y.T, sol.nfev


def integrate_dense(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_lo: float,
    t_hi: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float | None = None,
    rhs_vec: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    order: int = 5,
) -> DenseSolution:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` forward to ``t_hi`` and backward to ``t_lo``.

    ``rhs_vec(t_array, y_array)`` (states along axis 0 of ``y_array``, i.e.
    shape ``(n_states, n)``) is used, when given, to compute knot slopes in a
    single call.
    """
    t0 = float(t0)
    if not (t_lo <= t0 <= t_hi) or t_lo == t_hi:
        raise ValueError(f"need t_lo <= t0 <= t_hi with t_lo < t_hi, got {t_lo}, {t0}, {t_hi}")
    y0 = np.asarray(y0, dtype=float)
    if order not in (3, 5):
        raise ValueError("order must be 3 or 5")
    if max_step is None:
        max_step = (t_hi - t_lo) / 400.0

    ts, ys, nfev = [np.array([t0])], [y0[None, :]], 0
    if t_hi > t0:
        tf, yf, n = _one_side(rhs, t0, y0, t_hi, rtol, atol, max_step)
        ts.append(tf[1:])
        ys.append(yf[1:])
        nfev += n
    if t_lo < t0:
        tb, yb, n = _one_side(rhs, t0, y0, t_lo, rtol, atol, max_step)
        ts.insert(0, tb[1:][::-1])
        ys.insert(0, yb[1:][::-1])
        nfev += n
    t = np.concatenate(ts)
    y = np.concatenate(ys, axis=0)
    if rhs_vec is None:
        rhs_vec = lambda tt, yy: np.array([rhs(ti, yi) for ti, yi in zip(tt, yy.T)]).T
    f = lambda tt, yy: np.asarray(rhs_vec(tt, yy.T), dtype=float).T
    dy = f(t, y)
    if not np.all(np.isfinite(dy)):
        raise IntegrationError("non-finite derivative at a knot")
    ddy = None
    if order == 5 and len(t) >= 3:
        ddy = _second_derivative(f, t, y, dy)
    return DenseSolution(t=t, y=y, dy=dy, t0=t0, n_steps=len(t) - 1, n_fev=nfev, ddy=ddy)


def _second_derivative(f, t, y, dy):
    """y'' at the knots by differencing f along the flow (one-sided at the ends)."""
    eps = 1e-4 * float(np.median(np.diff(t)))
    n = len(t)
    sign = np.ones(n)
    sign[-1] = -1.0
    # interior: central; first knot: forward; last knot: backward
    e = (eps * sign)[:, None]
    f1 = f(t + e[:, 0], y + e * dy)
    f2 = f(t + 2 * e[:, 0], y + 2 * e * dy)
    fm = f(t[1:-1] - eps, y[1:-1] - eps * dy[1:-1])
    ddy = np.empty_like(dy)
    ddy[1:-1] = (f1[1:-1] - fm) / (2.0 * eps)
    for i in (0, n - 1):
        ddy[i] = (-3.0 * dy[i] + 4.0 * f1[i] - f2[i]) / (2.0 * e[i, 0])
    if not np.all(np.isfinite(ddy)):
        raise IntegrationError("non-finite second derivative at a knot")
    return ddy
