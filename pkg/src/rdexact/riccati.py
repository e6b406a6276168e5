"""Riccati systems behind the similarity transformations.

The six functions alpha, beta, gamma, delta, epsilon, kappa (plus mu) obey

    alpha' + b = 2 c alpha + 4 a alpha^2
    beta'      = (c + 4 a alpha) beta
    gamma'     = a beta^2
    delta' + 2 alpha g = (c + 4 a alpha) delta + f
    epsilon'   = (2 a delta - g) beta
    kappa'     = a delta^2 - g delta

and alpha = -mu'/(4 a mu) - d/(2a) turns the first into the linear
characteristic equation mu'' = eta mu' + 4 sigma mu. Everything is built from
one fundamental pair (mu0, mu1) of that equation plus a few quadratures, which
are integrated together as one augmented ODE.

All "initial" quantities refer to a base time ``t0`` (zero unless a(0) = 0
forces another choice).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .coeffexpr import CoeffSet, DomainError, Expr, as_expr, evaluate
from .ode import DenseSolution, IntegrationError, integrate_dense
from .verify import EquationResidual, ResidualReport, derivative_1d

__all__ = [
    "RiccatiError",
    "TurningPointError",
    "SingularPointError",
    "BlowUpError",
    "CharacteristicBasis",
    "Kernel",
    "RiccatiInit",
    "RiccatiState",
    "build_characteristic",
    "kernel_at",
    "propagate",
    "literal_state_at",
    "solve_modified",
    "solve_reduced",
    "verify_riccati",
    "COMPONENTS",
]

COMPONENTS = ("mu", "alpha", "beta", "gamma", "delta", "epsilon", "kappa")


class RiccatiError(ValueError):
    pass


class TurningPointError(RiccatiError):
    """mu0' vanishes where the kernel quadratures divide by it."""


class SingularPointError(RiccatiError):
    """Kernel evaluated where mu0 vanishes."""


class BlowUpError(RiccatiError):
    """Evaluation beyond a finite-time singularity of the state."""


# state vector layout of the augmented characteristic ODE
_M0, _P0, _M1, _P1, _LNW, _J, _E2, _E3, _K2, _K3 = range(10)


class _Coeffs:
    """Vectorised access to a, b, c, d, f, g, a', d' and the derived eta, sigma."""

    def __init__(self, coeffs: CoeffSet):
        self.cs = coeffs
        self.da = coeffs.derivative("a")
        self.dd = coeffs.derivative("d")
        self.f_zero = coeffs.is_zero("f")
        self.g_zero = coeffs.is_zero("g")

    def values(self, t):
        cs = self.cs
        a = evaluate(cs.a, t)
        if np.any(np.asarray(a) == 0.0):
            raise DomainError(cs.a, t, "diffusion coefficient a(t) vanishes")
        return {
            "a": a,
            "b": evaluate(cs.b, t),
            "c": evaluate(cs.c, t),
            "d": evaluate(cs.d, t),
            "f": evaluate(cs.f, t),
            "g": evaluate(cs.g, t),
            "da": evaluate(self.da, t),
            "dd": evaluate(self.dd, t),
        }

    @staticmethod
    def eta_sigma(v):
        a, b, c, d = v["a"], v["b"], v["c"], v["d"]
        ra = v["da"] / a
        eta = ra + 2.0 * c - 4.0 * d
        # removable form of (d/2)(a'/a - d'/d)
        sigma = a * b + c * d - d * d + 0.5 * d * ra - 0.5 * v["dd"]
        return eta, sigma


# ---------------------------------------------------------------------------
# characteristic basis


class Kernel(NamedTuple):
    alpha0: object
    beta0: object
    gamma0: object
    delta0: object
    epsilon0: object
    kappa0: object


@dataclass(frozen=True)
class CharacteristicBasis:
    """Fundamental pair of the characteristic equation and the kernel quadratures.

    ``mu0(t0) = 0, mu0'(t0) = 2 a(t0)``; ``mu1(t0) = mu1_0, mu1'(t0) = 0``.
    """

    coeffs: CoeffSet
    t0: float
    interval: tuple[float, float]
    dense: DenseSolution
    mu1_0: float
    rtol: float
    atol: float
    quadratures: bool  # False when f = g = 0 (kernel quadratures vanish identically)
    _c: _Coeffs = field(repr=False, compare=False)

    @property
    def t_lo(self) -> float:
        return self.interval[0]

    @property
    def t_hi(self) -> float:
        return self.interval[1]

    def _y(self, t):
        return self.dense(t)

    def mu0(self, t):
        return self._y(t)[..., _M0]

    def dmu0(self, t):
        return self._y(t)[..., _P0]

    def mu1(self, t):
        return self._y(t)[..., _M1]

    def dmu1(self, t):
        return self._y(t)[..., _P1]

    def W(self, t):
        return np.exp(self._y(t)[..., _LNW])

    def eta(self, t):
        return _Coeffs.eta_sigma(self._c.values(t))[0]

    def sigma(self, t):
        return _Coeffs.eta_sigma(self._c.values(t))[1]

    def wronskian(self, t):
        """mu0' mu1 - mu0 mu1' (equals 2 a(t0) mu1(t0) exp(int eta))."""
        y = self._y(t)
        return y[..., _P0] * y[..., _M1] - y[..., _M0] * y[..., _P1]

    def quadrature_terms(self, t):
        """(delta0, epsilon0, kappa0) at ``t`` (vectorised).

        delta0 takes its limit g/(2a) exactly at t0.
        """
        t = np.asarray(t, dtype=float)
        if not self.quadratures:
            z = np.zeros_like(t)
            return z, z.copy(), z.copy()
        y = self._y(t)
        v = self._c.values(t)
        a, g = v["a"], v["g"]
        W = np.exp(y[..., _LNW])
        m0, p0, J = y[..., _M0], y[..., _P0], y[..., _J]
        at0 = t == self.t0
        with np.errstate(divide="ignore", invalid="ignore"):
            d0 = np.where(at0, g / (2.0 * a), W * J / np.where(at0, 1.0, m0))
        WJ = W * J
        e0 = -2.0 * a * W * d0 / p0 - 8.0 * y[..., _E2] + 2.0 * y[..., _E3]
        k0 = -a * WJ * d0 / p0 - 4.0 * y[..., _K2] + 2.0 * y[..., _K3]
        return d0, e0, k0

    def delta0(self, t):
        return self.quadrature_terms(t)[0]

    def epsilon0(self, t):
        return self.quadrature_terms(t)[1]

    def kappa0(self, t):
        return self.quadrature_terms(t)[2]


def build_characteristic(
    coeffs: CoeffSet,
    interval: tuple[float, float],
    t0: float = 0.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float | None = None,
    mu1_0: float = 1.0,
) -> CharacteristicBasis:
    """Integrate the characteristic equation and the kernel quadratures on ``interval``.

    Raises ``TurningPointError`` if mu0' vanishes while the quadratures are
    needed, ``IntegrationError`` on step failure, ``ExprError`` if a(t) has a
    zero on the interval.
    """
    lo, hi = float(interval[0]), float(interval[1])
    t0 = float(t0)
    if not lo <= t0 <= hi or lo >= hi:
        raise RiccatiError(f"base time {t0} not inside interval [{lo}, {hi}]")
    if mu1_0 == 0.0:
        raise RiccatiError("mu1(t0) must be non-zero")
    coeffs.check_a(lo, hi)
    c = _Coeffs(coeffs)
    active = not (c.f_zero and c.g_zero)
    v0 = c.values(t0)
    p0_ref = abs(2.0 * v0["a"])

    def rhs(t, y):
        v = c.values(t)
        eta, sigma = _Coeffs.eta_sigma(v)
        a, d, f, g = v["a"], v["d"], v["f"], v["g"]
        m0, p0, m1, p1, lnW = y[_M0], y[_P0], y[_M1], y[_P1], y[_LNW]
        out = np.zeros_like(y)
        out[_M0] = p0
        out[_P0] = eta * p0 + 4.0 * sigma * m0
        out[_M1] = p1
        out[_P1] = eta * p1 + 4.0 * sigma * m1
        out[_LNW] = v["c"] - 2.0 * d
        if active:
            if np.any(np.abs(p0) <= 1e-10 * p0_ref):
                raise TurningPointError(f"mu0' vanishes near t={float(np.min(t)):.6g}")
            W = np.exp(lnW)
            J = y[_J]
            src = f + d * g / a
            out[_J] = (src * m0 + g * p0 / (2.0 * a)) / W
            out[_E2] = a * sigma * W * W * J / (p0 * p0)
            out[_E3] = a * W * src / p0
            out[_K2] = a * sigma * (W * J) ** 2 / (p0 * p0)
            out[_K3] = a * W * J * src / p0
        return out

    y0 = np.zeros(10)
    y0[_P0] = 2.0 * v0["a"]
    y0[_M1] = mu1_0
    try:
        dense = integrate_dense(
            rhs, t0, y0, lo, hi, rtol=rtol, atol=atol, max_step=max_step, rhs_vec=rhs
        )
    except DomainError as exc:
        raise IntegrationError(str(exc)) from exc
    if active:
        p0 = dense.y[:, _P0]
        if np.any(np.sign(p0) != np.sign(p0[0])):
            idx = int(np.argmax(np.sign(p0) != np.sign(p0[0])))
            raise TurningPointError(f"mu0' changes sign near t={dense.t[idx]:.6g}")
    return CharacteristicBasis(
        coeffs=coeffs, t0=t0, interval=(lo, hi), dense=dense, mu1_0=float(mu1_0),
        rtol=rtol, atol=atol, quadratures=active, _c=c,
    )


def kernel_at(basis: CharacteristicBasis, t) -> Kernel:
    """The six kernel functions alpha0..kappa0 at ``t`` (scalar or array).

    Refuses points where mu0 is (numerically) zero, in particular t0 itself.
    """
    t = np.asarray(t, dtype=float)
    y = basis.dense(t)
    m0, p0, m1 = y[..., _M0], y[..., _P0], y[..., _M1]
    thresh = 1e-12 * max(1.0, abs(basis.dense.y[np.searchsorted(basis.dense.t, basis.t0), _P0]))
    if np.any(np.abs(m0) < thresh):
        raise SingularPointError("mu0 vanishes: kernel is singular at this point")
    v = basis._c.values(t)
    v0 = basis._c.values(basis.t0)
    a, d = v["a"], v["d"]
    W = np.exp(y[..., _LNW])
    alpha0 = -p0 / (4.0 * a * m0) - d / (2.0 * a)
    beta0 = W / m0
    gamma0 = -m1 / (2.0 * basis.mu1_0 * m0) + v0["d"] / (2.0 * v0["a"])
    d0, e0, k0 = basis.quadrature_terms(t)
    out = Kernel(alpha0, beta0, gamma0, d0, e0, k0)
    if t.ndim == 0:
        out = Kernel(*(float(x) for x in out))
    return out


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class RiccatiInit:
    """Initial data at ``t0``. ``kappa`` is the total kappa(t0) = kappa1(t0) + kappa2(t0)."""

    mu: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0
    gamma: float = 0.0
    delta: float = 0.0
    epsilon: float = 0.0
    kappa: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        for name in COMPONENTS + ("t0",):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise RiccatiError(f"initial {name} must be finite")
            object.__setattr__(self, name, value)
        if self.mu == 0.0:
            raise RiccatiError("mu(t0) must be non-zero")
        if self.beta == 0.0:
            raise RiccatiError("beta(t0) must be non-zero")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in COMPONENTS + ("t0",)}


Evaluator = Callable[[np.ndarray], Mapping[str, np.ndarray]]


@dataclass(frozen=True)
class RiccatiState:
    """Time-dependent transform functions with their valid interval.

    ``kind`` is "full", "modified" (carries kappa1, kappa2 and h) or
    "reduced" (beta, gamma, epsilon only, for the Burgers family).
    ``evaluator(t)`` returns all components at once.
    """

    evaluator: Evaluator
    names: tuple[str, ...]
    interval: tuple[float, float]
    t0: float
    kind: str = "full"
    coeffs: CoeffSet | None = None
    init: RiccatiInit | None = None
    basis: CharacteristicBasis | None = None
    h: Expr | None = None
    kappa2_0: float | None = None
    blowup: tuple[float | None, float | None] = (None, None)

    @classmethod
    def from_functions(cls, funcs: Mapping[str, Callable], interval, t0=0.0, kind="full",
                       coeffs=None, **kw) -> "RiccatiState":
        """Wrap plain callables (closed forms, fixtures) as a state."""
        funcs = dict(funcs)

        def evaluator(t):
            t = np.asarray(t, dtype=float)
            return {k: np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape).copy()
                    for k, fn in funcs.items()}

        return cls(evaluator=evaluator, names=tuple(funcs), interval=tuple(map(float, interval)),
                   t0=float(t0), kind=kind, coeffs=coeffs, **kw)

    @classmethod
    def identity(cls, interval=(0.0, 1.0)) -> "RiccatiState":
        """mu=beta=1, gamma=t, everything else 0: the similarity map is the identity."""
        one = lambda t: np.ones_like(t)
        zero = lambda t: np.zeros_like(t)
        return cls.from_functions(
            {"mu": one, "alpha": zero, "beta": one, "gamma": lambda t: t,
             "delta": zero, "epsilon": zero, "kappa": zero},
            interval, t0=interval[0], kind="full",
            coeffs=CoeffSet(a=1.0),
        )

    def _check(self, t):
        lo, hi = self.interval
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(t < lo - slack) or np.any(t > hi + slack):
            bl, bh = self.blowup
            if (bl is not None and np.any(t <= bl)) or (bh is not None and np.any(t >= bh)):
                raise BlowUpError(
                    f"state evaluated beyond its blow-up boundary; valid interval is "
                    f"[{lo:.6g}, {hi:.6g}]"
                )
            raise BlowUpError(f"t outside the state's interval [{lo:.6g}, {hi:.6g}]")

    def __call__(self, t) -> dict:
        tt = np.asarray(t, dtype=float)
        self._check(tt)
        out = self.evaluator(tt)
        if tt.ndim == 0:
            return {k: float(v) for k, v in out.items()}
        return out

    def value(self, name: str, t):
        return self(t)[name]

    def fn(self, name: str) -> Callable:
        if name not in self.names:
            raise KeyError(f"state has no component {name!r}")
        return lambda t: self(t)[name]

    def restricted(self, lo: float, hi: float) -> "RiccatiState":
        lo = max(lo, self.interval[0])
        hi = min(hi, self.interval[1])
        return _replace(self, interval=(lo, hi))

    def mu(self, t): return self.value("mu", t)
    def alpha(self, t): return self.value("alpha", t)
    def beta(self, t): return self.value("beta", t)
    def gamma(self, t): return self.value("gamma", t)
    def delta(self, t): return self.value("delta", t)
    def epsilon(self, t): return self.value("epsilon", t)
    def kappa(self, t): return self.value("kappa", t)


def _replace(state: RiccatiState, **kw) -> RiccatiState:
    from dataclasses import replace
    return replace(state, **kw)


def _sign_interval(fn, t0, lo, hi, knots, n=4001):
    """Maximal interval around t0 on which fn keeps the sign it has at t0.

    Returns (lo', hi', root_lo, root_hi); roots are None when no sign change.
    """
    grid = np.union1d(np.linspace(lo, hi, n), knots[(knots >= lo) & (knots <= hi)])
    grid = np.union1d(grid, [t0])
    vals = fn(grid)
    s0 = np.sign(fn(np.asarray(t0)))
    i0 = int(np.searchsorted(grid, t0))
    bad = (np.sign(vals) != s0) | ~np.isfinite(vals)
    scalar = lambda t: float(fn(np.asarray(t)))
    root_hi = root_lo = None
    new_hi, new_lo = hi, lo
    right = np.nonzero(bad[i0:])[0]
    if right.size:
        j = i0 + int(right[0])
        a_, b_ = grid[j - 1], grid[j]
        root_hi = brentq(scalar, a_, b_, xtol=1e-14) if np.isfinite(vals[j]) and vals[j] != 0 else b_
        new_hi = a_ + 0.999 * (root_hi - a_) if root_hi > a_ else a_
    left = np.nonzero(bad[: i0 + 1])[0]
    if left.size:
        j = int(left[-1])
        a_, b_ = grid[j], grid[j + 1]
        root_lo = brentq(scalar, a_, b_, xtol=1e-14) if np.isfinite(vals[j]) and vals[j] != 0 else a_
        new_lo = b_ - 0.999 * (b_ - root_lo) if root_lo < b_ else b_
    return new_lo, new_hi, root_lo, root_hi


def propagate(basis: CharacteristicBasis, init: RiccatiInit) -> RiccatiState:
    """Carry arbitrary initial data through the multiparameter solution.

    Uses an algebraically equivalent form of the multiparameter formulas that
    has no 0/0 at t0. The returned state is truncated at the first zero of
    mu (equivalently of alpha(t0) + gamma0(t)) on either side of t0.
    """
    if init.t0 != basis.t0:
        raise RiccatiError(f"initial data given at t0={init.t0}, basis built at t0={basis.t0}")
    c = basis._c
    v0 = c.values(basis.t0)
    K = init.alpha + v0["d"] / (2.0 * v0["a"])
    m10 = basis.mu1_0
    mu_0 = init.mu

    def mu_fn(t):
        y = basis.dense(t)
        return mu_0 * (y[..., _M1] / m10 - 2.0 * K * y[..., _M0])

    lo, hi, root_lo, root_hi = _sign_interval(mu_fn, basis.t0, basis.t_lo, basis.t_hi, basis.dense.t)

    def evaluator(t):
        t = np.asarray(t, dtype=float)
        y = basis.dense(t)
        v = c.values(t)
        a, d = v["a"], v["d"]
        m0, p0, m1, p1 = y[..., _M0], y[..., _P0], y[..., _M1], y[..., _P1]
        W = np.exp(y[..., _LNW])
        mu = mu_0 * (m1 / m10 - 2.0 * K * m0)
        dmu = mu_0 * (p1 / m10 - 2.0 * K * p0)
        d0, e0, k0 = basis.quadrature_terms(t)
        E = init.delta + e0
        out = {
            "mu": mu,
            "alpha": -dmu / (4.0 * a * mu) - d / (2.0 * a),
            "beta": init.beta * mu_0 * W / mu,
            "gamma": init.gamma + init.beta ** 2 * mu_0 * m0 / (2.0 * mu),
            "delta": d0 + mu_0 * W * E / mu,
            "epsilon": init.epsilon + init.beta * mu_0 * m0 * E / mu,
            "kappa": init.kappa + k0 + E * E * mu_0 * m0 / (2.0 * mu),
        }
        at0 = t == basis.t0
        if np.any(at0):
            for name in COMPONENTS:
                out[name] = np.where(at0, getattr(init, name), out[name])
        return out

    return RiccatiState(
        evaluator=evaluator, names=COMPONENTS, interval=(lo, hi), t0=basis.t0, kind="full",
        coeffs=basis.coeffs, init=init, basis=basis, blowup=(root_lo, root_hi),
    )


def literal_state_at(basis: CharacteristicBasis, init: RiccatiInit, t) -> dict:
    """The multiparameter formulas evaluated term by term (singular at t0).

    Kept as an independent cross-check of :func:`propagate`.
    """
    k = kernel_at(basis, t)
    D = init.alpha + k.gamma0
    E = init.delta + k.epsilon0
    return {
        "mu": -2.0 * init.mu * basis.mu0(t) * D,
        "alpha": k.alpha0 - k.beta0 ** 2 / (4.0 * D),
        "beta": -init.beta * k.beta0 / (2.0 * D),
        "gamma": init.gamma - init.beta ** 2 / (4.0 * D),
        "delta": k.delta0 - k.beta0 * E / (2.0 * D),
        "epsilon": init.epsilon - init.beta * E / (2.0 * D),
        "kappa": init.kappa + k.kappa0 - E ** 2 / (4.0 * D),
    }


def solve_modified(state: RiccatiState, h, kappa2_0: float, rtol: float = 1e-12,
                   atol: float = 1e-14) -> RiccatiState:
    """Attach kappa1, kappa2 for the exponential-type family.

    kappa2 = -ln|int_{t0}^t h + exp(-kappa2(t0))| and kappa1 = kappa - kappa2,
    with kappa the total kappa of ``state``. The interval is cut where the log
    argument reaches zero.
    """
    if state.kind != "full":
        raise RiccatiError("solve_modified needs a full Riccati state")
    h = as_expr(h)
    kappa2_0 = float(kappa2_0)
    if not np.isfinite(kappa2_0):
        raise RiccatiError("kappa2(t0) must be finite")
    lo, hi = state.interval
    t0 = state.t0
    c2 = np.exp(-kappa2_0)
    if h.is_zero:
        H = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        knots = np.array([lo, hi])
    else:
        rhs = lambda t, y: np.atleast_1d(evaluate(h, t)) * np.ones_like(y)
        rhs_vec = lambda t, y: np.asarray(evaluate(h, t))[None, :] * np.ones_like(y)
        dense = integrate_dense(rhs, t0, [0.0], lo, hi, rtol=rtol, atol=atol, rhs_vec=rhs_vec)
        H = lambda t: dense(t)[..., 0]
        knots = dense.t
    arg = lambda t: H(t) + c2
    new_lo, new_hi, root_lo, root_hi = _sign_interval(arg, t0, lo, hi, knots)
    base = state

    def evaluator(t):
        t = np.asarray(t, dtype=float)
        out = dict(base.evaluator(t))
        if h.is_zero:
            k2 = np.full(t.shape, kappa2_0)
        else:
            k2 = -np.log(np.abs(arg(t)))
            k2 = np.where(t == t0, kappa2_0, k2)
        out["kappa2"] = k2
        out["kappa1"] = out["kappa"] - k2
        return out

    bl = root_lo if root_lo is not None else state.blowup[0]
    bh = root_hi if root_hi is not None else state.blowup[1]
    return RiccatiState(
        evaluator=evaluator, names=state.names + ("kappa1", "kappa2"),
        interval=(new_lo, new_hi), t0=t0, kind="modified", coeffs=state.coeffs,
        init=state.init, basis=state.basis, h=h, kappa2_0=kappa2_0, blowup=(bl, bh),
    )


def solve_reduced(coeffs: CoeffSet, interval, beta0: float = 1.0, gamma0: float = 0.0,
                  epsilon0: float = 0.0, t0: float = 0.0, rtol: float = 1e-11,
                  atol: float = 1e-13) -> RiccatiState:
    """Solve beta' = c beta, gamma' = a beta^2, epsilon' = -g beta (Burgers family)."""
    if beta0 == 0.0:
        raise RiccatiError("beta(t0) must be non-zero")
    lo, hi = float(interval[0]), float(interval[1])
    coeffs.check_a(lo, hi)
    cs = coeffs

    def rhs(t, y):
        a, c, g = evaluate(cs.a, t), evaluate(cs.c, t), evaluate(cs.g, t)
        return np.array([c * y[0], a * y[0] ** 2, -g * y[0]])

    dense = integrate_dense(rhs, t0, [beta0, gamma0, epsilon0], lo, hi, rtol=rtol, atol=atol,
                            rhs_vec=rhs)

    def evaluator(t):
        y = dense(np.asarray(t, dtype=float))
        return {"beta": y[..., 0], "gamma": y[..., 1], "epsilon": y[..., 2]}

    init = RiccatiInit(beta=beta0, gamma=gamma0, epsilon=epsilon0, t0=t0)
    return RiccatiState(evaluator=evaluator, names=("beta", "gamma", "epsilon"),
                        interval=(lo, hi), t0=float(t0), kind="reduced", coeffs=coeffs,
                        init=init)


# ---------------------------------------------------------------------------
# certification


def _equations(kind: str):
    if kind == "reduced":
        return ("beta", "gamma", "epsilon")
    if kind == "modified":
        return ("alpha", "beta", "gamma", "delta", "epsilon", "kappa1", "kappa2", "mu")
    return ("alpha", "beta", "gamma", "delta", "epsilon", "kappa", "mu")


def _residuals(kind, s, ds, v, h_val):
    a, b, c, f, g, d = v["a"], v["b"], v["c"], v["f"], v["g"], v["d"]
    if kind == "reduced":
        return {
            "beta": ds["beta"] - c * s["beta"],
            "gamma": ds["gamma"] - a * s["beta"] ** 2,
            "epsilon": ds["epsilon"] + g * s["beta"],
        }
    al, be, de = s["alpha"], s["beta"], s["delta"]
    lin = c + 4.0 * a * al
    out = {
        "alpha": ds["alpha"] + b - 2.0 * c * al - 4.0 * a * al ** 2,
        "beta": ds["beta"] - lin * be,
        "gamma": ds["gamma"] - a * be ** 2,
        "delta": ds["delta"] + 2.0 * al * g - lin * de - f,
        "epsilon": ds["epsilon"] - (2.0 * a * de - g) * be,
        "mu": al + ds["mu"] / (4.0 * a * s["mu"]) + d / (2.0 * a),
    }
    src = a * de ** 2 - g * de
    if kind == "modified":
        ek2 = np.exp(s["kappa2"])
        out["kappa1"] = ds["kappa1"] - src - h_val * ek2
        out["kappa2"] = ds["kappa2"] + h_val * ek2
    else:
        out["kappa"] = ds["kappa"] - src
    return out


def verify_riccati(state: RiccatiState, coeffs: CoeffSet | None = None, grid=None,
                   tol: float = 1e-6, n: int = 200, h: float | None = None) -> ResidualReport:
    """Certify the Riccati ODEs by numerical differentiation of the state.

    5-point central differences with one Richardson level (one-sided 5-point
    stencils near the ends of the interval). One report entry per ODE, plus
    "mu" for the substitution alpha = -mu'/(4 a mu) - d/(2a).
    """
    coeffs = coeffs if coeffs is not None else state.coeffs
    if coeffs is None:
        raise RiccatiError("coefficients are required")
    lo, hi = state.interval
    if grid is None:
        grid = np.linspace(lo, hi, n)
    grid = np.asarray(grid, dtype=float)
    if h is None:
        h = 1e-3 * (hi - lo)
    kind = state.kind
    eqs = _equations(kind)
    c = _Coeffs(coeffs)

    def node_residuals(tt):
        s = state(tt)
        ds = derivative_1d(lambda x: {k: state(x)[k] for k in eqs}, tt, h, lo, hi)
        v = c.values(tt)
        h_val = evaluate(state.h, tt) if state.h is not None else 0.0
        return _residuals(kind, s, ds, v, h_val)

    failures = 0
    try:
        res = node_residuals(grid)
        ok = np.ones(grid.shape, dtype=bool)
    except (DomainError, RiccatiError, ValueError, FloatingPointError):
        res = {e: np.full(grid.shape, np.nan) for e in eqs}
        ok = np.zeros(grid.shape, dtype=bool)
        for i, ti in enumerate(grid):
            try:
                r = node_residuals(np.array([ti]))
            except (DomainError, RiccatiError, ValueError, FloatingPointError):
                continue
            ok[i] = True
            for e in eqs:
                res[e][i] = r[e][0]
        failures = int(np.count_nonzero(~ok))
    entries = []
    for e in eqs:
        r = np.abs(np.asarray(res[e], dtype=float))
        entries.append(EquationResidual.from_values(e, r, ok, [grid], failures))
    return ResidualReport(equations=tuple(entries), tol=tol, label=f"riccati:{kind}")
