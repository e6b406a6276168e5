"""Scenario configs: loading, validation and the build/verify/cross-check pipeline."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import classical as cl
from . import riccati as ric
from .coeffexpr import CoeffSet, ExprError, evaluate, parse
from .numsolve import MolProblem, convergence_study, integrate
from .transform import build, build_exponential, similarity_map
from .verify import DEFAULT_TOL_GENERALIZED, Grid, residual

__all__ = ["ConfigError", "Scenario", "load_config", "run_scenario", "SHIPPED_CONFIG"]

SHIPPED_CONFIG = "paper_examples"
FAMILIES = ("linear_rd", "exponential", "dlv2", "dlv3", "gray_scott", "burgers")
RICCATI_KEYS = ric.COMPONENTS + ("t0",)
PAD = 0.01  # Riccati interval padding, as a fraction of the span on each side
SENSITIVITY_FACTOR = 1.01
CLOSED_FORM_FLOOR = 1.0  # mixed metric: relative above 1, absolute below


class ConfigError(ValueError):
    pass


def _number(value, where: str, t: float = 0.0) -> float:
    """A finite number given directly or as a constant expression (``t`` is bound to t0)."""
    try:
        v = float(evaluate(parse(value), t)) if isinstance(value, str) else float(value)
    except (ExprError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    return v


def _range(d: Mapping, key: str, where: str) -> tuple[float, float]:
    try:
        lo, hi = d[key]
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{where}: '{key}' must be a [lo, hi] pair") from None
    lo, hi = _number(lo, f"{where}.{key}"), _number(hi, f"{where}.{key}")
    if not lo < hi:
        raise ConfigError(f"{where}.{key}: need lo < hi")
    return lo, hi


def _grid(d: Mapping, where: str) -> Grid:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected an object")
    x = _range(d, "x", where)
    t = _range(d, "t", where)
    try:
        return Grid(x[0], x[1], int(d.get("nx", 81)), t[0], t[1], int(d.get("nt", 81)),
                    float(d.get("margin", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class Scenario:
    name: str
    family: str
    label: str
    coeffs: CoeffSet
    init: ric.RiccatiInit
    classical: cl.ClassicalSolution | None
    grid: Grid
    raw: Mapping[str, Any] = field(repr=False)
    h: str | None = None
    kappa2_0: float = 0.0
    y: float = 0.0
    rtol: float = 1e-10
    atol: float = 1e-12
    closed_form: Mapping[str, Any] | None = None
    mol: Mapping[str, Any] | None = None
    asymptotic: Mapping[str, Any] | None = None

    def interval(self) -> tuple[float, float]:
        """Riccati working interval: every time the scenario touches, padded on both sides."""
        lo = min(self.grid.t_lo, self.init.t0)
        hi = max(self.grid.t_hi, self.init.t0)
        if self.mol:
            lo, hi = min(lo, self.mol["t"][0]), max(hi, self.mol["t"][1])
        if self.closed_form:
            lo, hi = min(lo, self.closed_form["t"][0]), max(hi, self.closed_form["t"][1])
        if self.asymptotic:
            hi = max(hi, self.asymptotic["t"])
        pad = PAD * (hi - lo)
        return lo - pad, hi + pad


def _scenario(d: Mapping, index: int) -> Scenario:
    where = f"scenarios[{index}]"
    if not isinstance(d, Mapping):
        raise ConfigError(f"{where}: expected an object")
    name = d.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{where}: 'name' must be a non-empty string")
    where = f"scenario {name}"
    family = d.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"{where}: family must be one of {', '.join(FAMILIES)}")
    coeff_map = d.get("coefficients")
    if not isinstance(coeff_map, Mapping):
        raise ConfigError(f"{where}: 'coefficients' must be an object")
    try:
        coeffs = CoeffSet.from_mapping({k: parse(str(v)) for k, v in coeff_map.items()})
    except ExprError as exc:
        raise ConfigError(f"{where}: coefficients: {exc}") from None

    rd = d.get("riccati", {})
    if not isinstance(rd, Mapping):
        raise ConfigError(f"{where}: 'riccati' must be an object")
    unknown = set(rd) - set(RICCATI_KEYS)
    if unknown:
        raise ConfigError(f"{where}: unknown riccati key(s) {sorted(unknown)}")
    t0 = _number(rd.get("t0", 0.0), f"{where}.riccati.t0")
    vals = {k: _number(v, f"{where}.riccati.{k}", t0) for k, v in rd.items() if k != "t0"}
    try:
        init = ric.RiccatiInit(t0=t0, **vals)
    except ric.RiccatiError as exc:
        raise ConfigError(f"{where}: {exc}") from None

    classical = None
    h = None
    kappa2_0 = y = 0.0
    if family == "exponential":
        md = d.get("modified")
        if not isinstance(md, Mapping) or "h" not in md:
            raise ConfigError(f"{where}: exponential family needs 'modified' with 'h'")
        try:
            parse(str(md["h"]))
        except ExprError as exc:
            raise ConfigError(f"{where}: modified.h: {exc}") from None
        h = str(md["h"])
        kappa2_0 = _number(md.get("kappa2_0", 0.0), f"{where}.modified.kappa2_0")
        y = _number(md.get("y", 0.0), f"{where}.modified.y")
    else:
        cd = d.get("classical")
        if not isinstance(cd, Mapping):
            raise ConfigError(f"{where}: 'classical' parameters are required")
        params = {k: (v if k == "branch" else _number(v, f"{where}.classical.{k}"))
                  for k, v in cd.items()}
        try:
            classical = cl.from_dict({"family": family, **params})
        except cl.ClassicalError as exc:
            raise ConfigError(f"{where}: {exc}") from None

    grid = _grid(d.get("grid"), f"{where}.grid")
    solver = d.get("solver", {})
    rtol = _number(solver.get("rtol", 1e-10), f"{where}.solver.rtol")
    atol = _number(solver.get("atol", 1e-12), f"{where}.solver.atol")

    closed = d.get("closed_form")
    if closed is not None:
        t_cf = _range(closed, "t", f"{where}.closed_form")
        funcs = closed.get("functions", {})
        allowed = ric.COMPONENTS + ("kappa1", "kappa2")
        extra = sorted(set(funcs) - set(allowed))
        if extra:
            raise ConfigError(f"{where}: closed_form names unknown components {extra}")
        try:
            parsed = {k: parse(str(v)) for k, v in funcs.items()}
        except ExprError as exc:
            raise ConfigError(f"{where}: closed_form: {exc}") from None
        closed = {"t": t_cf, "n": int(closed.get("n", 50)),
                  "tol": _number(closed.get("tol", 1e-8), f"{where}.closed_form.tol"),
                  "functions": parsed, "source": dict(funcs)}

    mol = d.get("mol")
    if mol is not None:
        x_m = _range(mol, "x", f"{where}.mol")
        t_m = _range(mol, "t", f"{where}.mol")
        order_nx = [int(n) for n in mol.get("order_nx", [])]
        if order_nx and (len(order_nx) < 3 or sorted(set(order_nx)) != order_nx):
            raise ConfigError(f"{where}.mol.order_nx: need >= 3 strictly increasing values")
        mol = {"x": x_m, "t": t_m, "nx": int(mol.get("nx", 201)),
               "tol": _number(mol.get("tol", 5e-4), f"{where}.mol.tol"),
               "order_nx": order_nx,
               "order_tol": _number(mol.get("order_tol", 0.3), f"{where}.mol.order_tol")}

    asym = d.get("asymptotic")
    if asym is not None:
        if family != "dlv2":
            raise ConfigError(f"{where}: asymptotic checks are defined for dlv2 only")
        asym = {"t": _number(asym.get("t"), f"{where}.asymptotic.t"),
                "x": _range(asym, "x", f"{where}.asymptotic"),
                "n": int(asym.get("n", 201)),
                "tol": _number(asym.get("tol", 1e-3), f"{where}.asymptotic.tol")}

    return Scenario(name=name, family=family, label=str(d.get("label", "")), coeffs=coeffs,
                    init=init, classical=classical, grid=grid, raw=dict(d), h=h,
                    kappa2_0=kappa2_0, y=y, rtol=rtol, atol=atol, closed_form=closed,
                    mol=mol, asymptotic=asym)


def config_path(path: str | Path) -> Path | Any:
    """``paper_examples`` names the packaged config; anything else is a file path."""
    if str(path) == SHIPPED_CONFIG:
        return resources.files("rdexact") / "data" / "paper_examples.json"
    return Path(path)


def load_config(path: str | Path) -> list[Scenario]:
    p = config_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    if not isinstance(data, Mapping) or not isinstance(data.get("scenarios"), list):
        raise ConfigError("config must be an object with a 'scenarios' list")
    scenarios = [_scenario(d, i) for i, d in enumerate(data["scenarios"])]
    names = [s.name for s in scenarios]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ConfigError(f"duplicate scenario name(s): {', '.join(sorted(dup))}")
    return scenarios


# ---------------------------------------------------------------------------
# running


@dataclass
class ScenarioRun:
    """Everything built for one scenario, plus the JSON-ready report entry."""

    scenario: Scenario
    state: ric.RiccatiState | None = None
    system: Any = None
    solution: Any = None
    report: dict = field(default_factory=dict)


def build_state(s: Scenario) -> ric.RiccatiState:
    lo, hi = s.interval()
    coeffs = s.coeffs
    if s.family == "burgers":
        i = s.init
        return ric.solve_reduced(coeffs, (lo, hi), beta0=i.beta, gamma0=i.gamma,
                                 epsilon0=i.epsilon, t0=i.t0)
    basis = ric.build_characteristic(coeffs, (lo, hi), t0=s.init.t0, rtol=s.rtol, atol=s.atol)
    state = ric.propagate(basis, s.init)
    if s.family == "exponential":
        state = ric.solve_modified(state, parse(s.h), s.kappa2_0)
    return state


def build_solution(s: Scenario, state: ric.RiccatiState):
    if s.family == "exponential":
        return build_exponential(state, s.y)
    return build(state, s.classical)


def closed_form_check(s: Scenario, state: ric.RiccatiState) -> dict:
    """Deviation of state components from closed forms, scaled by max(|expected|, 1)."""
    cf = s.closed_form
    t = np.linspace(cf["t"][0], cf["t"][1], cf["n"])
    vals = state(t)
    comps = {}
    for name, expr in sorted(cf["functions"].items()):
        expected = np.broadcast_to(evaluate(expr, t), t.shape)
        err = np.abs(vals[name] - expected) / np.maximum(np.abs(expected), CLOSED_FORM_FLOOR)
        comps[name] = float(err.max())
    worst = max(comps.values(), default=0.0)
    return {"tol": cf["tol"], "n": cf["n"], "t": list(cf["t"]), "components": comps,
            "max_rel_error": worst, "pass": worst <= cf["tol"]}


def asymptotic_check(s: Scenario, state, solution) -> dict:
    """dlv2: the classical profile recovered from psi, phi against the regime's limit state."""
    a = s.asymptotic
    regime, limit = s.classical.asymptotic_state()
    out = {"t": a["t"], "x": list(a["x"]), "tol": a["tol"], "regime": regime}
    if limit is None:
        out["pass"] = False
        return out
    x = np.linspace(a["x"][0], a["x"][1], a["n"])
    t = np.full(x.shape, a["t"])
    pref, _, _ = similarity_map(state, x, t)
    f = solution.fields(x, t)
    du = float(np.max(np.abs(f["psi"] / pref - limit[0])))
    dv = float(np.max(np.abs(f["phi"] / pref - limit[1])))
    out.update({"limit": list(limit), "max_dev_u": du, "max_dev_v": dv,
                "pass": du <= a["tol"] and dv <= a["tol"]})
    return out


def mol_check(s: Scenario, system, solution) -> dict:
    m = s.mol
    p = MolProblem(system, solution, m["x"][0], m["x"][1], m["nx"], m["t"][0], m["t"][1])
    r = integrate(p)
    scale = max(1.0, max(float(np.max(np.abs(v))) for v in r.exact.values()))
    out = {**r.to_dict(), "tol": m["tol"], "linf_scaled": r.linf / scale}
    ok = out["linf_scaled"] <= m["tol"]
    if m["order_nx"]:
        conv = convergence_study(p, m["order_nx"])
        order_ok = conv.order == "floor" or abs(conv.order - 2.0) <= m["order_tol"]
        out["order"] = {**conv.to_dict(), "tol": m["order_tol"], "pass": bool(order_ok)}
        ok = ok and order_ok
    out["pass"] = bool(ok)
    return out


def run_scenario(s: Scenario, tol_residual: float | None = None, mol: bool = True,
                 keep: bool = False) -> ScenarioRun:
    """Build, verify and cross-check one scenario.

    Exceptions from any stage are caught and recorded; the entry then fails.
    """
    tol = DEFAULT_TOL_GENERALIZED if tol_residual is None else float(tol_residual)
    run = ScenarioRun(s)
    checks: dict[str, Any] = {}
    entry = {"name": s.name, "family": s.family, "label": s.label, "checks": checks,
             "error": None}
    try:
        state = build_state(s)
        run.state = state
        checks["riccati"] = ric.verify_riccati(state, s.coeffs).to_dict()
        checks["riccati"]["interval"] = list(state.interval)
        if s.closed_form:
            checks["closed_form"] = closed_form_check(s, state)
        if s.classical is not None:
            checks["classical"] = cl.residual_constant_system(s.classical).to_dict()
        system, solution = build_solution(s, state)
        run.system, run.solution = system, solution
        rep = residual(system, solution, s.grid, tol=tol, label=f"generalized:{s.family}")
        checks["generalized"] = {**rep.to_dict(), "grid": s.grid.to_dict()}
        bad = residual(system.scaled_a(SENSITIVITY_FACTOR), solution, s.grid, tol=tol)
        checks["sensitivity"] = {"factor": SENSITIVITY_FACTOR, "max_abs": bad.max_abs,
                                 "tol": tol, "pass": not bad.passed}
        if s.asymptotic:
            checks["asymptotic"] = asymptotic_check(s, state, solution)
        if mol and s.mol:
            checks["mol"] = mol_check(s, system, solution)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        entry["error"] = f"{type(exc).__name__}: {exc}"
    entry["pass"] = entry["error"] is None and all(c["pass"] for c in checks.values())
    run.report = _clean(entry)
    if not keep:
        run.state = run.system = run.solution = None
    return run


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj
