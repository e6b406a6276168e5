"""Command-line front end: ``rdexact run CONFIG`` and ``rdexact list CONFIG``.

Exit codes: 0 all enabled checks pass, 1 some check failed, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .scenario import ConfigError, Scenario, load_config, run_scenario

__all__ = ["main", "write_csv", "read_csv", "field_table"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def field_table(solution, grid) -> tuple[list[str], np.ndarray]:
    """Long-form (x, t, fields...) rows over the verification grid, t-major."""
    X, T = grid.mesh()
    F = solution.fields(X, T)
    names = [k for k in ("psi", "phi", "phi3") if k in F]
    cols = [X.ravel(), T.ravel()] + [np.broadcast_to(F[k], X.shape).ravel() for k in names]
    return ["x", "t"] + names, np.column_stack(cols)


def write_csv(path: Path, header: Sequence[str], rows: np.ndarray) -> None:
    lines = [",".join(header)]
    lines += [",".join("%.17g" % v for v in row) for row in rows]
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, rows.reshape(-1, len(header))


def _run_one(s: Scenario, tol_residual, mol: bool, out: Path | None) -> dict:
    run = run_scenario(s, tol_residual=tol_residual, mol=mol, keep=out is not None)
    if out is not None and run.solution is not None:
        try:
            header, rows = field_table(run.solution, s.grid)
            write_csv(out / f"{s.name}.csv", header, rows)
        except (ValueError, ArithmeticError) as exc:
            run.report["csv_error"] = f"{type(exc).__name__}: {exc}"
            run.report["pass"] = False
    return run.report


def _worker(args) -> dict:
    config, name, tol_residual, mol, out = args
    s = next(s for s in load_config(config) if s.name == name)
    return _run_one(s, tol_residual, mol, out)


def cmd_run(args) -> int:
    scenarios = load_config(args.config)
    if args.only:
        wanted = set(args.only)
        missing = wanted - {s.name for s in scenarios}
        if missing:
            raise ConfigError(f"--only: unknown scenario(s) {', '.join(sorted(missing))}")
        scenarios = [s for s in scenarios if s.name in wanted]
    out = Path(args.out) if args.out else None
    mol = not args.no_mol
    if args.jobs > 1 and len(scenarios) > 1:
        jobs = [(str(args.config), s.name, args.tol_residual, mol, out) for s in scenarios]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_worker, jobs))
    else:
        reports = [_run_one(s, args.tol_residual, mol, out) for s in scenarios]
    reports.sort(key=lambda r: r["name"])
    ok = all(r["pass"] for r in reports)
    body = {"config": str(args.config), "pass": ok, "n_scenarios": len(reports),
            "settings": {"tol_residual": args.tol_residual, "mol": mol},
            "scenarios": reports}
    report_path = Path(args.report) if args.report else (out / "report.json" if out else None)
    if report_path is not None:
        _atomic_write(report_path, json.dumps(body, indent=2, sort_keys=True) + "\n")
    for r in reports:
        failed = [k for k, c in r["checks"].items() if not c["pass"]]
        status = "PASS" if r["pass"] else "FAIL"
        detail = r["error"] or (", ".join(failed) if failed else "")
        print(f"{status}  {r['name']:<12} {r['family']:<12} {detail}".rstrip())
    print(f"{sum(r['pass'] for r in reports)}/{len(reports)} scenarios passed")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_list(args) -> int:
    for s in load_config(args.config):
        print(f"{s.name}\t{s.family}\t{s.label}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdexact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="build, verify and cross-check scenarios")
    r.add_argument("config", help="config JSON path, or 'paper_examples' for the shipped set")
    r.add_argument("--only", action="append", metavar="NAME",
                   help="run only this scenario (repeatable)")
    r.add_argument("--no-mol", action="store_true", help="skip the method-of-lines cross-check")
    r.add_argument("--tol-residual", type=float, default=None, metavar="V",
                   help="generalized residual tolerance (default 1e-5)")
    r.add_argument("--out", metavar="DIR", help="directory for CSV field dumps and report.json")
    r.add_argument("--report", metavar="PATH", help="JSON report path (default DIR/report.json)")
    r.add_argument("--jobs", type=int, default=1, metavar="N", help="scenarios run in parallel")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list the scenarios in a config")
    ls.add_argument("config")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
