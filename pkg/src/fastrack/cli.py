"""Command-line entry point: ``precompute``, ``simulate``, ``verify`` and ``export-slice``.

Exit codes:

====  ==========================================================
0     every postcondition held
2     invalid configuration or arguments
3     a value function did not converge
4     the planner failed
5     a safety postcondition or verification suite failed
6     tables missing, unreadable or inconsistent with the config
====  ==========================================================
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .dynamics import SubsystemId
from .grid import TableError, interpolate_many, load_table, save_table
from .simulator import CONTAINMENT_SLACK, compute_metrics, export_csv, export_json, run_episode
from .solver import ConvergenceReport, solve, solve_decomposed, solver_hash
from .teb import TebBox, position_extent, teb_box
from .verification import check_cost_floor, check_gradients, check_invariance, check_reload
from .world import SensingRangeError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_PLANNER = 4
EXIT_SAFETY = 5
EXIT_TABLES = 6


class TablesError(RuntimeError):
    pass


def _names(cfg: RunConfig) -> list[str]:
    return ["X4", "Y4", "Z2"] if cfg.problem == "quadrotor" else ["main"]


def cmd_precompute(cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    specs = cfg.specs()
    if cfg.problem == "quadrotor":
        tables, grads, reports = solve_decomposed(specs, cfg.solver)
    else:
        t, g, r = solve(specs[0], cfg.solver)
        tables, grads, reports = [t], [g], [r]
    for name, t, g, r in zip(_names(cfg), tables, grads, reports):
        save_table(t, out / f"{name}.value.tbl")
        save_table(g, out / f"{name}.grad.tbl")
        (out / f"{name}.report.json").write_text(r.to_json())
        flag = "" if r.converged else "  (NOT CONVERGED)"
        print(f"{name}: V_bar = {r.min_value:.6f} after {r.steps} sweeps, pseudo-time {r.pseudo_time:.3f} s{flag}")
    (out / "run_config.json").write_text(json.dumps(cfg.to_dict(), indent=2))
    if not all(r.converged for r in reports):
        print("precompute: at least one subsystem did not converge; artifacts are partial", file=sys.stderr)
        return EXIT_CONVERGENCE
    if cfg.problem == "quadrotor":
        teb = teb_box(tables, reports, cfg.solver.epsilon)
        (out / "teb.json").write_text(teb.to_json())
        print("half-widths (x, y, z): " + ", ".join(f"{h:.4f}" for h in teb.half_widths))
        for name, t, h in zip(_names(cfg), tables, teb.half_widths):
            if h >= t.grid.dims[0].max - 1e-12:
                print(f"warning: {name} level set reaches the grid edge; the bound is clipped by the grid",
                      file=sys.stderr)
    return EXIT_OK


def _load_tables(cfg: RunConfig, tables_dir: Path):
    tables, grads, reports = [], [], []
    try:
        for name, spec in zip(_names(cfg), cfg.specs()):
            t = load_table(tables_dir / f"{name}.value.tbl")
            g = load_table(tables_dir / f"{name}.grad.tbl")
            r = ConvergenceReport.from_dict(json.loads((tables_dir / f"{name}.report.json").read_text()))
            expected = solver_hash(spec, cfg.solver)
            if t.solver_hash != expected:
                raise TablesError(f"{name} tables were computed for a different configuration "
                                  f"(hash {t.solver_hash}, config expects {expected})")
            tables.append(t)
            grads.append(g)
            reports.append(r)
    except (OSError, TableError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TablesError(f"cannot load tables from {tables_dir}: {exc}") from exc
    return tables, grads, reports


def cmd_simulate(cfg: RunConfig, tables_dir: Path, out: Path) -> int:
    if cfg.problem != "quadrotor" or cfg.environment is None:
        raise ConfigError("simulate needs a quadrotor config with an environment")
    tables, grads, reports = _load_tables(cfg, tables_dir)
    if not all(r.converged for r in reports):
        raise TablesError("simulate needs converged tables")
    teb = TebBox.from_dict(json.loads((tables_dir / "teb.json").read_text()))
    log = run_episode(cfg.sim, tables, grads, teb, cfg.world(), cfg.planner_config(),
                      cfg.model, cfg.switch, cfg.sensor)
    out.mkdir(parents=True, exist_ok=True)
    if not log.records:
        print(f"simulate: episode produced no steps ({log.failure})", file=sys.stderr)
        return EXIT_PLANNER if log.failure and log.failure.startswith("planner") else EXIT_SAFETY
    metrics = compute_metrics(log)
    export_csv(log, out / "episode.csv")
    export_json(log, out / "episode.json", metrics)
    (out / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=2))
    print(f"reached goal: {metrics.reached_goal}, collisions: {metrics.collisions}, "
          f"max error: {', '.join(f'{e:.4f}' for e in metrics.max_error)} "
          f"(bound {', '.join(f'{h + CONTAINMENT_SLACK:.4f}' for h in teb.half_widths)})")
    if log.failure and log.failure.startswith("planner"):
        print(f"simulate: {log.failure}", file=sys.stderr)
        return EXIT_PLANNER
    return EXIT_OK if metrics.success else EXIT_SAFETY


def cmd_verify(tables_dir: Path, config: RunConfig | None = None) -> int:
    if config is None:
        try:
            config = RunConfig.from_dict(json.loads((tables_dir / "run_config.json").read_text()))
        except OSError as exc:
            raise TablesError(f"no run_config.json in {tables_dir}") from exc
    tables, grads, reports = _load_tables(config, tables_dir)
    suites = [check_cost_floor(tables), check_reload(tables, reports)]
    if config.problem == "quadrotor":
        suites.append(check_invariance(tables, grads, config.model, config.solver.epsilon))
    suites.append(check_gradients(tables, grads))
    for s in suites:
        print(f"{'PASS' if s.passed else 'FAIL'}  {s.name}: {s.detail}")
    return EXIT_OK if all(s.passed for s in suites) else EXIT_SAFETY


def _parse_fix(items) -> dict[str, float]:
    fixed = {}
    for item in items or []:
        for part in item.split(","):
            if "=" not in part:
                raise ConfigError(f"--fix expects label=value, got {part!r}")
            k, v = part.split("=", 1)
            fixed[k.strip()] = float(v)
    return fixed


def export_slice(table, fixed: dict[str, float], free: list[str], kind: str = "value"):
    """Rows ``(free_1, free_2, value)`` over the grid nodes of the two free dimensions."""
    grid = table.grid
    if len(free) != 2 or len(set(free)) != 2:
        raise ConfigError(f"exactly two distinct free dimensions are needed, got {free}")
    labels = set(grid.labels)
    for name in list(free) + list(fixed):
        if name not in labels:
            raise ConfigError(f"unknown dimension {name!r}; table has {grid.labels}")
    missing = labels - set(free) - set(fixed)
    if missing:
        raise ConfigError(f"dimensions {sorted(missing)} need a value via --fix")
    if set(free) & set(fixed):
        raise ConfigError("a dimension cannot be both fixed and free")
    ia, ib = grid.index_of(free[0]), grid.index_of(free[1])
    a_nodes, b_nodes = grid.axes[ia], grid.axes[ib]
    pts = np.empty((len(a_nodes) * len(b_nodes), grid.ndim))
    for label, value in fixed.items():
        pts[:, grid.index_of(label)] = value
    aa, bb = np.meshgrid(a_nodes, b_nodes, indexing="ij")
    pts[:, ia], pts[:, ib] = aa.ravel(), bb.ravel()
    if kind == "cost":
        vals = np.abs(pts[:, 0])
    else:
        vals, _ = interpolate_many(grid, table.values, pts)
    return np.column_stack([pts[:, ia], pts[:, ib], vals])


def cmd_export_slice(table_path: Path, fixed: dict[str, float], free: list[str], out: Path, kind: str) -> int:
    try:
        table = load_table(table_path)
    except (OSError, TableError) as exc:
        raise TablesError(str(exc)) from exc
    if not hasattr(table, "values"):
        raise ConfigError(f"{table_path} holds a gradient table; export-slice needs a value table")
    rows = export_slice(table, fixed, free, kind)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([free[0], free[1], "V" if kind == "value" else "l"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def _table_path(tables: Path, subsystem: str) -> Path:
    return tables if tables.is_file() else tables / f"{subsystem}.value.tbl"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fastrack", description="Tracking error bounds and safe online planning.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("precompute", help="solve the value functions and write tables")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    s = sub.add_parser("simulate", help="run one episode of the online loop")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--tables", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)
    v = sub.add_parser("verify", help="run the invariant suites on precomputed tables")
    v.add_argument("--tables", required=True, type=Path)
    v.add_argument("--config", type=Path)
    e = sub.add_parser("export-slice", help="write a 2D slice of a value table as CSV")
    e.add_argument("--tables", required=True, type=Path, help="table directory or a single value table file")
    e.add_argument("--subsystem", default="X4", choices=[s.value for s in SubsystemId] + ["main"])
    e.add_argument("--fix", nargs="*", default=[], metavar="LABEL=VALUE")
    e.add_argument("--free", required=True, help="two comma-separated dimension labels")
    e.add_argument("--kind", choices=["value", "cost"], default="value")
    e.add_argument("--out", required=True, type=Path)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "precompute":
            return cmd_precompute(RunConfig.load(args.config), args.out)
        if args.command == "simulate":
            return cmd_simulate(RunConfig.load(args.config), args.tables, args.out)
        if args.command == "verify":
            return cmd_verify(args.tables, RunConfig.load(args.config) if args.config else None)
        return cmd_export_slice(_table_path(args.tables, args.subsystem), _parse_fix(args.fix),
                                [f.strip() for f in args.free.split(",")], args.out, args.kind)
    except (ConfigError, SensingRangeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TablesError as exc:
        print(f"tables error: {exc}", file=sys.stderr)
        return EXIT_TABLES


if __name__ == "__main__":
    raise SystemExit(main())
