"""Command-line interface.

Subcommands:

* ``check``      -- regularity verification; exit 1 on any violation.
* ``solve``      -- tabulate psi_m, psi, pi_star, Phi and the interim
                    transfer on a type grid, to CSV + JSON.
* ``simulate``   -- Monte Carlo revenue estimate under truthful play.
* ``verify-ic``  -- best-response grid certification of incentive
                    compatibility (type deviations with inner income
                    optimization, income deviations, participation).
* ``sweep``      -- parameter sweep with analytic benchmark columns.
* ``menu``       -- the one-buyer posted menu (lump sum / linear royalty).

Flags: ``--config <path>`` (required), ``--out <dir>``, ``--seed <u64>``,
``--runs <n>``, ``--grid <n>``.  The ``ROYALTYCAP_OUT`` environment
variable overrides the configured output directory; ``--out`` overrides
both.  Exit codes: 0 success, 1 verification failure, 2 usage/config error.

CSV cells carry 6 significant digits; the JSON twin of each table carries
full-precision values plus the normalized settings and the seed, so a
(config, seed, subcommand) triple reproduces byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import mech, sim, verify
from .config import InstanceConfig, parse_config
from .errors import ConfigError, RoyaltycapError, UnsupportedInstanceError

_IC_TOL = 1e-6


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n",
                    encoding="utf-8")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in row])


def _emit(cfg: InstanceConfig, out_dir: Path, stem: str, command: str, seed: int,
          header=None, rows=None, extra: dict | None = None):
    """Write <stem>.csv (if tabular and requested) and <stem>.json."""
    artifacts = {}
    if header is not None and "csv" in cfg.formats:
        _write_csv(out_dir / f"{stem}.csv", header, rows)
        artifacts["csv"] = f"{stem}.csv"
    if "json" in cfg.formats:
        payload = {
            "command": command,
            "settings": cfg.normalized,
            "seed": seed,
        }
        if header is not None:
            payload["columns"] = list(header)
            payload["rows"] = [list(r) for r in rows]
        if extra:
            payload.update(extra)
        _write_json(out_dir / f"{stem}.json", payload)
        artifacts["json"] = f"{stem}.json"
    return artifacts


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_check(cfg: InstanceConfig, out_dir: Path, seed: int) -> int:
    reports = [verify.check_regularity(a, cfg.theta_points, cfg.pi_points)
               for a in cfg.instance.agents]
    ok = all(r.all_ok for r in reports)
    _emit(cfg, out_dir, "check", "check", seed,
          extra={"agents": [r.to_dict() for r in reports], "all_ok": ok})
    return 0 if ok else 1


def _theta_grid(agent, n):
    lo, hi = agent.types.lo, agent.types.hi
    return np.linspace(lo, hi, n + 2)[1:-1]


def _cmd_solve(cfg: InstanceConfig, out_dir: Path, seed: int) -> int:
    inst = cfg.instance
    tables = mech.tables_for(inst)
    header = ["agent", "theta", "psi_m", "psi", "pi_star", "phi_cap", "transfer"]
    rows = []
    for i, agent in enumerate(inst.agents):
        ths = _theta_grid(agent, cfg.theta_points)
        q, t_curve, _ = verify._interim_transfer_curve(inst, i, tables)
        tgrid = tables.agents[i].theta
        for th in ths:
            th = float(th)
            rows.append([
                i, th,
                float(tables.psi_m(i, th)),
                float(tables.psi(i, th)),
                float(tables.pi_star(i, th)),
                float(tables.phi_cap(i, th)),
                float(np.interp(th, tgrid, t_curve)),
            ])
    _emit(cfg, out_dir, "solve", "solve", seed, header=header, rows=rows)
    return 0


def _cmd_simulate(cfg: InstanceConfig, out_dir: Path, seed: int, n_runs: int,
                  workers: int) -> int:
    rep = sim.estimate_revenue(cfg.instance, None, n_runs, seed, workers)
    d = rep.to_dict()
    header = ["n_runs", "seed", "revenue_net_audits", "revenue_se",
              "audit_frequency", "mean_on_path_penalty"]
    row = [[d[k] for k in header]]
    analytic = {
        "payoff_bound": mech.payoff_bound(cfg.instance),
        "myerson_cash_revenue": None,
        "full_extraction_revenue": mech.full_extraction_revenue(cfg.instance),
    }
    try:
        analytic["myerson_cash_revenue"] = mech.myerson_cash_revenue(cfg.instance)
    except RoyaltycapError:
        pass
    _emit(cfg, out_dir, "simulate", "simulate", seed, header=header, rows=row,
          extra={"report": d, "analytic": analytic})
    return 0


def _cmd_verify_ic(cfg: InstanceConfig, out_dir: Path, seed: int) -> int:
    inst = cfg.instance
    n_types = max(8, cfg.theta_points // 8)
    agents_out = []
    ok = True
    for i, agent in enumerate(inst.agents):
        worst = {"advantage": -np.inf, "theta": None, "strategy": None}
        ir_ok = True
        for th in _theta_grid(agent, n_types):
            for strategy in ("truthful_projection", "grid_best"):
                r = verify.best_response_type(inst, i, float(th), cfg.theta_points,
                                              strategy, cfg.pi_points)
                if r.advantage > worst["advantage"]:
                    worst = {"advantage": r.advantage, "theta": float(th),
                             "strategy": strategy}
                ir_ok = ir_ok and r.ir_ok
        # income-reporting deviations at a few winning reports
        income_worst = 0.0
        rng = np.random.default_rng(seed)
        lo, hi = agent.types.lo, agent.types.hi
        for th in lo + (hi - lo) * rng.uniform(0.3, 0.95, 4):
            th = float(th)
            psis = [mech.virtual_value(a, float(0.5 * (a.types.lo + a.types.hi)))
                    for j, a in enumerate(inst.agents) if j != i]
            if not mech.virtual_value(agent, th) > max([0.0] + psis):
                continue
            minus = [0.5 * (a.types.lo + a.types.hi)
                     for j, a in enumerate(inst.agents) if j != i]
            for q in (0.2, 0.8):
                pi_true = float(agent.income.supp_lo(th) + q * (
                    agent.income.supp_hi(th) - agent.income.supp_lo(th)))
                rr = verify.best_response_income(inst, i, th, minus, pi_true,
                                                 cfg.pi_points)
                income_worst = max(income_worst, rr.advantage)
        agent_ok = worst["advantage"] <= _IC_TOL and income_worst <= 1e-9 and ir_ok
        ok = ok and agent_ok
        agents_out.append({"agent": i, "type_deviation": worst,
                           "income_deviation_worst": income_worst,
                           "ir_ok": ir_ok, "ok": agent_ok})
    _emit(cfg, out_dir, "verify_ic", "verify-ic", seed,
          extra={"tolerance": _IC_TOL, "agents": agents_out, "all_ok": ok})
    return 0 if ok else 1


def _cmd_sweep(cfg: InstanceConfig, out_dir: Path, seed: int, n_runs: int,
               workers: int) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep", "the sweep subcommand needs a sweep section")
    spec = cfg.sweep

    def builder(v):
        agents = list(cfg.instance.agents)
        agents[spec.agent] = replace(agents[spec.agent], **{spec.axis: float(v)})
        return mech.AuctionInstance(tuple(agents))

    rows = sim.sweep(builder, spec.values, n_runs, seed, workers)
    header = ["value", "revenue_net_audits", "revenue_se", "payoff_bound",
              "myerson_cash_revenue", "full_extraction_revenue", "mean_pi_star",
              "audit_frequency", "failed"]
    table = [[row.get(k, "") if not isinstance(row.get(k), bool)
              else int(row[k]) for k in header] for row in rows]
    _emit(cfg, out_dir, "sweep", "sweep", seed, header=header, rows=table,
          extra={"axis": spec.axis, "agent": spec.agent, "rows_full": rows})
    return 0


def _cmd_menu(cfg: InstanceConfig, out_dir: Path, seed: int) -> int:
    if cfg.instance.n_agents != 1:
        raise UnsupportedInstanceError("menus are defined for single-agent instances")
    agent = cfg.instance.agents[0]
    contracts = mech.binary_menu(agent)
    theta_star, theta_0 = mech.menu_cutoffs(agent)
    lump = next(c for c in contracts if c.kind == "lump_sum")
    roy = next((c for c in contracts if c.kind == "linear_royalty"), None)
    _emit(cfg, out_dir, "menu", "menu", seed, extra={
        "lump_sum": lump.upfront_price,
        "royalty_contract": None if roy is None else roy.upfront_price,
        "royalty_rate": None if roy is None else roy.royalty_rate,
        "theta_star": theta_star,
        "theta_0": theta_0,
    })
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="royaltycap",
        description="Royalty-cap auctions with costly income verification: "
                    "solve, verify, and simulate.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("check", "verify regularity of the configured instance"),
        ("solve", "tabulate the mechanism on a type grid"),
        ("simulate", "Monte Carlo revenue estimate under truthful play"),
        ("verify-ic", "grid-certify incentive compatibility"),
        ("sweep", "parameter sweep with benchmark columns"),
        ("menu", "single-buyer posted menu"),
    ]:
        q = sub.add_parser(name, help=help_)
        q.add_argument("--config", required=True, help="path to the YAML config")
        q.add_argument("--out", help="output directory (overrides env and config)")
        q.add_argument("--seed", type=int, help="override the configured seed")
        q.add_argument("--runs", type=int, help="override the configured n_runs")
        q.add_argument("--grid", type=int, help="override both grid sizes")
        q.add_argument("--workers", type=int, default=1,
                       help="worker processes for simulation (default 1)")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        if args.grid is not None:
            if args.grid < 8:
                raise ConfigError("--grid", "must be at least 8")
            cfg = replace(cfg, theta_points=args.grid, pi_points=args.grid)
        seed = cfg.seed if args.seed is None else args.seed
        if seed < 0:
            raise ConfigError("--seed", "must be nonnegative")
        n_runs = cfg.n_runs if args.runs is None else args.runs
        out_dir = Path(args.out or os.environ.get("ROYALTYCAP_OUT") or cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "check":
            return _cmd_check(cfg, out_dir, seed)
        if args.command == "solve":
            return _cmd_solve(cfg, out_dir, seed)
        if args.command == "simulate":
            return _cmd_simulate(cfg, out_dir, seed, n_runs, args.workers)
        if args.command == "verify-ic":
            return _cmd_verify_ic(cfg, out_dir, seed)
        if args.command == "sweep":
            return _cmd_sweep(cfg, out_dir, seed, n_runs, args.workers)
        if args.command == "menu":
            return _cmd_menu(cfg, out_dir, seed)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, UnsupportedInstanceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RoyaltycapError as e:
        print(f"verification failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
