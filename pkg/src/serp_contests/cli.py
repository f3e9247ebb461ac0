"""Batch front-end: config-driven solves, mechanism design, sweeps, estimation.

Every subcommand reads a JSON config, writes only under ``--out``, and exits
0 on success, 1 on config problems, 2 on numerical failures.  Identical
config and seed give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import data
from .binary import solve_binary, verify_equilibrium
from .clicks import LayoutSpec, em_fit, read_click_log, simulate_clicks, write_click_log
from .core import GameError, MixedStrategy, ProfitParams, make_game
from .mechanisms import (
    approximation_ratio,
    grid_search_compensation,
    simplified_optimal_citation,
    tpbl,
    ubl,
)
from .symmetric import solve_symmetric
from .welfare import scenario_sweep


class ConfigError(Exception):
    pass


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


def _check_keys(doc: dict, allowed, where: str):
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _resolve_biases(spec):
    """A bias vector either inline or by bundled-table reference."""
    if isinstance(spec, str):
        name, _, key = spec.partition(":")
        if name != data.TABLE_NAME:
            raise ConfigError(f"unknown table {name!r}")
        tables = {
            "A": data.TYPE_A,
            "B": data.TYPE_B,
            "C": data.TYPE_C,
            "base": data.equal_citation_baseline(),
            "slots": data.SLOT_BIASES,
        }
        if key not in tables:
            raise ConfigError(f"unknown table column {key!r}")
        return np.array(tables[key], dtype=float)
    return np.asarray(spec, dtype=float)


GAME_KEYS = {"p", "p0", "beta", "gamma", "gammas", "n_H", "gamma_H", "gamma_L", "c"}


def _game_from_config(doc: dict):
    _check_keys(doc, GAME_KEYS, "game")
    p = _resolve_biases(doc["p"])
    p0 = doc.get("p0", 0.0)
    if p0 == "tables":
        p0 = data.OVERVIEW_P0
    beta = float(doc["beta"])
    if "gammas" in doc:
        gammas = list(map(float, doc["gammas"]))
    elif "n_H" in doc:
        n_h = int(doc["n_H"])
        gammas = [float(doc["gamma_H"])] * n_h + [float(doc["gamma_L"])] * (len(p) - n_h)
    else:
        gammas = [float(doc.get("gamma", 1.0))] * len(p)
    return make_game(list(p), beta, gammas, p0=float(p0), c=doc.get("c"))


def _float_repr(v) -> str:
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_float_repr(v) if isinstance(v, float) else v for v in row])


def _write_json(path, doc):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"not serialisable: {type(o)}")

    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, default=default)
        fh.write("\n")


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_solve_symmetric(args) -> int:
    doc = _load_config(args.config)
    _check_keys(doc, GAME_KEYS | {"grid_size"}, "solve-symmetric config")
    cfg = _game_from_config({k: v for k, v in doc.items() if k in GAME_KEYS})
    eq = solve_symmetric(cfg, grid_size=int(doc.get("grid_size", args.grid or 2001)))
    out = _outdir(args)
    _write_csv(
        os.path.join(out, "equilibrium.csv"),
        ["x", "F"],
        list(zip(eq.strategy.grid.tolist(), eq.strategy.cdf.tolist())),
    )
    _write_json(
        os.path.join(out, "equilibrium.json"),
        {
            "u": eq.u,
            "support": [eq.x_lo, eq.x_hi],
            "gamma": eq.gamma,
            "effective_p": eq.effective_p,
            "kind": "symmetric",
        },
    )
    return 0


def cmd_solve_binary(args) -> int:
    doc = _load_config(args.config)
    _check_keys(doc, GAME_KEYS | {"grid_size"}, "solve-binary config")
    cfg = _game_from_config({k: v for k, v in doc.items() if k in GAME_KEYS})
    ts = cfg.type_split
    if ts is None:
        raise ConfigError("solve-binary needs at most two distinct cost multipliers")
    grid_size = int(doc.get("grid_size", args.grid or 2001))
    if ts.is_symmetric:
        return cmd_solve_symmetric(args)
    eq = solve_binary(cfg, grid_size=grid_size)
    out = _outdir(args)
    xs = np.unique(np.concatenate([eq.F_H.grid, eq.F_L.grid]))
    _write_csv(
        os.path.join(out, "equilibrium.csv"),
        ["x", "F_H", "F_L"],
        list(zip(xs.tolist(), eq.F_H(xs).tolist(), eq.F_L(xs).tolist())),
    )
    _write_json(
        os.path.join(out, "equilibrium.json"),
        {
            "u_H": eq.u_H,
            "u_L": eq.u_L,
            "regime": eq.regime,
            "breakpoints": eq.breakpoints,
            "atoms_H": list(eq.F_H.atoms),
            "atoms_L": list(eq.F_L.atoms),
            "kind": "binary",
        },
    )
    return 0


DESIGN_KEYS = GAME_KEYS | {
    "alpha", "h_power", "step", "ratio", "cn", "compute_bound", "bias_step", "top_k",
    "base_p", "delta_p", "slot_biases",
}


def cmd_design(args) -> int:
    doc = _load_config(args.config)
    _check_keys(doc, DESIGN_KEYS, "design config")
    cfg = _game_from_config({k: v for k, v in doc.items() if k in GAME_KEYS})
    params = ProfitParams(alpha=float(doc.get("alpha", 1.0)), h_power=float(doc.get("h_power", 1.0)))
    step = float(doc.get("step", args.step or 0.02))
    p = cfg.biases.as_array()
    p0 = cfg.biases.p0
    gammas = list(cfg.cost.gammas)
    ts = cfg.type_split
    base_p = _resolve_biases(doc["base_p"]) if "base_p" in doc else data.TYPE_C
    delta_p = (
        np.asarray(doc["delta_p"], dtype=float)
        if "delta_p" in doc
        else data.citation_gain_budget()
    )

    result = {"mechanism": args.mechanism, "q": None, "induced_p": None, "c": None,
              "profit": None, "rho": None}
    if args.mechanism == "ubl":
        design = ubl(base_p, delta_p)
        comp, w = grid_search_compensation(design.induced_p, params, cfg.cost.beta, gammas, p0=p0, step=step)
        result.update(q=design.q, induced_p=design.induced_p, c=comp.c, profit=w)
    elif args.mechanism == "tpbl":
        if ts is None or ts.is_symmetric:
            raise ConfigError("tpbl needs a binary-type game")
        ratio = args.ratio if args.ratio is not None else doc.get("ratio")
        ratio = data.head_tail_ratio(base_p, ts.n_H) if ratio is None else float(ratio)
        design = tpbl(base_p, delta_p, ts.n_H, ratio)
        comp, w = grid_search_compensation(design.induced_p, params, cfg.cost.beta, gammas, p0=p0, step=step)
        result.update(q=design.q, induced_p=design.induced_p, c=comp.c, profit=w, ratio=ratio)
    elif args.mechanism == "compensation":
        comp, w = grid_search_compensation(
            p, params, cfg.cost.beta, gammas, p0=p0, step=step, c_n=float(doc.get("cn", 0.0))
        )
        result.update(induced_p=p, c=comp.c, profit=w)
    elif args.mechanism == "joint":
        if ts is not None and not ts.is_symmetric:
            ratio = args.ratio if args.ratio is not None else doc.get("ratio")
            ratio = data.head_tail_ratio(base_p, ts.n_H) if ratio is None else float(ratio)
            design = tpbl(base_p, delta_p, ts.n_H, ratio)
        else:
            design = ubl(base_p, delta_p)
        comp, w = grid_search_compensation(design.induced_p, params, cfg.cost.beta, gammas, p0=p0, step=step)
        result.update(q=design.q, induced_p=design.induced_p, c=comp.c, profit=w)
        if doc.get("compute_bound"):
            slots = _resolve_biases(doc.get("slot_biases", data.TABLE_NAME + ":slots"))
            bound = simplified_optimal_citation(
                base_p, slots, params, cfg.cost.beta, gammas, p0=p0,
                bias_step=float(doc.get("bias_step", 0.1)), comp_step=step,
                top_k=int(doc.get("top_k", 12)),
            )
            _, w_plain = grid_search_compensation(base_p, params, cfg.cost.beta, gammas, p0=p0, step=step)
            result["rho"] = approximation_ratio(w, w_plain, bound["W"])
            result["bound_W"] = bound["W"]
            result["bound_p"] = bound["p"]
    else:
        raise ConfigError(f"unknown mechanism {args.mechanism!r}")
    out = _outdir(args)
    _write_json(os.path.join(out, "design.json"), result)
    return 0


SWEEP_KEYS = {"betas", "h_powers", "alpha", "gamma_H", "gamma_L", "n_H", "comp_step",
              "include_w4", "grid_size"}


def cmd_sweep(args) -> int:
    doc = _load_config(args.config)
    _check_keys(doc, SWEEP_KEYS, "sweep config")
    betas = doc.get("betas")
    h_powers = doc.get("h_powers")
    if not betas or not h_powers:
        raise ConfigError("sweep needs non-empty 'betas' and 'h_powers'")
    rows = scenario_sweep(
        betas,
        h_powers,
        alpha=float(doc.get("alpha", 1.0)),
        gamma_H=float(doc.get("gamma_H", 1.0)),
        gamma_L=float(doc.get("gamma_L", 2.0)),
        n_H=int(doc.get("n_H", 7)),
        comp_step=float(doc.get("comp_step", 0.02)),
        include_w4=bool(doc.get("include_w4", True)),
        grid_size=int(doc.get("grid_size", 1201)),
        jobs=args.jobs,
    )
    out = _outdir(args)
    cols = ["beta", "alpha", "h_power", "gamma_L", "n_H", "W1", "W2", "W3", "W4", "r21", "r31", "r41"]
    _write_csv(os.path.join(out, "sweep.csv"), cols, [[r[c] for c in cols] for r in rows])
    return 0


SIM_KEYS = {"layouts", "attractiveness", "sessions", "shuffle"}
LAYOUT_KEYS = {"interface", "organic", "slots", "cited_pages", "body"}


def cmd_simulate_clicks(args) -> int:
    doc = _load_config(args.config)
    _check_keys(doc, SIM_KEYS, "simulate-clicks config")
    layouts = []
    for spec in doc["layouts"]:
        _check_keys(spec, LAYOUT_KEYS, "layout")
        layouts.append(
            LayoutSpec(
                interface=spec["interface"],
                organic_biases=_resolve_biases(spec["organic"]),
                slot_biases=_resolve_biases(spec["slots"]) if "slots" in spec else None,
                cited_pages=tuple(spec.get("cited_pages", ())),
                body_bias=(
                    data.OVERVIEW_P0 if spec.get("body") == "tables" else spec.get("body")
                ),
            )
        )
    attr = {str(k): float(v) for k, v in doc["attractiveness"].items()}
    records = simulate_clicks(
        layouts, attr, sessions=int(doc["sessions"]), seed=args.seed,
        shuffle=bool(doc.get("shuffle", True)),
    )
    out = _outdir(args)
    write_click_log(records, os.path.join(out, "clicks.csv"))
    return 0


def cmd_estimate_pbm(args) -> int:
    records = read_click_log(args.logs)
    anchor = None
    if args.config:
        doc = _load_config(args.config)
        _check_keys(doc, {"anchor", "max_iter", "tol"}, "estimate-pbm config")
        anchor = doc.get("anchor")
    fit = em_fit(records, anchor=anchor)
    out = _outdir(args)
    _write_json(
        os.path.join(out, "pbm_fit.json"),
        {
            "biases": {f"{k[0]}:{k[1]}": v for k, v in fit.biases.items()},
            "attractiveness": fit.attractiveness,
            "p0": fit.p0,
            "iterations": fit.iterations,
            "log_likelihood_first_last": [fit.log_likelihood[0], fit.log_likelihood[-1]],
        },
    )
    return 0


def cmd_verify(args) -> int:
    doc = _load_config(args.config)
    _check_keys(doc, GAME_KEYS | {"grid_size"}, "verify config")
    cfg = _game_from_config({k: v for k, v in doc.items() if k in GAME_KEYS})
    with open(args.equilibrium) as fh:
        header = json.load(fh)
    rows = list(csv.DictReader(open(args.table)))
    grid = int(args.grid or 1000)
    if header.get("kind") == "symmetric":
        xs = np.array([float(r["x"]) for r in rows])
        F = np.array([float(r["F"]) for r in rows])
        from .symmetric import SymmetricEquilibrium

        strat = MixedStrategy(grid=xs, cdf=F, atoms=(), support=(xs[0], xs[-1]))
        eq = SymmetricEquilibrium(
            u=header["u"], x_lo=xs[0], x_hi=xs[-1], strategy=strat,
            gamma=header["gamma"], effective_p=cfg.effective_biases(),
        )
    else:
        from .binary import BinaryTypeEquilibrium

        xs = np.array([float(r["x"]) for r in rows])
        FH = np.array([float(r["F_H"]) for r in rows])
        FL = np.array([float(r["F_L"]) for r in rows])
        eq = BinaryTypeEquilibrium(
            u_H=header["u_H"],
            u_L=header["u_L"],
            F_H=MixedStrategy(grid=xs, cdf=FH, atoms=tuple(map(tuple, header.get("atoms_H", ()))), support=(xs[0], xs[-1])),
            F_L=MixedStrategy(grid=xs, cdf=FL, atoms=tuple(map(tuple, header.get("atoms_L", ()))), support=(xs[0], xs[-1])),
            regime=header["regime"],
            breakpoints=header.get("breakpoints", {}),
        )
    report = verify_equilibrium(eq, cfg, grid_size=grid)
    out = _outdir(args)
    _write_json(os.path.join(out, "verify.json"), report)
    print(f"max_gain={report['max_gain']:.3e} worst={report['worst_creator']}")
    return 0


def cmd_report(args) -> int:
    from .report import render_sweep_report

    out = _outdir(args)
    written = render_sweep_report(args.sweep, out)
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serp-contests",
        description="Creator-competition equilibria and incentive design for ranked results",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--grid", type=int, default=None)
        sp.add_argument("--step", type=float, default=None)
        sp.add_argument("--ratio", type=float, default=None)

    sp = sub.add_parser("solve-symmetric", help="solve the common-cost equilibrium")
    common(sp)
    sp.set_defaults(func=cmd_solve_symmetric)

    sp = sub.add_parser("solve-binary", help="solve the two-type equilibrium")
    common(sp)
    sp.set_defaults(func=cmd_solve_binary)

    sp = sub.add_parser("design", help="citation / compensation mechanism design")
    common(sp)
    sp.add_argument("--mechanism", required=True, choices=["ubl", "tpbl", "compensation", "joint"])
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("sweep", help="short/long-term profit sweep")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate-clicks", help="draw synthetic click logs")
    common(sp)
    sp.set_defaults(func=cmd_simulate_clicks)

    sp = sub.add_parser("estimate-pbm", help="fit position biases from click logs")
    sp.add_argument("logs", help="click log CSV")
    sp.add_argument("--config", default=None)
    common(sp, config=False)
    sp.set_defaults(func=cmd_estimate_pbm)

    sp = sub.add_parser("verify", help="best-response audit of solved equilibria")
    sp.add_argument("equilibrium", help="equilibrium JSON header")
    sp.add_argument("table", help="equilibrium CSV")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("report", help="render figures from a sweep CSV")
    sp.add_argument("sweep", help="sweep CSV path")
    common(sp, config=False)
    sp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc!r}", file=sys.stderr)
        return 1
    except (GameError, ValueError, ZeroDivisionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
