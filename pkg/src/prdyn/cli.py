"""Command-line surface: gen | solve | run | verify.

Market configs are JSON; traces are CSV (prices and potentials per recorded
iteration, full bid/allocation dumps behind --full-dump); summaries and
diagnostics are JSON. All floats are serialized with shortest round-trip
rendering, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import equilibrium as eqmod
from .diagnostics import (
    DEFAULT_SLACK,
    check_exchange_potential_decrease,
    diagnose_fisher,
    fisher_potential,
)
from .errors import ParseError, PrdynError
from .exchange import default_initial_exchange, run_exchange
from .fisher import StopRule, default_initial_bids, run_fisher
from .market import DynamicsTrace, MarketSpec, Mode, TraceRecord, validate_market
from .utilities import CES, CobbDouglas, SeparablePower

log = logging.getLogger("prdyn")

_FAMILIES = ("cobb_douglas", "ces", "separable_power")


@dataclass
class RunConfig:
    market_path: str
    max_iters: int = 20000
    price_tol: float = 1e-10
    record_every: int = 1
    seed: int = 0
    out_dir: str = "out"
    diagnostics: bool = False
    full_dump: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.price_tol < 0:
            raise ValueError(f"price_tol must be nonnegative, got {self.price_tol}")


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# market config (de)serialization
# ---------------------------------------------------------------------------

def _utility_from_json(doc: dict, buyer: int):
    try:
        family = doc["family"]
        weights = doc["weights"]
        if family == "cobb_douglas":
            return CobbDouglas(weights=weights)
        if family == "ces":
            return CES(weights=weights, rho=doc["rho"])
        if family == "separable_power":
            return SeparablePower(weights=weights, exponents=doc["rhos"])
    except KeyError as exc:
        raise ParseError(f"buyer {buyer}: utility missing field {exc}") from exc
    except PrdynError as exc:
        raise type(exc)(f"buyer {buyer}: {exc}") from exc
    raise ParseError(f"buyer {buyer}: unknown utility family {family!r}")


def _utility_to_json(u) -> dict:
    if isinstance(u, CobbDouglas):
        return {"family": "cobb_douglas", "weights": list(u.weights)}
    if isinstance(u, CES):
        return {"family": "ces", "weights": list(u.weights), "rho": u.rho}
    return {"family": "separable_power", "weights": list(u.weights), "rhos": list(u.exponents)}


def load_market(path) -> MarketSpec:
    """Parse and validate a market config file. Good indices in
    endowment_goods are 1-based in the file, 0-based in memory."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        mode = Mode(doc["mode"])
        m = int(doc["goods"])
        buyers = doc["buyers"]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad top-level field: {exc}") from exc

    utilities = [_utility_from_json(b.get("utility", {}), i) for i, b in enumerate(buyers)]
    if mode is Mode.FISHER:
        try:
            budgets = np.array([float(b["budget"]) for b in buyers])
        except KeyError as exc:
            raise ParseError(f"{path}: Fisher buyers need a budget field: {exc}") from exc
        spec = MarketSpec(
            n_buyers=len(buyers), n_goods=m, utilities=tuple(utilities),
            mode=mode, budgets=budgets,
        )
    else:
        try:
            endow = tuple(tuple(int(j) - 1 for j in b["endowment_goods"]) for b in buyers)
            alpha = np.array([float(b["alpha"]) for b in buyers])
        except KeyError as exc:
            raise ParseError(f"{path}: exchange buyers need endowment_goods and alpha: {exc}") from exc
        spec = MarketSpec(
            n_buyers=len(buyers), n_goods=m, utilities=tuple(utilities),
            mode=mode, endowments=endow, laziness=alpha,
        )
    return validate_market(spec)


def write_market(spec: MarketSpec, path):
    buyers = []
    for i, u in enumerate(spec.utilities):
        entry = {"utility": _utility_to_json(u)}
        if spec.mode is Mode.FISHER:
            entry["budget"] = float(spec.budgets[i])
        else:
            entry["endowment_goods"] = [j + 1 for j in spec.endowments[i]]
            entry["alpha"] = float(spec.laziness[i])
        buyers.append(entry)
    doc = {"mode": spec.mode.value, "goods": spec.n_goods, "buyers": buyers}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# random instance generation
# ---------------------------------------------------------------------------

def generate_market(
    n: int, m: int, family: str, seed: int, mode: Mode = Mode.FISHER, alpha: float = 0.5
) -> MarketSpec:
    """Seeded random instance: weights log-uniform in [0.1, 10] row-normalized,
    budgets uniform in [0.5, 2], exponents uniform in [0.2, 0.8]."""
    if family not in _FAMILIES:
        raise ParseError(f"unknown family {family!r}, expected one of {_FAMILIES}")
    if mode is Mode.EXCHANGE and m < n:
        raise ParseError("exchange generation needs at least one good per agent (m >= n)")
    rng = np.random.default_rng(seed)
    utilities = []
    for _ in range(n):
        w = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=m))
        w = w / w.sum()
        if family == "cobb_douglas":
            utilities.append(CobbDouglas(weights=w))
        elif family == "ces":
            utilities.append(CES(weights=w, rho=float(rng.uniform(0.2, 0.8))))
        else:
            utilities.append(SeparablePower(weights=w, exponents=rng.uniform(0.2, 0.8, size=m)))
    if mode is Mode.FISHER:
        budgets = rng.uniform(0.5, 2.0, size=n)
        spec = MarketSpec(
            n_buyers=n, n_goods=m, utilities=tuple(utilities), mode=mode, budgets=budgets
        )
    else:
        # every agent owns at least one good; remaining goods assigned at random
        goods = rng.permutation(m)
        owner = np.empty(m, dtype=int)
        owner[goods[:n]] = np.arange(n)
        owner[goods[n:]] = rng.integers(0, n, size=m - n)
        endow = tuple(tuple(int(j) for j in np.flatnonzero(owner == i)) for i in range(n))
        spec = MarketSpec(
            n_buyers=n, n_goods=m, utilities=tuple(utilities), mode=mode,
            endowments=endow, laziness=np.full(n, alpha),
        )
    return validate_market(spec)


# ---------------------------------------------------------------------------
# trace / report files
# ---------------------------------------------------------------------------

def write_trace(trace: DynamicsTrace, market: MarketSpec, path, full_dump: bool = False):
    n, m = market.n_buyers, market.n_goods
    header = ["iteration"] + [f"p_{j + 1}" for j in range(m)] + ["potential", "max_price_delta"]
    if full_dump:
        header += [f"b_{i + 1}_{j + 1}" for i in range(n) for j in range(m)]
        header += [f"x_{i + 1}_{j + 1}" for i in range(n) for j in range(m)]
        if trace.mode is Mode.EXCHANGE:
            header += [f"B_{i + 1}" for i in range(n)] + [f"e_{i + 1}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in trace.records:
            row = [str(r.iteration)] + [_fmt(v) for v in r.prices]
            row += [_fmt(r.potential_value), _fmt(r.max_price_delta)]
            if full_dump:
                row += [_fmt(v) for v in r.bids.ravel()]
                row += [_fmt(v) for v in r.allocation.ravel()]
                if trace.mode is Mode.EXCHANGE:
                    row += [_fmt(v) for v in r.budgets_B] + [_fmt(v) for v in r.spend_e]
            writer.writerow(row)


def read_trace(path, market: MarketSpec) -> DynamicsTrace:
    """Rebuild a trace from a --full-dump CSV."""
    n, m = market.n_buyers, market.n_goods
    trace = DynamicsTrace(mode=market.mode)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "b_1_1" not in reader.fieldnames:
            raise ParseError(f"{path}: trace has no bid columns; re-run with --full-dump")
        for row in reader:
            bids = np.array(
                [[float(row[f"b_{i + 1}_{j + 1}"]) for j in range(m)] for i in range(n)]
            )
            alloc = np.array(
                [[float(row[f"x_{i + 1}_{j + 1}"]) for j in range(m)] for i in range(n)]
            )
            rec = TraceRecord(
                iteration=int(row["iteration"]),
                prices=np.array([float(row[f"p_{j + 1}"]) for j in range(m)]),
                bids=bids,
                allocation=alloc,
                max_price_delta=float(row["max_price_delta"]),
                potential_value=float(row["potential"]),
            )
            if market.mode is Mode.EXCHANGE:
                rec.budgets_B = np.array([float(row[f"B_{i + 1}"]) for i in range(n)])
                rec.spend_e = np.array([float(row[f"e_{i + 1}"]) for i in range(n)])
            trace.records.append(rec)
    trace.n_steps = trace.records[-1].iteration + 1 if trace.records else 0
    return trace


def _write_json(doc: dict, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = generate_market(
        args.n, args.m, args.family, seed=args.seed, mode=Mode(args.mode), alpha=args.alpha
    )
    write_market(spec, args.out)
    log.info("wrote %s", args.out)
    return 0


def cmd_solve(args) -> int:
    market = load_market(args.market)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if market.mode is Mode.FISHER:
        eq = eqmod.solve_fisher_eq(market, tol=args.tol, max_iters=args.max_iters)
    else:
        eq = eqmod.solve_exchange_eq(market, tol=args.tol, max_iters=args.max_iters)
    _write_json(
        {
            "converged": eq.converged,
            "iterations": eq.iterations,
            "p_star": list(eq.p_star),
            "x_star": [list(row) for row in eq.x_star],
            "residuals": {
                "clearing": eq.clearing,
                "optimality_gap": eq.optimality_gap,
                "budget_gap": eq.budget_gap,
            },
        },
        out / "equilibrium.json",
    )
    if not eq.converged:
        log.error("equilibrium solver did not converge (clearing %.3e)", eq.clearing)
        return 1
    return 0


def _run_one(config: RunConfig) -> int:
    market = load_market(config.market_path)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stop = StopRule(max_iters=config.max_iters, price_tol=config.price_tol)
    if market.mode is Mode.FISHER:
        trace = run_fisher(market, default_initial_bids(market), stop, config.record_every)
    else:
        trace = run_exchange(market, default_initial_exchange(market), stop, config.record_every)

    diag_doc = None
    diag_passed = True
    if config.diagnostics:
        if market.mode is Mode.FISHER:
            eq = eqmod.solve_fisher_eq(market)
            report = diagnose_fisher(trace, market, eq)
            for rec in trace.records:
                rec.potential_value = fisher_potential(eq.b_star, rec.bids)
            price_error = float(np.max(np.abs(trace.records[-1].prices - eq.p_star)))
            diag_doc = {
                "oracle_converged": eq.converged,
                "passed": report.passed and eq.converged,
                "monotone_violations": report.monotone_violations,
                "lemma_gap_min": report.lemma_gap_min,
                "final_potential": report.potential_series[-1],
                "final_price_error": price_error,
            }
        else:
            eq = eqmod.solve_exchange_eq(market)
            transformed = eqmod.transform_exchange_equilibrium(market, eq)
            report = check_exchange_potential_decrease(trace, transformed, market.laziness)
            for rec, value in zip(trace.records, report.potential_series):
                rec.potential_value = value
            verify = eqmod.verify_exchange_equilibrium(
                market, trace.records[-1].allocation, eq.p_star, tol=1e-4
            )
            diag_doc = {
                "oracle_converged": eq.converged,
                "passed": report.passed and eq.converged and verify.passed,
                "monotone_violations": report.monotone_violations,
                "final_potential": report.potential_series[-1],
                "budget_drift": trace.budget_drift,
                "final_demand_residual": verify.demand_residual,
            }
        diag_passed = diag_doc["passed"]
        _write_json(diag_doc, out / "diagnostics.json")

    final = trace.records[-1]
    _write_json(
        {
            "mode": market.mode.value,
            "stop_reason": trace.stop_reason,
            "iterations": trace.n_steps,
            "final_prices": list(final.prices),
            "final_allocation": [list(row) for row in final.allocation],
            "budget_drift": trace.budget_drift,
        },
        out / "summary.json",
    )
    write_trace(trace, market, out / "trace.csv", full_dump=config.full_dump)

    not_converged = trace.stop_reason == "max_iters" and config.price_tol > 0
    if not_converged:
        log.error("dynamics hit max_iters=%d without reaching price_tol", config.max_iters)
    if not diag_passed:
        log.error("diagnostics failed; see %s", out / "diagnostics.json")
    return 0 if (diag_passed and not not_converged) else 1


def cmd_run(args) -> int:
    base = RunConfig(
        market_path=args.market,
        max_iters=args.max_iters,
        price_tol=args.price_tol,
        record_every=args.record_every,
        seed=args.seed,
        out_dir=args.out,
        diagnostics=args.diagnostics,
        full_dump=args.full_dump,
    )
    if args.batch <= 1:
        return _run_one(base)

    # Fan independent seeds over worker threads, one subdirectory each. The
    # per-seed market is regenerated with the same shape/family as the input.
    src = load_market(args.market)
    family = (
        "cobb_douglas" if isinstance(src.utilities[0], CobbDouglas)
        else "ces" if isinstance(src.utilities[0], CES)
        else "separable_power"
    )

    def one(seed: int) -> int:
        sub = Path(args.out) / f"seed-{seed:04d}"
        sub.mkdir(parents=True, exist_ok=True)
        spec = generate_market(src.n_buyers, src.n_goods, family, seed=seed, mode=src.mode)
        market_path = sub / "market.json"
        write_market(spec, market_path)
        cfg = RunConfig(
            market_path=str(market_path),
            max_iters=args.max_iters,
            price_tol=args.price_tol,
            record_every=args.record_every,
            seed=seed,
            out_dir=str(sub),
            diagnostics=args.diagnostics,
            full_dump=args.full_dump,
        )
        return _run_one(cfg)

    seeds = range(args.seed, args.seed + args.batch)
    with ThreadPoolExecutor(max_workers=min(args.batch, os.cpu_count() or 1)) as pool:
        codes = list(pool.map(one, seeds))
    return 0 if all(c == 0 for c in codes) else 1


def cmd_verify(args) -> int:
    market = load_market(args.market)
    trace = read_trace(args.trace, market)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if market.mode is Mode.FISHER:
        eq = eqmod.solve_fisher_eq(market)
        report = diagnose_fisher(trace, market, eq)
        doc = {
            "oracle_converged": eq.converged,
            "passed": report.passed and eq.converged,
            "monotone_violations": report.monotone_violations,
            "lemma_gap_min": report.lemma_gap_min,
        }
    else:
        eq = eqmod.solve_exchange_eq(market)
        transformed = eqmod.transform_exchange_equilibrium(market, eq)
        report = check_exchange_potential_decrease(trace, transformed, market.laziness)
        doc = {
            "oracle_converged": eq.converged,
            "passed": report.passed and eq.converged,
            "monotone_violations": report.monotone_violations,
        }
    _write_json(doc, out / "diagnostics.json")
    return 0 if doc["passed"] else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prdyn", description="Proportional response market dynamics"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random market config")
    g.add_argument("n", type=int)
    g.add_argument("m", type=int)
    g.add_argument("family", choices=_FAMILIES)
    g.add_argument("--mode", choices=[m.value for m in Mode], default="fisher")
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="market.json")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="compute the equilibrium oracle only")
    s.add_argument("--market", required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iters", type=int, default=20000)
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("run", help="run the dynamics and write trace artifacts")
    r.add_argument("--market", required=True)
    r.add_argument("--max-iters", type=int, default=20000)
    r.add_argument("--price-tol", type=float, default=1e-10)
    r.add_argument("--record-every", type=int, default=1)
    r.add_argument("--out", default="out")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--diagnostics", action="store_true")
    r.add_argument("--full-dump", action="store_true")
    r.add_argument("--batch", type=int, default=1)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="replay a full-dump trace through diagnostics")
    v.add_argument("--market", required=True)
    v.add_argument("--trace", required=True)
    v.add_argument("--out", default="out")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PRD_LOG_LEVEL", "warn").upper().replace("WARN", "WARNING"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PrdynError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
