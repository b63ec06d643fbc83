"""Command-line front end.

    crr-sim run CONFIG            one seeded run, writes trace.txt / history.txt
    crr-sim check HISTORY [--trace TRACE]
    crr-sim sweep CONFIG --seeds N
    crr-sim scenario NAME | --list
    crr-sim bench-latency

Exit codes: 0 all checks pass, 1 a checked violation, 2 usage/config/parse error.
Set CRR_LOG=debug|info|warning for log output on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from .checker.blackbox import MAX_OPS, check_atomicity_blackbox
from .checker.monitors import (
    calls_from_lines, check_incarnation_monotonicity, check_real_time_property,
    incarnations_from_lines,
)
from .checker.suite import evaluate, violations
from .checker.verdict import CheckerInputError, Verdict
from .checker.whitebox import check_atomicity_whitebox
from .config import ConfigError, quorum_plan, resilience_bound
from .sim.engine import DEFAULT_STEP_BUDGET
from .sim.runner import FAULT_MODES, RunConfig, run
from .sim.trace import HistoryParseError, format_history, parse_history

log = logging.getLogger("crr_register")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
PROTOCOLS = ("A", "D", "naive-recovery", "rr-baseline")

# section -> {yaml key: RunConfig field}
SECTIONS: Dict[str, Dict[str, str]] = {
    "params": {"n": "n", "k": "k", "r": "r", "b": "b"},
    "workload": {"clients": "clients", "ops": "ops", "write_ratio": "write_ratio",
                 "think_max": "think_max"},
    "network": {"min_delay": "min_delay", "max_delay": "max_delay", "drop_prob": "drop_prob",
                "slow_prob": "slow_prob", "slow_max": "slow_max", "horizon": "horizon",
                "outages": "outages", "outage_max": "outage_max",
                "retransmit_period": "retransmit_period"},
    "faults": {"mode": "faults", "window": "fault_window"},
}
TOP_LEVEL = {"protocol": "protocol", "seed": "seed", "step_budget": "step_budget"}
PROBABILITIES = {"write_ratio", "drop_prob", "slow_prob"}


class CliError(Exception):
    pass


# -- config ---------------------------------------------------------------


def _typed(path: str, name: str, value, default):
    if name in ("r", "b"):
        if isinstance(value, str) and value.lower() == "unknown":
            return "unknown"
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer or 'unknown', got {value!r}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        if value < 0:
            raise ConfigError(path, f"must be non-negative, got {value}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if name in PROBABILITIES and not 0.0 <= value <= 1.0:
            raise ConfigError(path, f"must lie in [0, 1], got {value}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def config_from_mapping(data) -> RunConfig:
    """Validate a parsed YAML mapping into a RunConfig; ConfigError names the field."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping of sections")
    defaults = RunConfig()
    values = {}
    for key, raw in data.items():
        if key in TOP_LEVEL:
            name = TOP_LEVEL[key]
            values[name] = _typed(key, name, raw, getattr(defaults, name))
        elif key in SECTIONS:
            if not isinstance(raw, dict):
                raise ConfigError(key, "expected a mapping")
            for sub, val in raw.items():
                path = f"{key}.{sub}"
                if sub not in SECTIONS[key]:
                    raise ConfigError(path, "unknown key")
                name = SECTIONS[key][sub]
                values[name] = _typed(path, name, val, getattr(defaults, name))
        else:
            raise ConfigError(str(key), "unknown key")
    cfg = replace(defaults, **values)
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError("protocol", f"expected one of {', '.join(PROTOCOLS)}")
    if cfg.faults not in FAULT_MODES:
        raise ConfigError("faults.mode", f"expected one of {', '.join(FAULT_MODES)}")
    if cfg.min_delay < 1 or cfg.max_delay < cfg.min_delay:
        raise ConfigError("network.max_delay", "need 1 <= min_delay <= max_delay")
    if cfg.retransmit_period < 1:
        raise ConfigError("network.retransmit_period", "must be at least 1")
    if cfg.clients < 1:
        raise ConfigError("workload.clients", "at least one client is required")
    try:
        params = cfg.params()
    except ConfigError as exc:
        raise ConfigError(f"params.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    if cfg.protocol == "rr-baseline":
        from .scenarios.baselines import RRProtocol

        try:
            RRProtocol.from_params(params)
        except ConfigError as exc:
            raise ConfigError(f"params.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise CliError(f"{path}: invalid YAML: {exc}") from None
    return config_from_mapping(data)


def bound_warning(cfg: RunConfig) -> Optional[str]:
    p = cfg.params()
    if cfg.protocol == "D":
        need = 2 * p.k + p.b_eff + 1
        if p.n < need:
            return f"n={p.n} is below 2k+b+1={need}; operations may stall"
    elif cfg.protocol == "A" and quorum_plan(p).below_bound:
        need = resilience_bound(p.k, p.r_eff, p.b_eff)
        return f"n={p.n} is below the resilience bound {need}; operations may stall"
    return None


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "step_budget", None) is not None:
        cfg = replace(cfg, step_budget=args.step_budget)
    return cfg


# -- output ---------------------------------------------------------------


def _write_outputs(out_dir: str, trace_text: str, history_text: str,
                   verdicts: Dict[str, Verdict]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.txt").write_text(trace_text)
    (out / "history.txt").write_text(history_text)
    (out / "verdicts.txt").write_text(
        "".join(f"check={name} {v.line()}\n" for name, v in verdicts.items()))


def _print_verdicts(verdicts: Dict[str, Verdict]) -> None:
    for name, v in verdicts.items():
        print(f"check={name} {v.line()}")


# -- subcommands ----------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    warning = bound_warning(cfg)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    result = run(cfg)
    verdicts = evaluate(result, cfg.protocol, cfg.n, cfg.k, cfg.faults == "eventual")
    _write_outputs(args.out_dir, result.trace.text(), format_history(result.history), verdicts)
    _print_verdicts(verdicts)
    print(f"steps={result.steps} ops={len(result.history)} stalled={result.stalled} "
          f"out={args.out_dir}")
    return EXIT_VIOLATION if violations(verdicts) else EXIT_OK


def check_files(history_text: str, trace_lines: Optional[List[str]] = None) -> Dict[str, Verdict]:
    """Verdicts for a saved history (and optionally its trace)."""
    history = parse_history(history_text)
    out: Dict[str, Verdict] = {}
    if len(history) <= MAX_OPS:
        out["blackbox"] = check_atomicity_blackbox(history)
    else:
        out["blackbox"] = Verdict("skipped", True, {"ops": len(history), "cap": MAX_OPS})
    if all(r.tau is not None for r in history if r.complete):
        try:
            out["whitebox"] = check_atomicity_whitebox(history)
        except CheckerInputError as exc:
            out["whitebox"] = Verdict("invalid-tau", False, {"error": str(exc)})
    if trace_lines is not None:
        out["real_time"] = check_real_time_property(calls_from_lines(trace_lines))
        incs = incarnations_from_lines(trace_lines)
        if incs:
            out["incarnations"] = check_incarnation_monotonicity(incs)
    return out


def cmd_check(args) -> int:
    try:
        history_text = Path(args.history).read_text()
        trace_lines = Path(args.trace).read_text().splitlines() if args.trace else None
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}") from None
    try:
        verdicts = check_files(history_text, trace_lines)
    except (HistoryParseError, CheckerInputError, ValueError, KeyError) as exc:
        raise CliError(f"parse error: {exc}") from None
    _print_verdicts(verdicts)
    return EXIT_OK if all(v.ok for v in verdicts.values()) else EXIT_VIOLATION


def sweep_one(cfg: RunConfig) -> Tuple[int, str, Dict[str, int], List[str]]:
    """(seed, outcome, max hops per op kind, violated checks) for one seed."""
    result = run(cfg)
    verdicts = evaluate(result, cfg.protocol, cfg.n, cfg.k, cfg.faults == "eventual")
    bad = sorted(violations(verdicts))
    hops: Dict[str, int] = {}
    for rec in result.history:
        if rec.complete and rec.hops is not None:
            hops[rec.kind] = max(hops.get(rec.kind, 0), rec.hops)
    outcome = "violation" if bad else ("stall" if result.stalled else "pass")
    return cfg.seed, outcome, hops, bad


def cmd_sweep(args) -> int:
    base = replace(_apply_overrides(load_config(args.config), args), record_events=False)
    warning = bound_warning(base)
    if warning:
        print(f"warning: {warning}", file=sys.stderr)
    start = base.seed if args.start is None else args.start
    cfgs = [base.with_seed(s) for s in range(start, start + args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(sweep_one, cfgs, chunksize=16))
    else:
        rows = [sweep_one(c) for c in cfgs]
    counts = {"pass": 0, "violation": 0, "stall": 0}
    max_hops = {"read": 0, "write": 0}
    bad_seeds = []
    for seed, outcome, hops, bad in rows:
        counts[outcome] += 1
        for kind, h in hops.items():
            max_hops[kind] = max(max_hops[kind], h)
        if bad:
            bad_seeds.append((seed, bad))
        log.debug("seed=%d outcome=%s hops=%s", seed, outcome, hops)
    print("seeds  pass  violation  stall  max_read_hops  max_write_hops")
    print(f"{len(rows):5d}  {counts['pass']:4d}  {counts['violation']:9d}  {counts['stall']:5d}  "
          f"{max_hops['read']:13d}  {max_hops['write']:14d}")
    for seed, bad in bad_seeds:
        print(f"violation seed={seed} checks={','.join(bad)}")
    return EXIT_VIOLATION if bad_seeds else EXIT_OK


def cmd_scenario(args) -> int:
    from .scenarios.scripts import SCENARIOS

    if args.list or not args.name:
        for name in SCENARIOS:
            print(name)
        return EXIT_OK
    if args.name not in SCENARIOS:
        raise CliError(f"unknown scenario {args.name!r}; try --list")
    budget = args.step_budget or DEFAULT_STEP_BUDGET
    res = SCENARIOS[args.name](step_budget=budget)
    _write_outputs(args.out_dir, res.result.trace.text(), format_history(res.result.history),
                   res.verdicts)
    print(res.summary())
    for note in res.notes:
        print(f"note: {note}")
    for rec in res.result.history:
        print(rec.to_line())
    return EXIT_VIOLATION if res.flagged else EXIT_OK


def latency_config(label: str, n: int, seed: int, ops: int = 8) -> RunConfig:
    """Failure-free workload for A1 (P holds), A2 (P fails) or D at size n."""
    if label == "A1":
        k, r, b = (n - 1) // 2, (n - 1) % 2, "unknown"  # n = 2k + r + 1
        protocol = "A"
    elif label == "A2":
        k, r, b = 1, 1, 0  # n >= 2k + b + 1 breaks P
        protocol = "A"
    elif label == "D":
        k, r, b = 1, "unknown", 0
        protocol = "D"
    else:
        raise ValueError(f"unknown latency setup {label!r}")
    return RunConfig(protocol=protocol, n=n, k=k, r=r, b=b, clients=3, ops=ops, seed=seed,
                     record_events=False)


def bench_latency(ns=(3, 5, 7), workloads: int = 100, labels=("A1", "A2", "D")) -> Dict:
    """hops histogram per (label, n, op kind) over failure-free workloads."""
    table: Dict[tuple, Dict[int, int]] = {}
    for label in labels:
        for n in ns:
            for seed in range(workloads):
                result = run(latency_config(label, n, seed))
                for rec in result.history:
                    if rec.complete:
                        hist = table.setdefault((label, n, rec.kind), {})
                        hist[rec.hops] = hist.get(rec.hops, 0) + 1
    return table


def cmd_bench_latency(args) -> int:
    table = bench_latency(tuple(args.n), args.workloads)
    print("protocol  n  op     ops  min_hops  max_hops")
    exact = True
    for (label, n, kind), hist in sorted(table.items()):
        lo, hi = min(hist), max(hist)
        exact &= lo == hi == 4
        print(f"{label:8s} {n:2d}  {kind:5s} {sum(hist.values()):5d}  {lo:8d}  {hi:8d}")
    return EXIT_OK if exact else EXIT_VIOLATION


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out-dir", default="out", help="directory for output files")
    common.add_argument("--step-budget", type=int, default=None,
                        help=f"simulator step budget (default {DEFAULT_STEP_BUDGET})")

    parser = argparse.ArgumentParser(prog="crr-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one configuration")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", parents=[common], help="check a saved history")
    p.add_argument("history")
    p.add_argument("--trace", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", parents=[common], help="run a configuration over many seeds")
    p.add_argument("config")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--start", type=int, default=None, help="first seed (default: config seed)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scenario", parents=[common], help="replay a packaged script")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("bench-latency", parents=[common],
                       help="message delays of failure-free operations")
    p.add_argument("--n", type=int, nargs="+", default=[3, 5, 7])
    p.add_argument("--workloads", type=int, default=100)
    p.set_defaults(func=cmd_bench_latency)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("CRR_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config field '{exc.field}': {str(exc).split(': ', 1)[-1]}",
              file=sys.stderr)
        return EXIT_USAGE
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
