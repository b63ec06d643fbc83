"""Acceptance criteria, one test each. Every test records a PASS/FAIL line
that is repeated in the terminal summary."""

import random
import time

import pytest

from crr_register.checker.blackbox import check_atomicity_blackbox, replay_witness
from crr_register.checker.suite import evaluate, violations
from crr_register.checker.verdict import CheckerInputError
from crr_register.checker.whitebox import CERTIFIED, check_atomicity_whitebox
from crr_register.cli import bench_latency
from crr_register.scenarios.scripts import SCENARIOS
from crr_register.sim.runner import RunConfig, run
from crr_register.sim.trace import format_history

from conftest import mutate, random_history

# Pinned tolerances.
EXPECTED_HOPS = 4          # exact, no slack
LATENCY_WORKLOADS = 100
SEEDS = 1000
MAX_OPS = 10
MAX_VIOLATIONS = 0
MAX_STALLS = 0
SCENARIO_SECONDS = 1.0
HISTORIES = 5000
HISTORY_OPS = 8
DETERMINISM_CONFIGS = 50


def sweep(base, eventual=False):
    bad, stalls, faulted = [], 0, 0
    for seed in range(SEEDS):
        cfg = base.with_seed(seed)
        res = run(cfg)
        v = violations(evaluate(res, cfg.protocol, cfg.n, cfg.k, eventual))
        if v:
            bad.append((seed, sorted(v)))
        stalls += res.stalled
        faulted += any(tag != "perfect" for tag in res.faults.values())
    return bad, stalls, faulted


def test_failure_free_latency_is_four_hops(report):
    table = bench_latency(ns=(3, 5, 7), workloads=LATENCY_WORKLOADS)
    spread = {key: (min(h), max(h)) for key, h in table.items()}
    ops = sum(sum(h.values()) for h in table.values())
    ok = len(table) == 18 and all(s == (EXPECTED_HOPS, EXPECTED_HOPS) for s in spread.values())
    report(1, ok, "failure-free latency", f"{ops} ops over A1/A2/D x n=3,5,7, hops min=max={EXPECTED_HOPS}")
    assert ok, spread


@pytest.mark.parametrize("k,r", [(1, 0), (1, 1), (2, 1)])
def test_a1_static_faults_safe(report, k, r):
    base = RunConfig(protocol="A", n=2 * k + r + 1, k=k, r=r, b="unknown", clients=3,
                     ops=MAX_OPS, faults="static", drop_prob=0.1, record_events=False)
    assert base.params().r_eff == r
    bad, stalls, faulted = sweep(base)
    ok = len(bad) <= MAX_VIOLATIONS
    report(2, ok, f"A1 k={k} r={r} n={base.n}",
           f"{SEEDS} seeds, violations={len(bad)}, runs with faults={faulted}")
    assert ok, bad[:5]


@pytest.mark.parametrize("k,b", [(1, 0), (1, 1), (2, 0)])
def test_a2_static_faults_safe_and_live(report, k, b):
    base = RunConfig(protocol="A", n=2 * k + b + 1, k=k, r=1, b=b, clients=3,
                     ops=MAX_OPS, faults="static", drop_prob=0.1, record_events=False)
    bad, stalls, faulted = sweep(base)
    ok = len(bad) <= MAX_VIOLATIONS and stalls <= MAX_STALLS
    report(3, ok, f"A2 k={k} b={b} n={base.n}",
           f"{SEEDS} seeds, violations={len(bad)}, stalls={stalls}, runs with faults={faulted}")
    assert ok, bad[:5]


@pytest.mark.parametrize("k,b", [(1, 0), (1, 1), (2, 0), (2, 1)])
def test_d_eventual_faults_safe_and_live(report, k, b):
    base = RunConfig(protocol="D", n=2 * k + b + 1, k=k, b=b, clients=3, ops=MAX_OPS,
                     faults="eventual", drop_prob=0.1, record_events=False)
    bad, stalls, faulted = sweep(base, eventual=True)
    ok = len(bad) <= MAX_VIOLATIONS and stalls <= MAX_STALLS
    report(4, ok, f"D k={k} b={b} n={base.n}",
           f"{SEEDS} seeds, violations={len(bad)}, stalls={stalls}, runs with faults={faulted}")
    assert ok, bad[:5]


def test_counterexamples_flagged_and_d_survives(report):
    timings = {}
    flagged = {}
    for name in ("naive-recovery", "rr-baseline", "ams-baseline", "d-ack-crash-race"):
        t0 = time.perf_counter()
        res = SCENARIOS[name]()
        timings[name] = time.perf_counter() - t0
        flagged[name] = res
    d = flagged.pop("d-ack-crash-race")
    read = d.result.history[-1]
    ok = (all(r.flagged for r in flagged.values())
          and all(t < SCENARIO_SECONDS for t in timings.values())
          and not d.flagged and d.verdicts["blackbox"].word == "linearizable"
          and read.kind == "read" and read.value == "v")
    slowest = max(timings.values())
    report(5, ok, "scenarios", f"3 baselines flagged, D read={read.value}, slowest={slowest:.3f}s")
    assert ok, timings


def test_below_bound_stalls_but_stays_safe(report):
    low = SCENARIOS["below-bound"]()
    high = SCENARIOS["below-bound-plus-one"]()
    ok = (low.result.stalled and low.verdicts["blackbox"].ok and not low.flagged
          and not high.result.stalled and not high.flagged)
    report(6, ok, "resilience bound",
           f"n=3 stalled={low.result.stalled} linearizable={low.verdicts['blackbox'].ok}, "
           f"n=4 stalled={high.result.stalled}")
    assert ok


def test_whitebox_sound_against_blackbox(report):
    rng = random.Random(20261018)
    certified = unsound = bad_witness = rejected = 0
    for i in range(HISTORIES):
        hist = random_history(rng, max_ops=HISTORY_OPS)
        if i % 2:
            hist = mutate(rng, hist)
        try:
            white = check_atomicity_whitebox(hist)
        except CheckerInputError:
            rejected += 1
            continue
        black = check_atomicity_blackbox(hist)
        if black.ok and replay_witness(hist, black.detail["witness"]) is not None:
            bad_witness += 1
        if white.word == CERTIFIED:
            certified += 1
            unsound += not black.ok
    ok = unsound == 0 and bad_witness == 0 and certified > 0
    report(7, ok, "whitebox soundness",
           f"{HISTORIES} histories, certified={certified}, unsound={unsound}, "
           f"witness failures={bad_witness}, input errors={rejected}")
    assert ok


def test_runs_are_deterministic(report):
    rng = random.Random(7)
    mismatched = []
    for i in range(DETERMINISM_CONFIGS):
        proto = rng.choice(["A", "D"])
        k = rng.randint(1, 2)
        b = rng.randint(0, 1)
        cfg = RunConfig(protocol=proto, n=2 * k + b + 1, k=k, r=1 if proto == "A" else "unknown",
                        b=b, clients=rng.randint(1, 3), ops=rng.randint(2, 10),
                        drop_prob=rng.choice([0.0, 0.1, 0.3]),
                        faults=rng.choice(["none", "static", "eventual"] if proto == "D"
                                          else ["none", "static"]),
                        seed=rng.getrandbits(32))
        a, c = run(cfg), run(cfg)
        if (a.trace.text() != c.trace.text()
                or format_history(a.history) != format_history(c.history)):
            mismatched.append(i)
    ok = not mismatched
    report(8, ok, "determinism", f"{DETERMINISM_CONFIGS} configs, mismatches={len(mismatched)}")
    assert ok, mismatched
