import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from crr_register.checker.blackbox import (
    MAX_OPS, check_atomicity_blackbox, find_linearization, replay_witness,
)
from crr_register.checker.monitors import (
    calls_from_lines, check_fault_bounds, check_incarnation_monotonicity, check_liveness,
    check_real_time_property, check_recovery_termination, incarnations_from_lines,
)
from crr_register.checker.suite import evaluate, violations
from crr_register.checker.verdict import CheckerInputError, Verdict
from crr_register.checker.whitebox import CERTIFIED, INCONCLUSIVE, check_atomicity_whitebox
from crr_register.core import TS, TS0, Timestamp, TSVal
from crr_register.scenarios.scripts import naive_recovery_race
from crr_register.sim.runner import RunConfig, run
from crr_register.sim.trace import CallRecord

from conftest import history, mutate, op, random_history


def brute_force_linearizable(hist):
    """Oracle: try every subset of incomplete writes and every permutation."""
    complete = [o for o in hist if o.complete]
    pending = [o for o in hist if not o.complete and o.kind == "write"]
    for size in range(len(pending) + 1):
        for extra in itertools.combinations(pending, size):
            for perm in itertools.permutations(complete + list(extra)):
                if _legal(perm):
                    return True
    return False


def _legal(seq):
    value = "v0"
    for i, a in enumerate(seq):
        for b in seq[:i]:
            if a.complete and a.respond < b.invoke:
                return False
        if a.kind == "write":
            value = a.value
        elif a.value != value:
            return False
    return True


# -- whitebox -------------------------------------------------------------


def test_whitebox_empty_history_certified():
    assert check_atomicity_whitebox([]).word == CERTIFIED


def test_whitebox_write_then_read_certified():
    h = history(op("write", 4, 1, 5, "v", (1, 4)), op("read", 5, 6, 9, "v", (1, 4)))
    v = check_atomicity_whitebox(h)
    assert (v.word, v.ok) == (CERTIFIED, True)


def test_whitebox_stale_read_has_cycle():
    h = history(op("write", 4, 1, 5, "v", (1, 4)), op("read", 5, 6, 9, "v0", TS0))
    v = check_atomicity_whitebox(h)
    assert v.word == INCONCLUSIVE and v.detail["reason"] == "cycle"
    assert set(v.detail["cycle"]) == {0, 1}


def test_whitebox_mismatched_value_is_malformed():
    h = history(op("write", 4, 1, 5, "v", (1, 4)), op("read", 5, 6, 9, "w", (1, 4)))
    assert check_atomicity_whitebox(h).detail["reason"] == "malformed"


def test_whitebox_incomplete_write_without_tau_is_fine():
    h = history(op("write", 4, 1, None, "v"), op("read", 5, 2, 9, "v0", TS0))
    assert check_atomicity_whitebox(h).word == CERTIFIED


def test_whitebox_rejects_duplicate_tau():
    h = history(op("write", 4, 1, 5, "v", (1, 4)), op("write", 4, 6, 9, "w", (1, 4)))
    with pytest.raises(CheckerInputError):
        check_atomicity_whitebox(h)


def test_whitebox_rejects_missing_tau_on_complete_op():
    with pytest.raises(CheckerInputError):
        check_atomicity_whitebox(history(op("write", 4, 1, 5, "v")))


# -- blackbox -------------------------------------------------------------


def test_blackbox_examples():
    ok = history(op("write", 4, 1, 5, "v"), op("read", 5, 6, 9, "v"))
    assert check_atomicity_blackbox(ok).word == "linearizable"
    bad = history(op("write", 4, 1, 5, "v"), op("read", 5, 6, 9, "v0"))
    v = check_atomicity_blackbox(bad)
    assert v.word == "violation" and not v.ok


def test_blackbox_overlap_allows_either_value():
    for val in ("v0", "v"):
        h = history(op("write", 4, 1, 10, "v"), op("read", 5, 2, 9, val))
        assert check_atomicity_blackbox(h).ok


def test_blackbox_incomplete_write_may_take_effect():
    h = history(op("write", 4, 1, None, "v"), op("read", 5, 6, 9, "v"))
    assert find_linearization(h) == [0, 1]
    h = history(op("write", 4, 1, None, "v"), op("read", 5, 6, 9, "v0"))
    assert find_linearization(h) == [1]


def test_blackbox_new_old_inversion_rejected():
    h = history(
        op("write", 4, 1, 20, "v"),
        op("read", 5, 2, 5, "v"),
        op("read", 6, 7, 9, "v0"),
    )
    assert find_linearization(h) is None


def test_blackbox_input_errors():
    with pytest.raises(CheckerInputError):
        find_linearization(history(op("write", 4, 1, 2, "v"), op("write", 5, 3, 4, "v")))
    with pytest.raises(CheckerInputError):
        find_linearization(history(op("write", 4, 1, 2, "v0")))
    big = history(*[op("read", 4, i * 2, i * 2 + 1, "v0") for i in range(MAX_OPS + 1)])
    with pytest.raises(CheckerInputError):
        find_linearization(big)


def test_replay_witness_rejections():
    h = history(op("write", 4, 1, 5, "v"), op("read", 5, 6, 9, "v"), op("read", 6, 1, None))
    assert replay_witness(h, [0, 1]) is None
    assert "missing" in replay_witness(h, [0])
    assert "twice" in replay_witness(h, [0, 0, 1])
    assert "real-time" in replay_witness(h, [1, 0])
    assert "incomplete read" in replay_witness(h, [0, 1, 2])


@given(st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=150, deadline=None)
def test_blackbox_agrees_with_brute_force(seed, mutated):
    rng = random.Random(seed)
    h = random_history(rng, max_ops=6)
    if mutated:
        h = mutate(rng, h)
    order = find_linearization(h)
    assert (order is not None) == brute_force_linearizable(h)
    if order is not None:
        assert replay_witness(h, order) is None


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_generated_histories_linearizable_and_certified(seed):
    h = random_history(random.Random(seed))
    assert check_atomicity_blackbox(h).ok
    assert check_atomicity_whitebox(h).word == CERTIFIED


# -- monitors -------------------------------------------------------------


def _call(actor, kind, req, start, end, **extra):
    return CallRecord(actor, kind, req, start, end, extra=extra)


def test_real_time_monitor_pass_and_fail():
    w = _call(4, "write", TSVal(Timestamp(1, 4), "v"), 1, 5)
    good = _call(5, "read", TS(), 6, 9, ts=[TS0, Timestamp(1, 4)], index=1)
    bad = _call(5, "read", TS(), 6, 9, ts=[TS0, TS0], index=2)
    assert check_real_time_property([w, good]).detail == {"reads_checked": 1}
    v = check_real_time_property([w, bad])
    assert not v.ok and v.detail["read_call"] == 2


def test_real_time_monitor_vacuous_pass():
    r = _call(5, "read", TS(), 0, 3, ts=[TS0])
    assert check_real_time_property([r]).detail == {"reads_checked": 0}


def test_real_time_monitor_flags_naive_trace():
    res = naive_recovery_race()
    assert not check_real_time_property(res.result.trace.calls).ok
    assert not check_real_time_property(calls_from_lines(res.result.trace.lines())).ok


@pytest.mark.parametrize("incs,ok", [
    ([(1, 1, 1), (5, 1, 2)], True),
    ([(1, 1, 3), (5, 1, 3)], False),
    ([(1, 1, 0)], False),
    ([(1, 1, 2), (2, 2, 1)], True),
])
def test_incarnation_monotonicity(incs, ok):
    assert check_incarnation_monotonicity(incs).ok is ok


def test_liveness_verdicts():
    res = run(RunConfig(protocol="A", n=3, k=1, r=1, b=0, ops=4, seed=1))
    assert check_liveness(res).word == "all-complete"
    stalled = run(RunConfig(protocol="A", n=3, k=1, r=1, b=0, ops=4, seed=1, step_budget=20))
    assert check_liveness(stalled).word == "stalled"


def test_fault_bounds():
    faults = {1: "rollback-faulty", 2: "benign", 3: "perfect"}
    assert check_fault_bounds(faults, 1, 1, 1).ok
    assert not check_fault_bounds(faults, 1, 0, 1).ok
    assert not check_fault_bounds(faults, 1, 1, 0).ok


def test_trace_reconstruction_matches_live_records():
    res = run(RunConfig(protocol="D", n=3, k=1, b=0, ops=6, faults="eventual", seed=5))
    lines = res.trace.lines()
    assert incarnations_from_lines(lines) == [tuple(i) for i in res.trace.incarnations]
    rebuilt = calls_from_lines(lines)
    live = res.trace.calls
    assert [(c.actor, c.kind, c.start, c.end) for c in rebuilt] == [
        (c.actor, c.kind, c.start, c.end) for c in live]
    assert check_real_time_property(rebuilt).ok


def test_recovery_termination_on_clean_run():
    res = run(RunConfig(protocol="D", n=3, k=1, b=0, ops=6, faults="eventual", seed=5))
    assert check_recovery_termination(res.trace).ok


# -- suite ----------------------------------------------------------------


def test_suite_reports_naive_violation():
    res = naive_recovery_race()
    bad = violations(evaluate(res.result))
    assert "blackbox" in bad and "real_time" in bad


def test_suite_turns_duplicate_tau_into_verdict():
    class Fake:
        history = history(op("write", 4, 1, 5, "v", (1, 4)), op("write", 5, 6, 9, "w", (1, 4)))
        trace = run(RunConfig(ops=0)).trace
        stalled = False
        incomplete = []
        pending_recoveries = []
    out = evaluate(Fake())
    assert out["whitebox"].word == "invalid-tau" and "whitebox" in violations(out)


def test_violations_ignores_stalls():
    verdicts = {"liveness": Verdict("stalled", False), "blackbox": Verdict("linearizable", True)}
    assert violations(verdicts) == {}


def test_verdict_line_format():
    v = Verdict("fail", False, {"seen": [Timestamp(1, 4), TS0], "actor": 5})
    assert v.line() == "verdict=fail detail=seen=[(1;4) (0;0)],actor=5"
    assert Verdict("pass", True).line() == "verdict=pass detail=-"
