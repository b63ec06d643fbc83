"""Run every applicable check on one simulation result."""

from __future__ import annotations

from typing import Dict

from .blackbox import MAX_OPS, check_atomicity_blackbox
from .monitors import (
    check_availability, check_crash_consistency, check_incarnation_monotonicity,
    check_liveness, check_real_time_property, check_recovery_termination,
)
from .verdict import CheckerInputError, Verdict
from .whitebox import check_atomicity_whitebox


def evaluate(result, protocol: str = "A", n: int = 0, k: int = 0,
             eventual: bool = False) -> Dict[str, Verdict]:
    trace = result.trace
    out: Dict[str, Verdict] = {}
    if len(result.history) <= MAX_OPS:
        out["blackbox"] = check_atomicity_blackbox(result.history)
    try:
        out["whitebox"] = check_atomicity_whitebox(result.history)
    except CheckerInputError as exc:
        # Protocol-assigned timestamps broke uniqueness: a protocol bug, not bad input.
        out["whitebox"] = Verdict("invalid-tau", False, {"error": str(exc)})
    out["real_time"] = check_real_time_property(trace.calls)
    out["liveness"] = check_liveness(result)
    if protocol == "D":
        out["incarnations"] = check_incarnation_monotonicity(trace.incarnations)
        out["crash_consistency"] = check_crash_consistency(trace)
        out["recovery"] = check_recovery_termination(trace)
        if eventual:
            out["availability"] = check_availability(trace, n, k)
    return out


def violations(verdicts: Dict[str, Verdict]) -> Dict[str, Verdict]:
    """Safety failures only; stalls are reported separately."""
    return {name: v for name, v in verdicts.items() if not v.ok and name != "liveness"}
