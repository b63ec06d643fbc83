"""Trace monitors for protocol invariants and run-level liveness."""

from __future__ import annotations

import re
from typing import Dict, Iterable, List, Sequence

from ..core import CV, TS, PreCV, State, Timestamp, TSVal
from ..sim.faults import availability_holds
from ..sim.trace import CallRecord, Trace, parse_trace_line
from .verdict import Verdict

_TS_QUERIES = (TS, TSVal, State)


def _written_ts(call: CallRecord):
    req = call.req
    if call.kind == "write" and isinstance(req, TSVal) and req.ts is not None:
        return req.ts
    return None


def check_real_time_property(calls: Sequence[CallRecord]) -> Verdict:
    """Every completed timestamp read invoked after a completed TSVal write of x sees some ts >= x."""
    writes = sorted(
        ((c.end, _written_ts(c)) for c in calls if c.end is not None and _written_ts(c) is not None),
        key=lambda p: p[0],
    )
    reads = [
        c for c in calls
        if c.kind == "read" and c.end is not None and isinstance(c.req, _TS_QUERIES)
    ]
    checked = 0
    for rd in reads:
        seen = rd.extra.get("ts", [])
        top = max(seen) if seen else None
        # Only the largest earlier write matters.
        needed = None
        for end, x in writes:
            if end >= rd.start:
                break
            if needed is None or x > needed:
                needed = x
        if needed is None:
            continue
        checked += 1
        if top is None or top < needed:
            return Verdict("fail", False, {
                "read_call": rd.extra.get("index"), "actor": rd.actor,
                "needed": needed, "seen": seen,
            })
    return Verdict("pass", True, {"reads_checked": checked})


def check_incarnation_monotonicity(incarnations: Iterable[tuple]) -> Verdict:
    """Per replica, incarnations adopted at recovery are > 0 and strictly increasing."""
    last: Dict[int, int] = {}
    for step, pid, value in incarnations:
        prev = last.get(pid, 0)
        if value <= prev:
            return Verdict("fail", False, {"replica": pid, "step": step, "prev": prev, "value": value})
        last[pid] = value
    return Verdict("pass", True, {"replicas": len(last)})


def check_crash_consistency(trace: Trace) -> Verdict:
    """A responder of a recovery write quorum that crashes afterwards re-reads state only
    after the quorum's last crash-vector read began."""
    crashes: Dict[int, List[int]] = {}
    for ev in trace.status:
        if ev.what == "crash":
            crashes.setdefault(ev.pid, []).append(ev.step)
    state_reads: Dict[int, List[int]] = {}
    for step, pid in trace.recovery_reads:
        state_reads.setdefault(pid, []).append(step)
    checked = 0
    for call in trace.calls:
        if call.end is None or not isinstance(call.req, (PreCV, CV)) or call.kind != "write":
            continue
        read_cv = call.extra.get("read_cv")
        for j, acked in call.extra.get("responders", {}).items():
            later = [c for c in crashes.get(j, []) if acked is not None and c > acked]
            if not later:
                continue
            for s in state_reads.get(j, []):
                if s > later[0]:
                    checked += 1
                    if s <= read_cv:
                        return Verdict("fail", False, {
                            "call": call.extra.get("index"), "replica": j,
                            "state_read": s, "read_cv": read_cv,
                        })
    return Verdict("pass", True, {"checked": checked})


def check_recovery_termination(trace: Trace) -> Verdict:
    """Every recovery either completes or is cut short by another crash."""
    crashes: Dict[int, List[int]] = {}
    for ev in trace.status:
        if ev.what == "crash":
            crashes.setdefault(ev.pid, []).append(ev.step)
    for pid, start, end in trace.recoveries:
        if end is None and not any(c > start for c in crashes.get(pid, [])):
            return Verdict("fail", False, {"replica": pid, "started": start})
    return Verdict("pass", True, {"recoveries": len(trace.recoveries)})


def check_liveness(result) -> Verdict:
    if not result.stalled:
        return Verdict("all-complete", True, {"ops": len(result.history)})
    return Verdict("stalled", False, {
        "ops": [r.op_id for r in result.incomplete],
        "recoveries": result.pending_recoveries,
    })


def check_availability(trace: Trace, n: int, k: int) -> Verdict:
    if availability_holds(trace.status, n, k):
        return Verdict("pass", True, {})
    return Verdict("fail", False, {})


def check_fault_bounds(faults: Dict[int, str], k: int, r: int, b: int) -> Verdict:
    """Realized fault classes stay within the configured thresholds."""
    faulty = sum(1 for v in faults.values() if v in ("crash-faulty", "rollback-faulty"))
    rolled = sum(1 for v in faults.values() if v == "rollback-faulty")
    benign = sum(1 for v in faults.values() if v == "benign")
    detail = {"faulty": faulty, "rollback": rolled, "benign": benign}
    ok = faulty <= k and rolled <= r and benign <= b
    return Verdict("pass" if ok else "fail", ok, detail)


# -- reconstruction from trace text --------------------------------------

_TSVAL_W = re.compile(r"^TSVal\(\((\w+);(\d+)\);")
_TS_ITEM = re.compile(r"\((\w+);(\d+)\)")


def _ts(cnt: str, pid: str) -> Timestamp:
    return Timestamp(float("inf") if cnt == "inf" else int(cnt), int(pid))


def calls_from_lines(lines: Iterable[str]) -> List[CallRecord]:
    """Rebuild quorum-call records from ``qcall_begin``/``qcall_end`` trace lines."""
    calls: Dict[str, CallRecord] = {}
    for line in lines:
        if "kind=qcall_" not in line:
            continue
        rec = parse_trace_line(line)
        d = rec["detail"]
        if rec["kind"] == "qcall_begin":
            req_s = d.get("req", "")
            m = _TSVAL_W.match(req_s)
            if m:
                req = TSVal(_ts(*m.groups()), None)
            elif req_s == "TSVal":
                req = TSVal()
            elif req_s == "TS":
                req = TS()
            elif req_s.startswith("State"):
                req = State()
            else:
                req = req_s
            call = CallRecord(int(rec["actor"]), d["op"], req, int(d["step"]))
            call.extra["index"] = int(d["call"])
            calls[d["call"]] = call
        else:
            call = calls.get(d["call"])
            if call is None:
                continue
            call.end = int(d["step"])
            if "ts" in d:
                call.extra["ts"] = sorted(_ts(*g) for g in _TS_ITEM.findall(d["ts"]))
    return list(calls.values())


def incarnations_from_lines(lines: Iterable[str]) -> List[tuple]:
    """``(step, replica, value)`` for every ``incarnation`` trace line."""
    out = []
    for line in lines:
        if "kind=incarnation " not in line:
            continue
        rec = parse_trace_line(line)
        out.append((int(rec["detail"]["step"]), int(rec["actor"]), int(rec["detail"]["inc"])))
    return out
