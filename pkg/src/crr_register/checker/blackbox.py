"""Exhaustive linearizability oracle for small register histories."""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence

from ..core import V0
from ..sim.trace import HistoryRecord
from .verdict import CheckerInputError, Verdict

MAX_OPS = 12


def _prepare(history: Sequence[HistoryRecord]) -> List[HistoryRecord]:
    if len(history) > MAX_OPS:
        raise CheckerInputError(f"{len(history)} ops exceeds the cap of {MAX_OPS}")
    values = [o.value for o in history if o.kind == "write"]
    if len(set(values)) != len(values):
        raise CheckerInputError("write values must be unique")
    if V0 in values:
        raise CheckerInputError(f"writes may not use the initial value {V0}")
    # Incomplete reads constrain nothing and are left out.
    return [o for o in history if o.kind == "write" or o.complete]


def find_linearization(history: Sequence[HistoryRecord],
                       longest: Optional[list] = None) -> Optional[List[int]]:
    """Return op ids in a legal sequential order, or None if none exists.

    Every complete op appears; incomplete writes appear only if needed.
    ``longest``, if given, receives the longest legal prefix explored.
    """
    ops = _prepare(history)
    m = len(ops)
    required = 0
    preds = [0] * m
    for i, a in enumerate(ops):
        if a.complete:
            required |= 1 << i
        for j, b in enumerate(ops):
            if b.complete and b.respond < a.invoke:
                preds[i] |= 1 << j
    failed = set()
    order: List[int] = []

    def dfs(done: int, value) -> bool:
        if done & required == required:
            return True
        if longest is not None and len(order) > len(longest):
            longest[:] = [ops[i].op_id for i in order]
        key = (done, value)
        if key in failed:
            return False
        for i in range(m):
            bit = 1 << i
            if done & bit or preds[i] & ~done:
                continue
            op = ops[i]
            if op.kind == "read":
                if op.value != value:
                    continue
                nxt = value
            else:
                nxt = op.value
            order.append(i)
            if dfs(done | bit, nxt):
                return True
            order.pop()
        failed.add(key)
        return False

    if dfs(0, V0):
        return [ops[i].op_id for i in order]
    return None


def replay_witness(history: Sequence[HistoryRecord], order: Sequence[int]) -> Optional[str]:
    """Check that ``order`` is a legal linearization; return a reason if not."""
    by_id: Dict[int, HistoryRecord] = {o.op_id: o for o in history}
    if len(set(order)) != len(order):
        return "an op appears twice"
    placed = set(order)
    for o in history:
        if o.complete and o.op_id not in placed:
            return f"complete op {o.op_id} missing"
    pos = {oid: i for i, oid in enumerate(order)}
    for oid in order:
        o = by_id.get(oid)
        if o is None:
            return f"unknown op {oid}"
        if o.kind == "read" and not o.complete:
            return f"incomplete read {oid} placed"
    for a in history:
        if not a.complete or a.op_id not in pos:
            continue
        for b in history:
            if b.op_id in pos and a.respond < b.invoke and pos[a.op_id] > pos[b.op_id]:
                return f"real-time order {a.op_id} -> {b.op_id} broken"
    value = V0
    for oid in order:
        o = by_id[oid]
        if o.kind == "write":
            value = o.value
        elif o.value != value:
            return f"read {oid} returned {o.value}, register held {value}"
    return None


def check_atomicity_blackbox(history: Sequence[HistoryRecord]) -> Verdict:
    prefix: list = []
    order = find_linearization(history, prefix)
    if order is not None:
        return Verdict("linearizable", True, {"witness": order})
    return Verdict("violation", False, {"longest_prefix": prefix})
