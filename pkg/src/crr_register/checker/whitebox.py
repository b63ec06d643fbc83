"""Dependency-graph certificate of linearizability from protocol timestamps.

Each operation carries tau, the timestamp it selected (or (inf, client) if it
never selected one). From tau we build visibility, write-read (wr),
write-write (ww), read-write (rw) and real-time (rt) edges. A well-formed,
acyclic graph proves the history linearizable; anything else proves nothing,
so the verdict is "inconclusive" rather than "violation".

Incomplete reads are removed before the graph is built. Dropping them never
changes whether a history is linearizable, and the linearization argument
discards them anyway.
"""

from __future__ import annotations

import graphlib
from typing import Dict, List, Sequence, Set, Tuple

from ..core import V0, Timestamp, infinite_ts
from ..sim.trace import HistoryRecord
from .verdict import CheckerInputError, Verdict

CERTIFIED = "linearizable-certified"
INCONCLUSIVE = "inconclusive"

Edge = Tuple[int, int]


def tau_of(op: HistoryRecord) -> Timestamp:
    if op.tau is not None:
        return op.tau
    if op.complete:
        raise CheckerInputError(f"complete op {op.op_id} has no tau")
    return infinite_ts(op.client)


class DependencyGraph:
    def __init__(self, history: Sequence[HistoryRecord]):
        ops = [o for o in history if o.kind == "write" or o.complete]
        self.ops = {o.op_id: o for o in ops}
        self.tau = {o.op_id: tau_of(o) for o in ops}
        writes = [o for o in ops if o.kind == "write"]
        reads = [o for o in ops if o.kind == "read"]
        seen: Dict[Timestamp, int] = {}
        for w in writes:
            t = self.tau[w.op_id]
            if t.cnt != float("inf") and t in seen:
                raise CheckerInputError(
                    f"writes {seen[t]} and {w.op_id} share timestamp {t}"
                )
            seen[t] = w.op_id
        read_taus = {self.tau[r.op_id] for r in reads}
        self.vis: Set[int] = {
            o.op_id for o in ops if o.complete or self.tau[o.op_id] in read_taus
        }
        self.writes = [w.op_id for w in writes]
        self.reads = [r.op_id for r in reads]
        vis_writes = sorted((w for w in self.writes if w in self.vis), key=self.tau.get)
        self.wr: List[Edge] = [
            (w, r) for r in self.reads for w in vis_writes if self.tau[w] == self.tau[r]
        ]
        self.ww: List[Edge] = [
            (a, b) for i, a in enumerate(vis_writes) for b in vis_writes[i + 1:]
        ]
        source = {r: w for w, r in self.wr}
        ww_succ: Dict[int, List[int]] = {w: [] for w in vis_writes}
        for a, b in self.ww:
            ww_succ[a].append(b)
        self.rw: List[Edge] = []
        for r in self.reads:
            if r in source:
                self.rw.extend((r, w) for w in ww_succ[source[r]])
            else:
                self.rw.extend((r, w) for w in vis_writes)
        self.rt: List[Edge] = [
            (a.op_id, b.op_id)
            for a in ops if a.complete
            for b in ops if a.respond < b.invoke
        ]
        self.source = source

    def malformations(self) -> List[str]:
        problems = []
        for w, r in self.wr:
            if self.ops[w].value != self.ops[r].value:
                problems.append(f"read {r} returned {self.ops[r].value} but shares tau with write {w}")
        for r in self.reads:
            if r not in self.source and self.ops[r].value != V0:
                problems.append(f"read {r} returned {self.ops[r].value} with no matching write")
        return problems

    def edges(self) -> List[Edge]:
        return self.rt + self.wr + self.ww + self.rw

    def find_cycle(self):
        sorter = graphlib.TopologicalSorter({v: set() for v in self.ops})
        for a, b in self.edges():
            sorter.add(b, a)
        try:
            sorter.prepare()
        except graphlib.CycleError as err:
            return list(err.args[1])
        return None


def check_atomicity_whitebox(history: Sequence[HistoryRecord]) -> Verdict:
    graph = DependencyGraph(history)
    problems = graph.malformations()
    if problems:
        return Verdict(INCONCLUSIVE, True, {"reason": "malformed", "first": problems[0]})
    cycle = graph.find_cycle()
    if cycle is not None:
        return Verdict(INCONCLUSIVE, True, {"reason": "cycle", "cycle": cycle})
    return Verdict(CERTIFIED, True, {"ops": len(graph.ops)})
