"""Register that tolerates the failure threshold being violated for a while.

Every replica keeps a crash vector ``cv`` of incarnation numbers and a vector
``pre_cv`` of announced incarnations. A restart runs a distributed recovery
that picks a fresh incarnation, publishes it, and only then re-reads state.
Write quorums are crash-consistent: an ack whose incarnation is older than the
merged crash vector says the sender restarted since, so the ack is discarded
and the write is re-sent.

All replica state is treated as rollback-prone: every replica persists, and
any persisted version may come back at restart.
"""

from __future__ import annotations

from ..config import Params, QuorumPlan, resolve
from ..core import (
    CV, TS, TS0, V0, PreCV, Read, ReadAck, State, TSVal, Write, WriteAck,
    is_recovery_write,
)
from .base import Replica
from .client import RegisterClient


class WriteRoundD:
    """One pass of the crash-consistent write loop.

    Sends only to replicas outside the validated set ``Q`` that have not
    answered this pass yet; the per-destination incarnation is read from the
    caller's live crash vector at send time.
    """

    kind = "write"

    def __init__(self, rid, req, need: int, validated: dict, cv: list):
        self.id = rid
        self.req = req
        self.need = need
        self.validated = validated
        self.cv = cv
        self.acks = {}
        self.sent_steps = {}

    def pending_targets(self, replicas):
        return [z for z in replicas if z not in self.validated and z not in self.acks]

    def message_for(self, dst: int):
        return Write(self.id, self.req, self.cv[dst - 1])

    def accept(self, msg, env=None) -> bool:
        if not isinstance(msg, WriteAck):
            return False
        prev = self.acks.get(msg.sender)
        if prev is None or msg.inc > prev.inc:
            self.acks[msg.sender] = msg
            self.sent_steps[msg.sender] = None if env is None else env.sent_step
            return True
        return False

    def satisfied(self) -> bool:
        return len(self.validated.keys() | self.acks.keys()) >= self.need

    def result(self):
        return dict(self.acks)


def merge_into(cv: list, vec) -> None:
    for z, x in enumerate(vec):
        if x > cv[z]:
            cv[z] = x


class CrashConsistentQuorums:
    """Mixin providing the crash-consistent ``write_quorum``; needs ``self.cv``."""

    def write_quorum(self, req):
        trace = self.sim.trace
        rec = trace.begin_call(self.pid, "write", req)
        rid = self.ids.fresh()
        cv = self.cv
        q_w = self.plan.q_w
        validated = {}  # sender -> (ack, sent step)
        rounds = 0
        while True:
            rounds += 1
            call = WriteRoundD(rid, req, q_w, validated, cv)
            yield call
            merged = dict(validated)
            for j, ack in call.acks.items():
                old = merged.get(j)
                if old is None or ack.inc >= old[0].inc:
                    merged[j] = (ack, call.sent_steps[j])
            if is_recovery_write(req):
                rec.extra["read_cv"] = self.sim.step
                vectors = (yield from self.read_quorum(CV())).values()
            else:
                vectors = [a.cv for a, _ in merged.values()]
            for vec in vectors:
                merge_into(cv, vec)
            validated = {j: e for j, e in merged.items() if e[0].inc >= cv[j - 1]}
            dropped = sorted(merged.keys() - validated.keys())
            if dropped:
                trace.log("discard", self.pid, call=rec.extra["index"], senders=dropped,
                          cv=list(cv))
            if len(validated) >= q_w:
                break
        rec.extra["rounds"] = rounds
        rec.extra["responders"] = {j: e[1] for j, e in validated.items()}
        result = {j: e[0] for j, e in validated.items()}
        trace.end_call(rec, result)
        return result


class ReplicaD(CrashConsistentQuorums, Replica):
    def __init__(self, pid: int, sim, plan: QuorumPlan):
        self.plan = plan
        self.n = len(sim.replica_ids)
        super().__init__(pid, sim, persistent=True)

    def initial_state(self):
        zeros = (0,) * self.n
        return (TS0, V0, zeros, zeros, False)

    def snapshot(self):
        return (self.ts, self.val, tuple(self.cv), tuple(self.pre_cv), self.stale)

    def load(self, snap) -> None:
        self.ts, self.val, cv, pre_cv, self.stale = snap
        self.cv = list(cv)
        self.pre_cv = list(pre_cv)

    @property
    def me(self) -> int:
        return self.pid - 1

    def on_restart(self) -> None:
        self.start_task(self.recover())

    def task_done(self, value) -> None:
        self.finish_recovery()

    def recover(self):
        trace = self.sim.trace
        self.stale = True
        entry = [self.pid, self.sim.step, None]
        trace.recoveries.append(entry)
        acks = yield from self.read_quorum(PreCV(self.pid))
        next_inc = max(acks.values()) + 1
        yield from self.write_quorum(PreCV(self.pid, next_inc))
        self.cv[self.me] = next_inc
        trace.incarnations.append((self.sim.step, self.pid, next_inc))
        trace.log("incarnation", self.pid, inc=next_inc)
        yield from self.write_quorum(CV(self.pid, self.cv[self.me]))
        trace.recovery_reads.append((self.sim.step, self.pid))
        acks = yield from self.read_quorum(State(self.cv[self.me]))
        for _, _, cv, pre_cv in acks.values():
            merge_into(self.pre_cv, pre_cv)
            merge_into(self.cv, cv)
        ts, val = max(((a[0], a[1]) for a in acks.values()), key=lambda p: p[0])
        if ts > self.ts:
            self.ts, self.val = ts, val
        self.stale = False
        entry[2] = self.sim.step
        trace.log("state", self.pid, ts=self.ts, val=self.val, cv=list(self.cv))

    def handle(self, msg, env) -> None:
        if isinstance(msg, Read):
            if self.stale:
                return
            req = msg.req
            if isinstance(req, State):
                src = env.src - 1
                if req.inc > self.cv[src]:
                    self.cv[src] = req.inc
            self.send(env.src, ReadAck(msg.id, self.read_payload(req), self.pid))
        elif isinstance(msg, Write):
            req = msg.req
            if isinstance(req, TSVal):
                if self.stale:
                    return
                if req.ts > self.ts:
                    self.ts, self.val = req.ts, req.val
                    self.sim.trace.log("state", self.pid, ts=self.ts, val=self.val)
                self.send(env.src, WriteAck(msg.id, self.cv[self.me], tuple(self.cv), self.pid))
            else:
                inc = msg.inc or 0
                if inc > self.cv[self.me]:
                    self.cv[self.me] = inc
                vec = self.pre_cv if isinstance(req, PreCV) else self.cv
                if req.v > vec[req.j - 1]:
                    vec[req.j - 1] = req.v
                self.send(env.src, WriteAck(msg.id, self.cv[self.me], None, self.pid))

    def read_payload(self, req):
        if isinstance(req, TS):
            return self.ts
        if isinstance(req, TSVal):
            return (self.ts, self.val)
        if isinstance(req, PreCV):
            return self.pre_cv[req.j - 1]
        if isinstance(req, CV):
            return tuple(self.cv)
        if isinstance(req, State):
            return (self.ts, self.val, tuple(self.cv), tuple(self.pre_cv))
        raise TypeError(f"unknown request kind {req!r}")


class ClientD(CrashConsistentQuorums, RegisterClient):
    def __init__(self, pid: int, sim, plan: QuorumPlan):
        super().__init__(pid, sim, plan)
        self.cv = [0] * len(sim.replica_ids)


def plan_d(params: Params) -> QuorumPlan:
    """Quorum sizes n - k / k + 1; every replica persists rollback-prone state."""
    p = params if params.resolved else resolve(params)
    return QuorumPlan(
        q_w=p.n - p.k,
        q_r=p.k + 1,
        p_holds=False,
        nonvolatile=frozenset(range(1, p.n + 1)),
        below_bound=p.n < 2 * p.k + p.b_eff + 1,
    )


class ProtocolD:
    name = "D"
    variant = "D"
    replica_cls = ReplicaD
    client_cls = ClientD

    def __init__(self, params: Params):
        self.params = params if params.resolved else resolve(params)
        self.plan = plan_d(self.params)

    def make_replica(self, pid: int, sim):
        return self.replica_cls(pid, sim, self.plan)

    def make_client(self, pid: int, sim):
        return self.client_cls(pid, sim, self.plan)
