"""ABD-style register tolerating crash-restart-rollback failures.

Two variants share this code. When the predicate P holds, the lowest
2k + r + 1 replicas persist their state and quorums have size n - k. When it
fails, nothing is persisted, read quorums shrink to k + 1, and a restarted
replica marks itself stale and stops answering reads for good.
"""

from __future__ import annotations

from ..config import Params, QuorumPlan, quorum_plan
from ..core import TS, TS0, V0, Read, ReadAck, TSVal, Write, WriteAck
from .base import Replica
from .client import RegisterClient


class ReplicaA(Replica):
    def __init__(self, pid: int, sim, plan: QuorumPlan):
        self.plan = plan
        super().__init__(pid, sim, persistent=pid in plan.nonvolatile)

    def initial_state(self):
        return (TS0, V0, False)

    def snapshot(self):
        return (self.ts, self.val, self.stale)

    def load(self, snap) -> None:
        self.ts, self.val, self.stale = snap

    def on_restart(self) -> None:
        if not self.plan.p_holds:
            self.stale = True
        self.sim.trace.log("state", self.pid, ts=self.ts, val=self.val, stale=self.stale)
        self.finish_recovery()

    def handle(self, msg, env) -> None:
        if isinstance(msg, Read):
            payload = self.read_payload(msg.req)
            if payload is not None:
                self.send(env.src, ReadAck(msg.id, payload, self.pid))
        elif isinstance(msg, Write):
            self.on_write(msg, env)

    def read_payload(self, req):
        if self.stale:
            return None
        if isinstance(req, TS):
            return self.ts
        if isinstance(req, TSVal):
            return (self.ts, self.val)
        return None

    def on_write(self, msg, env) -> None:
        req = msg.req
        if req.ts > self.ts:
            self.ts, self.val = req.ts, req.val
            self.sim.trace.log("state", self.pid, ts=self.ts, val=self.val)
        self.send(env.src, WriteAck(msg.id, None, None, self.pid))


class ProtocolA:
    name = "A"
    replica_cls = ReplicaA
    client_cls = RegisterClient

    def __init__(self, params: Params):
        self.params = params
        self.plan = quorum_plan(params)

    @property
    def variant(self) -> str:
        return "A1" if self.plan.p_holds else "A2"

    def make_replica(self, pid: int, sim):
        return self.replica_cls(pid, sim, self.plan)

    def make_client(self, pid: int, sim):
        return self.client_cls(pid, sim, self.plan)
