"""Register client: the read and write functions shared by every register protocol."""

from __future__ import annotations

from ..core import TS, TSVal, Timestamp
from .base import Process, QuorumCaller


class ClientBusy(RuntimeError):
    pass


class RegisterClient(QuorumCaller, Process):
    """Runs one read or write at a time over whatever quorum calls the protocol provides.

    Latency is tracked as causal hop depth: every message carries the op tag and
    a depth, and replicas answer with depth + 1. A quorum call sends (and
    retransmits) with one more than the deepest ack accepted for the op when
    the call began, so timer-driven resends never lengthen the chain.
    """

    def __init__(self, pid: int, sim, plan):
        Process.__init__(self, pid, sim)
        self.init_caller()
        self.plan = plan
        self.record = None
        self.op_depth = 0
        self.call_depth = 1

    @property
    def idle(self) -> bool:
        return self.record is None

    def invoke(self, kind: str, value=None):
        if self.record is not None:
            raise ClientBusy(f"client {self.pid} already has an operation in flight")
        rec = self.sim.history.begin(self.pid, kind, value)
        self.record = rec
        self.op_depth = 0
        gen = self.op_write(rec, value) if kind == "write" else self.op_read(rec)
        self.start_task(gen)
        return rec

    def op_write(self, rec, value):
        acks = yield from self.read_quorum(TS())
        cnt = max(ts.cnt for ts in acks.values())
        ts = Timestamp(cnt + 1, self.pid)
        rec.tau = ts
        yield from self.write_quorum(TSVal(ts, value))
        return None

    def op_read(self, rec):
        acks = yield from self.read_quorum(TSVal())
        ts, val = max(acks.values(), key=lambda p: p[0])
        rec.tau = ts
        yield from self.write_quorum(TSVal(ts, val))
        return val

    def task_done(self, value) -> None:
        rec = self.record
        self.record = None
        self.sim.history.complete(rec, value, self.op_depth)
        self.sim.client_done(self.pid, rec)

    def send_ctx(self):
        tag = None if self.record is None else self.record.op_id
        return tag, self.call_depth

    def begin_round(self) -> None:
        self.call_depth = self.op_depth + 1

    def note_ack(self, env) -> None:
        if self.record is not None and env.tag == self.record.op_id:
            if env.depth > self.op_depth:
                self.op_depth = env.depth

    def handle(self, msg, env) -> None:
        self.caller_on_ack(msg, env)

    def on_timer(self, token) -> None:
        self.caller_on_timer(token)
