"""Process automata and the quorum-call driver.

Protocol code is written as generators that ``yield`` a quorum call and are
resumed with its result, mirroring the blocking pseudocode. The driver turns
that into a non-blocking state machine: it transmits the call's messages,
retransmits to non-responders on a timer (1 unit by default), and resumes the generator
once enough distinct senders answered.
"""

from __future__ import annotations

from typing import Any, Dict, Generator, Iterable, List, Optional

from ..core import IdCounter, Read, ReadAck, RequestId, Write, WriteAck
from ..sim.store import PersistentStore



class ReadCall:
    """Collect READ_ACKs for one request id from ``need`` distinct senders."""

    kind = "read"

    def __init__(self, rid: RequestId, req, need: int):
        self.id = rid
        self.req = req
        self.need = need
        self.acks: Dict[int, Any] = {}
        self.msg = Read(rid, req)

    def pending_targets(self, replicas: Iterable[int]) -> List[int]:
        return [z for z in replicas if z not in self.acks]

    def message_for(self, dst: int):
        return self.msg

    def accept(self, msg, env=None) -> bool:
        if isinstance(msg, ReadAck) and msg.sender not in self.acks:
            self.acks[msg.sender] = msg.payload
            return True
        return False

    def satisfied(self) -> bool:
        return len(self.acks) >= self.need

    def result(self):
        return dict(self.acks)


class WriteCall:
    """Collect WRITE_ACKs for one request id from ``need`` distinct senders."""

    kind = "write"

    def __init__(self, rid: RequestId, req, need: int):
        self.id = rid
        self.req = req
        self.need = need
        self.acks: Dict[int, WriteAck] = {}
        self.msg = Write(rid, req)

    def pending_targets(self, replicas: Iterable[int]) -> List[int]:
        return [z for z in replicas if z not in self.acks]

    def message_for(self, dst: int):
        return self.msg

    def accept(self, msg, env=None) -> bool:
        if isinstance(msg, WriteAck) and msg.sender not in self.acks:
            self.acks[msg.sender] = msg
            return True
        return False

    def satisfied(self) -> bool:
        return len(self.acks) >= self.need

    def result(self):
        return dict(self.acks)


class Process:
    """A simulated process. Subclasses implement ``handle``."""

    is_replica = False

    def __init__(self, pid: int, sim):
        self.pid = pid
        self.sim = sim
        self.up = True

    def send(self, dst: int, msg) -> None:
        tag, depth = self.send_ctx()
        self.sim.transmit(self.pid, dst, msg, tag, depth)

    def send_ctx(self):
        return None, 1

    def deliver(self, env) -> None:
        self.handle(env.msg, env)

    def handle(self, msg, env) -> None:  # pragma: no cover - abstract
        raise NotImplementedError

    def on_timer(self, token) -> None:
        pass


class QuorumCaller:
    """Mixin running at most one protocol task (generator) at a time."""

    task: Optional[Generator] = None
    call = None

    def init_caller(self) -> None:
        self.ids = IdCounter(self.pid)
        self.task = None
        self.call = None
        self._timer_seq = 0

    @property
    def replicas(self) -> range:
        return self.sim.replica_ids

    def start_task(self, gen: Generator) -> None:
        self.task = gen
        self._advance(None)

    def abort_task(self) -> None:
        self.task = None
        self.call = None

    def task_done(self, value) -> None:
        """Hook invoked when the running task returns."""

    def _advance(self, value) -> None:
        try:
            call = self.task.send(value)
        except StopIteration as stop:
            self.task = None
            self.call = None
            self.task_done(stop.value)
            return
        self.call = call
        self.begin_round()
        self._transmit(call)
        self._arm_timer()

    def _transmit(self, call) -> None:
        for dst in call.pending_targets(self.replicas):
            self.send(dst, call.message_for(dst))

    def _arm_timer(self) -> None:
        self._timer_seq += 1
        self.sim.set_timer(self.pid, self._timer_seq, self.sim.retransmit_period)

    def caller_on_ack(self, msg, env) -> bool:
        """Route an ACK to the active call; returns True if it was consumed."""
        call = self.call
        if call is None or msg.id != call.id:
            return False
        if call.accept(msg, env):
            self.note_ack(env)
            if call.satisfied():
                self.call = None
                self._advance(call.result())
        return True

    def begin_round(self) -> None:
        """Hook run when a new quorum call starts, before its first broadcast."""

    def note_ack(self, env) -> None:
        """Hook for latency accounting."""

    def caller_on_timer(self, token) -> None:
        if self.call is None or token != self._timer_seq:
            return
        self._transmit(self.call)
        self._arm_timer()

    # -- quorum access functions shared by every protocol ----------------

    def read_quorum(self, req):
        rec = self.sim.trace.begin_call(self.pid, "read", req)
        result = yield ReadCall(self.ids.fresh(), req, self.plan.q_r)
        self.sim.trace.end_call(rec, result)
        return result

    def write_quorum(self, req):
        rec = self.sim.trace.begin_call(self.pid, "write", req)
        result = yield WriteCall(self.ids.fresh(), req, self.plan.q_w)
        self.sim.trace.end_call(rec, result)
        return result


class Replica(QuorumCaller, Process):
    """Replica with failure-atomic persistence of ``snapshot()`` after every handler.

    Subclasses define ``initial_state``, ``snapshot``, ``load`` and ``on_restart``.
    """

    is_replica = True

    def __init__(self, pid: int, sim, persistent: bool):
        Process.__init__(self, pid, sim)
        self.init_caller()
        self.persistent = persistent
        self.load(self.initial_state())
        self.store = PersistentStore(self.snapshot()) if persistent else None
        self._ctx = (None, 1)

    def send_ctx(self):
        return self._ctx

    def deliver(self, env) -> None:
        self._ctx = (env.tag, env.depth + 1)
        try:
            msg = env.msg
            if isinstance(msg, (ReadAck, WriteAck)):
                self.caller_on_ack(msg, env)
            else:
                self.handle(msg, env)
        finally:
            self._ctx = (None, 1)
        self.commit()

    def on_timer(self, token) -> None:
        self.caller_on_timer(token)
        self.commit()

    def commit(self) -> None:
        if self.store is not None and self.up:
            self.store.commit(self.snapshot())

    def crash(self) -> None:
        self.up = False
        self.abort_task()

    def restart(self, rollback=None) -> None:
        self.up = True
        self.abort_task()
        if self.store is not None:
            self.load(self.store.restore(rollback))
        else:
            self.load(self.initial_state())
        self.on_restart()
        self.commit()

    def finish_recovery(self) -> None:
        self.sim.replica_active(self.pid)

    def initial_state(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def snapshot(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def load(self, snap) -> None:  # pragma: no cover - abstract
        raise NotImplementedError

    def on_restart(self) -> None:
        self.finish_recovery()
