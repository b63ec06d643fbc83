"""Flawed protocols from earlier designs, rebuilt on the same simulator.

naive-recovery
    The stale-flag register, except that a restarted replica reads the state
    of a read quorum, adopts the newest value and resumes serving reads.
rr-baseline
    ABD with replica-side "suspicious" flags after restart and an adaptive read
    quorum ``F + min(s, M_R) + 1`` (``s`` = suspicious responders). Reads do not
    write back.
ams-baseline
    Amnesia-masking storage: replicas outside the stable set forget everything
    on restart and stay silent to reads until some write reaches them.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..config import ConfigError, Params, QuorumPlan, resolve
from ..core import TS, TS0, V0, Read, ReadAck, State, TSVal, Write, WriteAck
from ..protocols.base import QuorumCaller, ReadCall, Replica, WriteCall, Process
from ..protocols.client import RegisterClient
from ..protocols.protocol_a import ProtocolA, ReplicaA
from ..sim.trace import HistoryRecord


# -- naive recovery ---------------------------------------------------------


class NaiveRecoveryReplica(ReplicaA):
    def on_restart(self) -> None:
        self.stale = True
        self.start_task(self.recover())

    def recover(self):
        acks = yield from self.read_quorum(State())
        ts, val = max(acks.values(), key=lambda p: p[0])
        if ts > self.ts:
            self.ts, self.val = ts, val
        self.stale = False
        self.sim.trace.log("state", self.pid, ts=self.ts, val=self.val, stale=False)

    def task_done(self, value) -> None:
        self.finish_recovery()

    def read_payload(self, req):
        if isinstance(req, State) and not self.stale:
            return (self.ts, self.val)
        return super().read_payload(req)


class NaiveRecoveryProtocol(ProtocolA):
    name = "naive-recovery"
    replica_cls = NaiveRecoveryReplica


# -- RR model baseline ------------------------------------------------------


@dataclass(frozen=True)
class RRParams:
    m_r: int
    f: int

    def __post_init__(self):
        if self.m_r < 0 or self.f < 1:
            raise ConfigError("rr", "requires M_R >= 0 and F >= 1")

    @property
    def n(self) -> int:
        return max(self.m_r, self.f) + self.f + 1

    @property
    def w(self) -> int:
        return max(self.m_r, self.f) + 1

    def r(self, suspicious: int) -> int:
        return self.f + min(suspicious, self.m_r) + 1


class AdaptiveReadCall(ReadCall):
    """Read quorum whose size grows with the number of suspicious responders."""

    def __init__(self, rid, req, rr: RRParams, exclude=()):
        super().__init__(rid, req, rr.r(0))
        self.rr = rr
        self.exclude = set(exclude)

    def pending_targets(self, replicas):
        return [z for z in replicas if z not in self.acks and z not in self.exclude]

    def satisfied(self) -> bool:
        s = sum(1 for _, sus in self.acks.values() if sus)
        return len(self.acks) >= self.rr.r(s)

    def result(self):
        return {j: payload for j, (payload, _) in self.acks.items()}


class RRReplica(Replica):
    def __init__(self, pid: int, sim, rr: RRParams):
        self.rr = rr
        super().__init__(pid, sim, persistent=True)

    def initial_state(self):
        return (TS0, V0, False)

    def snapshot(self):
        return (self.ts, self.val, self.suspicious)

    def load(self, snap) -> None:
        self.ts, self.val, self.suspicious = snap

    def on_restart(self) -> None:
        self.suspicious = True
        self.start_task(self.recover())

    def recover(self):
        rec = self.sim.trace.begin_call(self.pid, "read", State())
        acks = yield AdaptiveReadCall(self.ids.fresh(), State(), self.rr, exclude={self.pid})
        self.sim.trace.end_call(rec, acks)
        ts, val = max(acks.values(), key=lambda p: p[0])
        if ts > self.ts:
            self.ts, self.val = ts, val
        self.suspicious = False
        self.sim.trace.log("state", self.pid, ts=self.ts, val=self.val, suspicious=False)

    def task_done(self, value) -> None:
        self.finish_recovery()

    def handle(self, msg, env) -> None:
        if isinstance(msg, Read):
            req = msg.req
            payload = self.ts if isinstance(req, TS) else (self.ts, self.val)
            self.send(env.src, ReadAck(msg.id, (payload, self.suspicious), self.pid))
        elif isinstance(msg, Write):
            req = msg.req
            if req.ts > self.ts:
                self.ts, self.val = req.ts, req.val
                self.sim.trace.log("state", self.pid, ts=self.ts, val=self.val)
            self.send(env.src, WriteAck(msg.id, None, None, self.pid))


class RRClient(RegisterClient):
    def read_quorum(self, req):
        rec = self.sim.trace.begin_call(self.pid, "read", req)
        result = yield AdaptiveReadCall(self.ids.fresh(), req, self.plan.rr)
        self.sim.trace.end_call(rec, result)
        return result

    def op_read(self, rec):
        acks = yield from self.read_quorum(TSVal())
        ts, val = max(acks.values(), key=lambda p: p[0])
        rec.tau = ts
        return val


@dataclass(frozen=True)
class RRPlan:
    rr: RRParams
    q_w: int
    q_r: int


class RRProtocol:
    name = "rr-baseline"
    variant = "rr"

    def __init__(self, rr: RRParams):
        self.rr = rr
        self.plan = RRPlan(rr, rr.w, rr.r(0))

    @classmethod
    def from_params(cls, params: Params) -> "RRProtocol":
        p = params if params.resolved else resolve(params)
        rr = RRParams(m_r=p.r_eff, f=p.k)
        if p.n != rr.n:
            raise ConfigError("n", f"rr-baseline with M_R={rr.m_r}, F={rr.f} needs n={rr.n}")
        return cls(rr)

    def make_replica(self, pid: int, sim):
        return RRReplica(pid, sim, self.rr)

    def make_client(self, pid: int, sim):
        return RRClient(pid, sim, self.plan)


# -- amnesia-masking storage baseline -------------------------------------


@dataclass(frozen=True)
class AMSParams:
    a: int
    b: int

    def __post_init__(self):
        if self.a <= 0 or self.b <= 1:
            raise ConfigError("ams", "requires a > 0 and b > 1")

    @property
    def n(self) -> int:
        return 2 * self.a + 3 * self.b + 1

    @property
    def f(self) -> int:
        return self.a + self.b

    @property
    def stable(self) -> frozenset:
        return frozenset(range(1, 2 * self.a + 2 * self.b + 2))

    @property
    def q_w(self) -> int:
        return self.a + 2 * self.b + 1

    @property
    def q_r(self) -> int:
        return self.a + self.b + 1


AMS_BOTTOM = (V0, 0)


class AMSReplica(Replica):
    def __init__(self, pid: int, sim, ams: AMSParams):
        self.ams = ams
        super().__init__(pid, sim, persistent=pid in ams.stable)

    def initial_state(self):
        return (V0, 0, False)

    def snapshot(self):
        return (self.v, self.ts, self.amnesic)

    def load(self, snap) -> None:
        self.v, self.ts, self.amnesic = snap

    def on_restart(self) -> None:
        if not self.persistent:
            self.v, self.ts, self.amnesic = V0, 0, True
        self.finish_recovery()

    def handle(self, msg, env) -> None:
        if isinstance(msg, Read):
            if self.amnesic:
                return
            self.send(env.src, ReadAck(msg.id, (self.v, self.ts), self.pid))
        elif isinstance(msg, Write):
            v, ts = msg.req
            if ts > self.ts:
                self.v, self.ts = v, ts
            self.amnesic = False
            self.sim.trace.log("state", self.pid, v=self.v, ts=self.ts)
            self.send(env.src, WriteAck(msg.id, None, None, self.pid))


class AMSClient(QuorumCaller, Process):
    """Issues WriteAMS(v, ts) and ReadAMS(); results go to the trace's AMS logs."""

    def __init__(self, pid: int, sim, ams: AMSParams):
        Process.__init__(self, pid, sim)
        self.init_caller()
        self.ams = ams
        self.current = None

    def invoke(self, kind: str, value=None):
        entry = {"client": self.pid, "invoke": self.sim.step, "respond": None}
        if kind == "write":
            entry["pair"] = value
            self.sim.trace.ams_writes.append(entry)
            gen = self._write(value)
        else:
            entry["result"] = None
            self.sim.trace.ams_reads.append(entry)
            gen = self._read()
        self.current = (kind, entry)
        self.start_task(gen)
        return entry

    def _write(self, pair):
        rec = self.sim.trace.begin_call(self.pid, "write", pair)
        acks = yield WriteCall(self.ids.fresh(), pair, self.ams.q_w)
        self.sim.trace.end_call(rec, acks)
        return None

    def _read(self):
        rec = self.sim.trace.begin_call(self.pid, "read", "AMS")
        acks = yield ReadCall(self.ids.fresh(), "AMS", self.ams.q_r)
        self.sim.trace.end_call(rec, acks)
        return sorted(set(acks.values()), key=lambda p: (p[1], str(p[0])))

    def task_done(self, value) -> None:
        kind, entry = self.current
        self.current = None
        entry["respond"] = self.sim.step
        if kind == "read":
            entry["result"] = value
        stub = HistoryRecord(-1, self.pid, kind, value if kind == "read" else entry["pair"],
                             entry["invoke"], entry["respond"])
        self.sim.client_done(self.pid, stub)

    def handle(self, msg, env) -> None:
        self.caller_on_ack(msg, env)

    def on_timer(self, token) -> None:
        self.caller_on_timer(token)


class AMSProtocol:
    name = "ams-baseline"
    variant = "ams"

    def __init__(self, ams: AMSParams):
        self.ams = ams
        self.plan = QuorumPlan(ams.q_w, ams.q_r, False, ams.stable)

    def make_replica(self, pid: int, sim):
        return AMSReplica(pid, sim, self.ams)

    def make_client(self, pid: int, sim):
        return AMSClient(pid, sim, self.ams)


def check_ams_property(trace) -> "Verdict":
    """Each completed ReadAMS returns the highest pair among WriteAMS calls completed before it began."""
    from ..checker.verdict import Verdict

    for rd in trace.ams_reads:
        if rd["respond"] is None:
            continue
        done = [w["pair"] for w in trace.ams_writes
                if w["respond"] is not None and w["respond"] < rd["invoke"]]
        if not done:
            continue
        top = max(done, key=lambda p: p[1])
        if top not in rd["result"]:
            return Verdict("violation", False, {
                "expected": f"({top[0]};{top[1]})",
                "returned": [f"({v};{t})" for v, t in rd["result"]],
            })
    return Verdict("pass", True, {"reads": len(trace.ams_reads)})


BASELINES = {
    "naive-recovery": NaiveRecoveryProtocol,
    "rr-baseline": RRProtocol.from_params,
}
