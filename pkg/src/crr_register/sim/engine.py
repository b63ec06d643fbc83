"""Deterministic discrete-event simulator for crash-recovery with rollback."""

from __future__ import annotations

import heapq
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from .network import Envelope
from .trace import History, HistoryRecord, Trace

log = logging.getLogger(__name__)

DEFAULT_STEP_BUDGET = 10_000
DEFAULT_RETRANSMIT_PERIOD = 1  # quorum-call timer; larger values widen race windows


@dataclass
class FaultEpisode:
    """Crash ``pid`` at ``crash_at``; restart at ``restart_at`` unless None (permanent).

    ``rollback`` is None (restore latest), ``"random"`` (any strictly older
    persisted version, drawn when the restart executes) or a version index.
    """

    pid: int
    crash_at: int
    restart_at: Optional[int]
    rollback: object = None


@dataclass
class RunResult:
    trace: Trace
    history: List[HistoryRecord]
    stalled: bool
    steps: int
    end_time: int
    incomplete: List[HistoryRecord] = field(default_factory=list)
    pending_recoveries: List[int] = field(default_factory=list)
    faults: Dict[int, str] = field(default_factory=dict)


class Simulator:
    def __init__(self, protocol, n: int, n_clients: int, network,
                 seed: int = 0, step_budget: int = DEFAULT_STEP_BUDGET,
                 record_events: bool = True, availability_guard: Optional[int] = None,
                 retransmit_period: int = DEFAULT_RETRANSMIT_PERIOD):
        self.now = 0
        self.step = 0
        self.step_budget = step_budget
        self.retransmit_period = retransmit_period
        self.rng = random.Random(seed)
        self.queue: list = []
        self._seq = 0
        self._uid = 0
        self.trace = Trace(self, record_events)
        self.history = History(self)
        self.n = n
        self.replica_ids = range(1, n + 1)
        self.client_ids = range(n + 1, n + 1 + n_clients)
        self.protocol = protocol
        self.procs: Dict[int, object] = {}
        for pid in self.replica_ids:
            self.procs[pid] = protocol.make_replica(pid, self)
        for pid in self.client_ids:
            self.procs[pid] = protocol.make_client(pid, self)
        self.network = network
        network.attach(self)
        self.workload = None
        self.send_hooks: List[Callable] = []
        self.busy_clients = 0
        self.pending_faults = 0
        self.recovering = set()
        self.ever_crashed = set()
        self.rolled_back = set()
        # Availability guard: replicas expected to be eventually up; a crash is
        # suppressed unless k+1 of them stay active. None disables the guard.
        self.availability_guard = availability_guard
        self.eventually_up = set(self.replica_ids)
        self.active = set(self.replica_ids)

    # -- scheduling -------------------------------------------------------

    def schedule(self, delay: int, fn: Callable, *args) -> None:
        self._seq += 1
        heapq.heappush(self.queue, (self.now + delay, self._seq, fn, args))

    def schedule_at(self, time: int, fn: Callable, *args) -> None:
        self._seq += 1
        heapq.heappush(self.queue, (max(time, self.now), self._seq, fn, args))

    def schedule_delivery(self, delay: int, env: Envelope) -> None:
        self.schedule(delay, self._deliver, env)

    def set_timer(self, pid: int, token, delay: int) -> None:
        self.schedule(delay, self._timer, pid, token)

    # -- messages ---------------------------------------------------------

    def transmit(self, src: int, dst: int, msg, tag, depth: int) -> None:
        self._uid += 1
        env = Envelope(self._uid, src, dst, msg, tag, depth, self.step)
        if self.trace.record_events:
            self.trace.log("send", src, id=env.uid, dst=dst, msg=msg, hop=depth)
        self.network.route(env)
        for hook in self.send_hooks:
            hook(self, env)

    def _deliver(self, env: Envelope) -> None:
        proc = self.procs[env.dst]
        if not proc.up:
            self.trace.log("drop", env.dst, id=env.uid, reason="down")
            return
        self.trace.log("deliver", env.dst, id=env.uid, src=env.src, msg=env.msg)
        proc.deliver(env)

    def _timer(self, pid: int, token) -> None:
        proc = self.procs[pid]
        if proc.up:
            proc.on_timer(token)

    # -- process lifecycle ------------------------------------------------

    def crash(self, pid: int) -> bool:
        proc = self.procs[pid]
        if not proc.up:
            return False
        if self.availability_guard is not None and not self._crash_allowed(pid):
            self.trace.log("crash_suppressed", pid)
            return False
        proc.crash()
        self.active.discard(pid)
        self.recovering.discard(pid)
        self.ever_crashed.add(pid)
        self.trace.note_status(pid, "crash")
        self.trace.log("crash", pid)
        return True

    def _crash_allowed(self, pid: int) -> bool:
        others = (self.active & self.eventually_up) - {pid}
        return len(others) >= self.availability_guard + 1

    def restart(self, pid: int, rollback=None) -> None:
        proc = self.procs[pid]
        if proc.up:
            return
        if rollback == "random":
            store = getattr(proc, "store", None)
            older = store.older_versions() if store is not None else range(0)
            rollback = self.rng.choice(older) if len(older) else None
        if rollback is not None:
            self.rolled_back.add(pid)
        self.trace.note_status(pid, "restart", rollback)
        self.trace.log("restart", pid, rollback="-" if rollback is None else rollback)
        self.recovering.add(pid)
        proc.restart(rollback)

    def replica_active(self, pid: int) -> None:
        """Called by a replica when its restart handler has completed."""
        self.recovering.discard(pid)
        self.active.add(pid)
        self.trace.note_status(pid, "active")
        self.trace.log("active", pid)

    def add_faults(self, episodes: Sequence[FaultEpisode]) -> None:
        for ep in episodes:
            if ep.restart_at is None:
                self.eventually_up.discard(ep.pid)
            self.pending_faults += 1
            self.schedule_at(ep.crash_at, self._run_episode, ep)

    def _run_episode(self, ep: FaultEpisode) -> None:
        crashed = self.crash(ep.pid)
        if crashed and ep.restart_at is not None:
            self.schedule_at(ep.restart_at, self._finish_episode, ep)
        else:
            self.pending_faults -= 1

    def _finish_episode(self, ep: FaultEpisode) -> None:
        self.pending_faults -= 1
        self.restart(ep.pid, ep.rollback)

    # -- clients ----------------------------------------------------------

    def invoke(self, client: int, kind: str, value=None) -> HistoryRecord:
        proc = self.procs[client]
        self.busy_clients += 1
        self.trace.log("invoke", client, op=kind, val="-" if value is None else value)
        return proc.invoke(kind, value)

    def client_done(self, client: int, rec: HistoryRecord) -> None:
        self.busy_clients -= 1
        self.trace.log("respond", client, op=rec.kind, val=rec.value, hops=rec.hops,
                       tau="-" if rec.tau is None else rec.tau)
        if self.workload is not None:
            self.workload.on_idle(self, client)

    # -- running ----------------------------------------------------------

    def quiescent(self) -> bool:
        return (
            self.busy_clients == 0
            and self.pending_faults == 0
            and not self.recovering
            and (self.workload is None or self.workload.exhausted())
        )

    def execute(self, fn: Callable, *args):
        """Run one externally driven action as its own step (scripted mode)."""
        self.now += 1
        self.step += 1
        return fn(*args)

    def inflight(self) -> List[Envelope]:
        """Remove and return messages already scheduled for delivery."""
        keep, out = [], []
        for item in self.queue:
            (out if item[2] == self._deliver else keep).append(item)
        heapq.heapify(keep)
        self.queue = keep
        return [item[3][0] for item in sorted(out, key=lambda it: it[1])]

    def step_once(self) -> bool:
        if not self.queue:
            return False
        t, _, fn, args = heapq.heappop(self.queue)
        if t > self.now:
            self.now = t
        self.step += 1
        fn(*args)
        return True

    def run(self, until: Optional[Callable[[], bool]] = None) -> bool:
        """Run until ``until()`` (default: quiescence) or the budget is spent.

        Returns True when the stop condition was reached.
        """
        cond = until or self.quiescent
        while not cond():
            if self.step >= self.step_budget or not self.step_once():
                return cond()
        return True

    def result(self) -> RunResult:
        done = self.quiescent()
        records = self.history.records
        return RunResult(
            trace=self.trace,
            history=records,
            stalled=not done,
            steps=self.step,
            end_time=self.now,
            incomplete=[r for r in records if not r.complete],
            pending_recoveries=sorted(self.recovering),
            faults=self.fault_accounting(),
        )

    def fault_accounting(self) -> Dict[int, str]:
        """Classify replicas as perfect / benign / crash-faulty / rollback-faulty."""
        tags = {}
        for pid in self.replica_ids:
            if pid in self.rolled_back:
                tags[pid] = "rollback-faulty"
            elif not self.procs[pid].up or pid not in self.eventually_up:
                tags[pid] = "crash-faulty"
            elif pid in self.ever_crashed:
                tags[pid] = "benign"
            else:
                tags[pid] = "perfect"
        return tags
