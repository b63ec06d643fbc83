"""Random workloads and random fault schedules."""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Sequence

from ..core import WriteAck
from .engine import FaultEpisode


class Workload:
    """Closed-loop clients issuing a pre-drawn op list with random think times."""

    def __init__(self, rng: random.Random, clients: Sequence[int], total_ops: int,
                 write_ratio: float = 0.5, think_max: int = 3):
        self.rng = rng
        self.think_max = think_max
        self.queues: Dict[int, List[tuple]] = {c: [] for c in clients}
        counters = {c: 0 for c in clients}
        for _ in range(total_ops):
            c = rng.choice(clients)
            if rng.random() < write_ratio:
                counters[c] += 1
                self.queues[c].append(("write", f"w{c}.{counters[c]}"))
            else:
                self.queues[c].append(("read", None))
        self.scheduled = 0

    def start(self, sim) -> None:
        sim.workload = self
        for c in self.queues:
            self._next(sim, c)

    def _next(self, sim, client: int) -> None:
        if self.queues[client]:
            self.scheduled += 1
            sim.schedule(self.rng.randint(0, self.think_max), self._fire, sim, client)

    def _fire(self, sim, client: int) -> None:
        self.scheduled -= 1
        kind, value = self.queues[client].pop(0)
        sim.invoke(client, kind, value)

    def on_idle(self, sim, client: int) -> None:
        self._next(sim, client)

    def exhausted(self) -> bool:
        return self.scheduled == 0 and not any(self.queues.values())


def _episodes_for(rng: random.Random, pid: int, window: int, count: int,
                  rollback, permanent_last: bool, max_down: int = 8) -> List[FaultEpisode]:
    out = []
    t = rng.randint(0, max(0, window // 2))
    for i in range(count):
        if t >= window:
            break
        down = rng.randint(1, max_down)
        last = i == count - 1
        restart = None if (last and permanent_last) else t + down
        out.append(FaultEpisode(pid, t, restart, rollback))
        if restart is None:
            break
        t = restart + rng.randint(1, max_down)
    return out


def static_faults(rng: random.Random, n: int, k: int, r: int, b: int,
                  window: int = 40, max_episodes: int = 2) -> List[FaultEpisode]:
    """Faults within the k-threshold from the start.

    At most k faulty replicas, at most r of which restart rolled back; faulty
    replicas that do not roll back may stay down for good. At most b other
    replicas are benign: they crash and restart with their latest state.
    """
    ids = list(range(1, n + 1))
    faulty = rng.sample(ids, rng.randint(0, min(k, n)))
    rollers = set(faulty[: rng.randint(0, min(r, len(faulty)))])
    rest = [p for p in ids if p not in faulty]
    benign = rng.sample(rest, rng.randint(0, min(b, len(rest))))
    episodes = []
    for pid in sorted(faulty):
        roll = pid in rollers
        episodes += _episodes_for(
            rng, pid, window, rng.randint(1, max_episodes),
            "random" if roll else None,
            permanent_last=not roll and rng.random() < 0.5,
        )
    for pid in sorted(benign):
        episodes += _episodes_for(rng, pid, window, rng.randint(1, max_episodes), None, False)
    return episodes


def eventual_faults(rng: random.Random, n: int, k: int, threshold_time: int = 40,
                    max_episodes: int = 3) -> List[FaultEpisode]:
    """Unrestricted crashes and rollbacks before ``threshold_time``, none after.

    Up to k replicas crash for good; everyone else may crash and restart
    (rolled back or not) any number of times before the threshold time.
    """
    ids = list(range(1, n + 1))
    down = set(rng.sample(ids, rng.randint(0, min(k, n))))
    episodes = []
    for pid in ids:
        if pid in down:
            episodes.append(FaultEpisode(pid, rng.randint(0, threshold_time - 1), None))
            continue
        count = rng.randint(0, max_episodes)
        if count == 0:
            continue
        roll = "random" if rng.random() < 0.7 else None
        episodes += _episodes_for(rng, pid, threshold_time, count, roll, False)
    return episodes


class AckCrashNemesis:
    """Crash a replica just after it acknowledges a write, restart it a unit later.

    Up to k target replicas, at most r of which restart from their initial
    state; the rest keep their latest state. Each target fires at most
    ``budget`` times, on each ack with probability ``p``.
    """

    def __init__(self, rng: random.Random, n: int, k: int, r: int,
                 budget: int = 1, p: float = 0.5):
        self.rng = rng
        self.p = p
        targets = rng.sample(range(1, n + 1), rng.randint(1, min(k, n)) if k else 0)
        rollers = set(targets[: min(r, len(targets))])
        self.left = {pid: budget for pid in targets}
        self.rollback = {pid: 0 if pid in rollers else None for pid in targets}

    def install(self, sim) -> None:
        sim.send_hooks.append(self)

    def __call__(self, sim, env) -> None:
        pid = env.src
        if not isinstance(env.msg, WriteAck) or not self.left.get(pid):
            return
        if self.rng.random() >= self.p:
            return
        self.left[pid] -= 1
        sim.pending_faults += 1
        sim.schedule(0, self._crash, sim, pid)

    def _crash(self, sim, pid: int) -> None:
        if sim.crash(pid):
            sim.schedule(1, self._restart, sim, pid)
        else:
            sim.pending_faults -= 1

    def _restart(self, sim, pid: int) -> None:
        rollback = self.rollback[pid]
        store = getattr(sim.procs[pid], "store", None)
        if store is not None and not len(store.older_versions()):
            rollback = None  # nothing older to lose
        sim.restart(pid, rollback)
        sim.pending_faults -= 1


def availability_holds(status_events, n: int, k: int,
                      eventually_up: Optional[set] = None) -> bool:
    """True iff at every point k+1 eventually-up replicas are active.

    ``eventually_up`` defaults to the replicas whose last status event is not a
    crash. A replica is active from the start until it crashes, and again once
    its restart handler has completed.
    """
    if eventually_up is None:
        last = {}
        for ev in status_events:
            last[ev.pid] = ev.what
        eventually_up = {p for p in range(1, n + 1) if last.get(p) != "crash"}
    active = set(range(1, n + 1))

    def ok() -> bool:
        return len(active & eventually_up) >= k + 1

    if not ok():
        return False
    for ev in status_events:
        if ev.what == "crash":
            active.discard(ev.pid)
        elif ev.what == "active":
            active.add(ev.pid)
        if not ok():
            return False
    return True
