"""Scripted schedules: explicit delivery, blocking, crashes and restarts.

Outside ``RunUntil`` every message is held in the network pool until a step
delivers or drops it, and timers do not fire. ``RunUntil`` lets the simulator
run freely (held messages that are not blocked get delivered, timers fire)
until a condition holds; messages still in flight then go back to the pool.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .network import Match, ScriptNetwork


@dataclass(frozen=True)
class Invoke:
    client: int
    op: str
    value: object = None


@dataclass(frozen=True)
class Deliver:
    match: Match


@dataclass(frozen=True)
class Drop:
    match: Match


@dataclass(frozen=True)
class Crash:
    pid: int


@dataclass(frozen=True)
class Restart:
    pid: int
    rollback: Optional[int] = None


@dataclass(frozen=True)
class Block:
    match: Match


@dataclass(frozen=True)
class Unblock:
    match: Optional[Match] = None  # None lifts every block


@dataclass(frozen=True)
class RunUntil:
    condition: Callable  # called with the simulator
    label: str = ""


class ScriptRunner:
    def __init__(self, sim):
        if not isinstance(sim.network, ScriptNetwork):
            raise TypeError("scripted runs need a ScriptNetwork")
        self.sim = sim
        self.net = sim.network
        self.reached = []

    def run(self, steps) -> None:
        for step in steps:
            self.apply(step)

    def apply(self, step) -> None:
        sim, net = self.sim, self.net
        if isinstance(step, Invoke):
            sim.execute(sim.invoke, step.client, step.op, step.value)
        elif isinstance(step, Deliver):
            for env in net.take(step.match):
                sim.execute(sim._deliver, env)
        elif isinstance(step, Drop):
            for env in net.take(step.match):
                sim.execute(lambda e=env: sim.trace.log("drop", e.dst, id=e.uid, reason="script"))
        elif isinstance(step, Crash):
            sim.execute(sim.crash, step.pid)
        elif isinstance(step, Restart):
            sim.execute(sim.restart, step.pid, step.rollback)
        elif isinstance(step, Block):
            net.blocks.append(step.match)
        elif isinstance(step, Unblock):
            if step.match is None:
                net.blocks.clear()
            else:
                net.blocks = [b for b in net.blocks if b != step.match]
        elif isinstance(step, RunUntil):
            self.reached.append(self.run_until(lambda: step.condition(sim)))
        else:
            raise TypeError(f"unknown script step {step!r}")

    def run_until(self, cond: Callable[[], bool]) -> bool:
        sim, net = self.sim, self.net
        net.auto = True
        for env in net.release_unblocked():
            sim.schedule_delivery(1, env)
        try:
            return sim.run(until=cond)
        finally:
            net.auto = False
            net.pool.extend(sim.inflight())
