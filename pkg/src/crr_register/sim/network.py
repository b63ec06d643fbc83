"""Channel policies: seeded random delays/loss, and a scripted held-message pool."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional


class Envelope:
    __slots__ = ("uid", "src", "dst", "msg", "tag", "depth", "sent_step")

    def __init__(self, uid, src, dst, msg, tag, depth, sent_step):
        self.uid = uid
        self.src = src
        self.dst = dst
        self.msg = msg
        self.tag = tag
        self.depth = depth
        self.sent_step = sent_step

    @property
    def kind(self) -> str:
        return type(self.msg).__name__


MESSAGE_KINDS = {
    "READ": "Read",
    "READ_ACK": "ReadAck",
    "WRITE": "Write",
    "WRITE_ACK": "WriteAck",
}


@dataclass(frozen=True)
class Match:
    """Message selector for scripts; ``None`` fields are wildcards."""

    kind: Optional[str] = None
    src: Optional[int] = None
    dst: Optional[int] = None

    def __call__(self, env: Envelope) -> bool:
        if self.kind is not None and env.kind != MESSAGE_KINDS.get(self.kind, self.kind):
            return False
        if self.src is not None and env.src != self.src:
            return False
        if self.dst is not None and env.dst != self.dst:
            return False
        return True


class RandomNetwork:
    """Independent per-message delay in [min_delay, max_delay]; loss before ``horizon``.

    With probability ``slow_prob`` a message instead takes up to ``slow_max``
    units, which lets late deliveries race with restarts. Non-FIFO: every
    message is scheduled on its own.
    """

    def __init__(self, rng, min_delay: int = 1, max_delay: int = 3,
                 drop_prob: float = 0.0, horizon: int = 0,
                 slow_prob: float = 0.0, slow_max: int = 0):
        if min_delay < 1 or max_delay < min_delay:
            raise ValueError("delays must satisfy 1 <= min_delay <= max_delay")
        if slow_prob and slow_max < max_delay:
            raise ValueError("slow_max must be at least max_delay")
        self.slow_prob = slow_prob
        self.slow_max = slow_max
        self.outages: List[tuple] = []  # (pid, start, end): pid unreachable in [start, end)
        self.rng = rng
        self.min_delay = min_delay
        self.max_delay = max_delay
        self.drop_prob = drop_prob
        self.horizon = horizon
        self.sim = None

    def attach(self, sim) -> None:
        self.sim = sim

    def isolated(self, pid: int, now: int) -> bool:
        return any(p == pid and start <= now < end for p, start, end in self.outages)

    def route(self, env: Envelope) -> None:
        sim = self.sim
        if self.outages and sim.now < self.horizon and (
            self.isolated(env.src, sim.now) or self.isolated(env.dst, sim.now)
        ):
            sim.trace.log("drop", env.src, id=env.uid, reason="partition")
            return
        if self.drop_prob and sim.now < self.horizon and self.rng.random() < self.drop_prob:
            sim.trace.log("drop", env.src, id=env.uid, reason="loss")
            return
        if self.slow_prob and self.rng.random() < self.slow_prob:
            delay = self.rng.randint(self.max_delay, self.slow_max)
        elif self.min_delay == self.max_delay:
            delay = self.min_delay
        else:
            delay = self.rng.randint(self.min_delay, self.max_delay)
        sim.schedule_delivery(delay, env)


class ScriptNetwork:
    """Holds messages in a pool while a script is in manual mode.

    In auto mode (inside ``RunUntil``) messages not matched by a block rule
    are delivered after one time unit; blocked ones stay in the pool.
    """

    def __init__(self):
        self.pool: List[Envelope] = []
        self.blocks: List[Match] = []
        self.auto = False
        self.sim = None

    def attach(self, sim) -> None:
        self.sim = sim

    def blocked(self, env: Envelope) -> bool:
        return any(b(env) for b in self.blocks)

    def route(self, env: Envelope) -> None:
        if self.auto and not self.blocked(env):
            self.sim.schedule_delivery(1, env)
        else:
            self.pool.append(env)

    def take(self, match: Match) -> List[Envelope]:
        hit = [e for e in self.pool if match(e)]
        self.pool = [e for e in self.pool if not match(e)]
        return hit

    def release_unblocked(self) -> List[Envelope]:
        hit = [e for e in self.pool if not self.blocked(e)]
        self.pool = [e for e in self.pool if self.blocked(e)]
        return hit
