"""Shared vocabulary: timestamps, request ids, request kinds and wire messages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional, Tuple

V0 = "v0"
"""Initial register value."""


class Timestamp(NamedTuple):
    """(counter, client-id) pair; tuple ordering is the lexicographic order."""

    cnt: float
    pid: int

    def __str__(self) -> str:
        cnt = "inf" if self.cnt == math.inf else str(int(self.cnt))
        return f"({cnt},{self.pid})"

    @classmethod
    def parse(cls, text: str) -> "Timestamp":
        body = text.strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise ValueError(f"malformed timestamp {text!r}")
        cnt_s, pid_s = body[1:-1].split(",")
        cnt = math.inf if cnt_s.strip() == "inf" else int(cnt_s)
        return cls(cnt, int(pid_s))


TS0 = Timestamp(0, 0)


def infinite_ts(pid: int) -> Timestamp:
    """Timestamp of an operation that never chose one; above every finite timestamp."""
    return Timestamp(math.inf, pid)


def ts_compare(a: Timestamp, b: Timestamp) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    if a.cnt != b.cnt:
        return -1 if a.cnt < b.cnt else 1
    if a.pid != b.pid:
        return -1 if a.pid < b.pid else 1
    return 0


class RequestId(NamedTuple):
    origin: int
    seq: int

    def __str__(self) -> str:
        return f"{self.origin}.{self.seq}"


class IdCounter:
    """Per-process source of fresh request ids."""

    def __init__(self, origin: int):
        self.origin = origin
        self.next_seq = 0

    def fresh(self) -> RequestId:
        rid = RequestId(self.origin, self.next_seq)
        self.next_seq += 1
        return rid


def fresh_request_id(origin: int, counter: IdCounter) -> RequestId:
    if counter.origin != origin:
        raise ValueError("id counter belongs to another process")
    return counter.fresh()


# -- request kinds ----------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TS:
    def __str__(self) -> str:
        return "TS"


@dataclass(frozen=True, slots=True)
class TSVal:
    """Query form when ``ts`` is None, write payload otherwise."""

    ts: Optional[Timestamp] = None
    val: Any = None

    def __str__(self) -> str:
        if self.ts is None:
            return "TSVal"
        return f"TSVal({self.ts};{self.val})"


@dataclass(frozen=True, slots=True)
class PreCV:
    """Query ``pre_cv[j]`` when ``v`` is None, else raise it to ``v``."""

    j: int
    v: Optional[int] = None

    def __str__(self) -> str:
        return f"preCV({self.j})" if self.v is None else f"preCV({self.j};{self.v})"


@dataclass(frozen=True, slots=True)
class CV:
    """Query the whole crash vector when ``j`` is None, else raise ``cv[j]`` to ``v``."""

    j: Optional[int] = None
    v: Optional[int] = None

    def __str__(self) -> str:
        return "CV" if self.j is None else f"CV({self.j};{self.v})"


@dataclass(frozen=True, slots=True)
class State:
    inc: int = 0

    def __str__(self) -> str:
        return f"State({self.inc})"


def is_recovery_write(req: Any) -> bool:
    return isinstance(req, (PreCV, CV))


# -- messages ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Read:
    id: RequestId
    req: Any

    def __str__(self) -> str:
        return f"READ({self.id};{self.req})"


@dataclass(frozen=True, slots=True)
class ReadAck:
    id: RequestId
    payload: Any
    sender: int

    def __str__(self) -> str:
        return f"READ_ACK({self.id};{fmt_payload(self.payload)};{self.sender})"


@dataclass(frozen=True, slots=True)
class Write:
    id: RequestId
    req: Any
    inc: Optional[int] = None

    def __str__(self) -> str:
        if self.inc is None:
            return f"WRITE({self.id};{self.req})"
        return f"WRITE({self.id};{self.req};{self.inc})"


@dataclass(frozen=True, slots=True)
class WriteAck:
    id: RequestId
    inc: Optional[int]
    cv: Optional[Tuple[int, ...]]
    sender: int

    def __str__(self) -> str:
        if self.inc is None:
            return f"WRITE_ACK({self.id};{self.sender})"
        cv = "_" if self.cv is None else fmt_vec(self.cv)
        return f"WRITE_ACK({self.id};{self.inc};{cv};{self.sender})"


def fmt_vec(vec) -> str:
    return "[" + " ".join(str(x) for x in vec) + "]"


def fmt_payload(payload: Any) -> str:
    if isinstance(payload, tuple) and not isinstance(payload, Timestamp):
        return "<" + " ".join(
            fmt_vec(p) if isinstance(p, tuple) and not isinstance(p, Timestamp) else str(p)
            for p in payload
        ) + ">"
    return str(payload)
