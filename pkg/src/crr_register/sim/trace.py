"""Execution traces and operation histories, plus their line formats.

Trace lines::

    t=<int> kind=<word> actor=<id> detail=<key=value,...>

History lines (``inv``/``resp`` are simulator step indices, so they are
strictly ordered even when several events share a virtual time)::

    op=<read|write> client=<id> inv=<t> resp=<t|-> val=<token> tau=<(c,j)|->
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..core import Timestamp


@dataclass
class HistoryRecord:
    op_id: int
    client: int
    kind: str
    value: Any
    invoke: int
    respond: Optional[int] = None
    tau: Optional[Timestamp] = None
    hops: Optional[int] = None

    @property
    def complete(self) -> bool:
        return self.respond is not None

    def to_line(self) -> str:
        resp = "-" if self.respond is None else str(self.respond)
        val = "-" if self.value is None else str(self.value)
        tau = "-" if self.tau is None else str(self.tau)
        return (
            f"op={self.kind} client={self.client} inv={self.invoke} "
            f"resp={resp} val={val} tau={tau}"
        )


class HistoryParseError(ValueError):
    pass


_HIST_RE = re.compile(
    r"^op=(read|write) client=(\d+) inv=(\d+) resp=(\d+|-) val=(\S+) tau=(\([^)]*\)|-)$"
)


def parse_history(text: str) -> List[HistoryRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _HIST_RE.match(line)
        if m is None:
            raise HistoryParseError(f"line {lineno}: cannot parse {line!r}")
        kind, client, inv, resp, val, tau = m.groups()
        try:
            tau_v = None if tau == "-" else Timestamp.parse(tau)
        except ValueError as exc:
            raise HistoryParseError(f"line {lineno}: {exc}") from None
        rec = HistoryRecord(
            op_id=len(records),
            client=int(client),
            kind=kind,
            value=None if val == "-" else val,
            invoke=int(inv),
            respond=None if resp == "-" else int(resp),
            tau=tau_v,
        )
        if rec.respond is not None and rec.respond <= rec.invoke:
            raise HistoryParseError(f"line {lineno}: response precedes invocation")
        if rec.kind == "write" and rec.value is None:
            raise HistoryParseError(f"line {lineno}: write without a value")
        records.append(rec)
    return records


def format_history(records: List[HistoryRecord]) -> str:
    return "".join(r.to_line() + "\n" for r in records)


class History:
    """Per-operation invocation/response log filled in by clients."""

    def __init__(self, clock):
        self.clock = clock
        self.records: List[HistoryRecord] = []

    def begin(self, client: int, kind: str, value=None) -> HistoryRecord:
        rec = HistoryRecord(
            op_id=len(self.records),
            client=client,
            kind=kind,
            value=value if kind == "write" else None,
            invoke=self.clock.step,
        )
        self.records.append(rec)
        return rec

    def complete(self, rec: HistoryRecord, value, hops: int) -> None:
        rec.respond = self.clock.step
        rec.hops = hops
        if rec.kind == "read":
            rec.value = value

    def incomplete(self) -> List[HistoryRecord]:
        return [r for r in self.records if not r.complete]


@dataclass
class CallRecord:
    """One read_quorum / write_quorum invocation at some process."""

    actor: int
    kind: str
    req: Any
    start: int
    end: Optional[int] = None
    result: Any = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class StatusEvent:
    step: int
    time: int
    pid: int
    what: str  # crash | restart | active
    rollback: Optional[int] = None


class Trace:
    """Structured records (always kept) plus an optional verbose event log."""

    def __init__(self, clock, record_events: bool = True):
        self.clock = clock
        self.record_events = record_events
        self.events: List[tuple] = []
        self.calls: List[CallRecord] = []
        self.status: List[StatusEvent] = []
        self.incarnations: List[tuple] = []  # (step, replica, value)
        self.recovery_reads: List[tuple] = []  # (step, replica) at the State read
        self.recoveries: List[list] = []  # [replica, start_step, end_step|None]
        self.ams_reads: List[dict] = []
        self.ams_writes: List[dict] = []

    def log(self, kind: str, actor, **detail) -> None:
        if self.record_events:
            self.events.append((self.clock.now, kind, actor, self.clock.step, detail))

    def begin_call(self, actor: int, kind: str, req) -> CallRecord:
        rec = CallRecord(actor, kind, req, self.clock.step)
        rec.extra["index"] = len(self.calls)
        self.calls.append(rec)
        self.log("qcall_begin", actor, call=rec.extra["index"], op=kind, req=req)
        return rec

    def end_call(self, rec: CallRecord, result) -> None:
        rec.end = self.clock.step
        rec.result = result
        if rec.kind == "read":
            rec.extra["ts"] = sorted(
                ts for ts in (payload_ts(p) for p in result.values()) if ts is not None
            )
            self.log("qcall_end", rec.actor, call=rec.extra["index"], ts=rec.extra["ts"],
                     quorum=sorted(result))
        else:
            self.log("qcall_end", rec.actor, call=rec.extra["index"], quorum=sorted(result))

    def note_status(self, pid: int, what: str, rollback=None) -> None:
        self.status.append(StatusEvent(self.clock.step, self.clock.now, pid, what, rollback))

    def lines(self) -> List[str]:
        out = []
        for t, kind, actor, step, detail in self.events:
            parts = [f"step={step}"]
            parts.extend(f"{k}={_fmt(v)}" for k, v in detail.items())
            out.append(f"t={t} kind={kind} actor={actor} detail={','.join(parts)}")
        return out

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())


def payload_ts(payload) -> Optional[Timestamp]:
    """Timestamp carried by a READ_ACK payload, if any."""
    if isinstance(payload, Timestamp):
        return payload
    if isinstance(payload, tuple) and payload and isinstance(payload[0], Timestamp):
        return payload[0]
    return None


def _fmt(value) -> str:
    if isinstance(value, (list, tuple)) and not isinstance(value, Timestamp):
        return "[" + " ".join(_fmt(v) for v in value) + "]"
    return str(value).replace(",", ";").replace(" ", "_")


_TRACE_RE = re.compile(r"^t=(\d+) kind=(\w+) actor=(\S+) detail=(.*)$")


def parse_trace_line(line: str) -> dict:
    m = _TRACE_RE.match(line.strip())
    if m is None:
        raise ValueError(f"cannot parse trace line {line!r}")
    t, kind, actor, detail = m.groups()
    fields = {}
    for part in detail.split(","):
        if "=" in part:
            key, val = part.split("=", 1)
            fields[key] = val
    return {"t": int(t), "kind": kind, "actor": actor, "detail": fields}
