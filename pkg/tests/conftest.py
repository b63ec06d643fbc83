import random

import pytest

from crr_register.core import TS0, Timestamp
from crr_register.sim.engine import Simulator
from crr_register.sim.network import Envelope, ScriptNetwork
from crr_register.sim.trace import HistoryRecord

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def report():
    def record(number: int, ok: bool, what: str, detail: str = "") -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {what}"
        if detail:
            line += f"  [{detail}]"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


# -- simulator harness ----------------------------------------------------


def script_sim(protocol, n: int, clients: int = 2, **kw) -> Simulator:
    return Simulator(protocol, n, clients, ScriptNetwork(), **kw)


def poke(sim: Simulator, dst: int, msg, src: int):
    """Deliver ``msg`` from ``src`` straight to ``dst``; return the messages it sent."""
    env = Envelope(0, src, dst, msg, None, 0, sim.step)
    sim.procs[dst].deliver(env)
    return drain(sim)


def drain(sim: Simulator):
    out = [(e.dst, e.msg) for e in sim.network.pool]
    sim.network.pool.clear()
    return out


# -- histories ------------------------------------------------------------


def op(kind, client, inv, resp, val=None, tau=None, op_id=None):
    """Compact HistoryRecord constructor; ``tau`` may be a (cnt, pid) tuple."""
    if isinstance(tau, tuple) and not isinstance(tau, Timestamp):
        tau = Timestamp(*tau)
    return HistoryRecord(op_id if op_id is not None else -1, client, kind, val, inv, resp, tau)


def history(*ops):
    for i, o in enumerate(ops):
        o.op_id = i
    return list(ops)


def random_history(rng: random.Random, max_ops: int = 8, clients: int = 3):
    """A linearizable register history with protocol-style tau values.

    Each op gets an interval and a linearization point inside it; values and
    tau follow from processing the points in order. Some ops are left
    incomplete: an incomplete write may or may not take effect.
    """
    m = rng.randint(1, max_ops)
    ops = []
    wcount = 0
    for _ in range(m):
        client = rng.randint(1, clients)
        inv = rng.randint(0, 40)
        resp = inv + rng.randint(1, 15)
        kind = "write" if rng.random() < 0.5 else "read"
        complete = rng.random() > 0.15
        point = rng.uniform(inv, resp)
        effect = complete or (kind == "write" and rng.random() < 0.5)
        ops.append([kind, client, inv, resp if complete else None, point, effect])
    # Distinct points; process in order.
    order = sorted(range(m), key=lambda i: ops[i][4])
    cur_val, cur_tau, cnt = "v0", TS0, 0
    recs = [None] * m
    for i in order:
        kind, client, inv, resp, point, effect = ops[i]
        if kind == "write":
            wcount += 1
            val = f"x{wcount}"
            cnt += 1
            tau = Timestamp(cnt, client)
            if effect:
                cur_val, cur_tau = val, tau
            elif resp is None and rng.random() < 0.5:
                tau = None  # never chose a timestamp
            recs[i] = op("write", client, inv, resp, val, tau)
        else:
            if resp is None:
                recs[i] = op("read", client, inv, None, None, None)
            else:
                recs[i] = op("read", client, inv, resp, cur_val, cur_tau)
    return history(*recs)


def mutate(rng: random.Random, hist):
    """Adversarial edits that keep write values unique and finite taus distinct."""
    hist = [op(o.kind, o.client, o.invoke, o.respond, o.value, o.tau) for o in hist]
    writes = [o for o in hist if o.kind == "write"]
    reads = [o for o in hist if o.kind == "read" and o.complete]
    for _ in range(rng.randint(1, 3)):
        choice = rng.random()
        if choice < 0.35 and reads:
            r = rng.choice(reads)
            src = rng.choice(writes + [None]) if writes else None
            r.value = "v0" if src is None else src.value
            if rng.random() < 0.7:
                r.tau = TS0 if src is None else src.tau
        elif choice < 0.6:
            o = rng.choice(hist)
            shift = rng.randint(-10, 10)
            o.invoke = max(0, o.invoke + shift)
            if o.respond is not None:
                o.respond = max(o.invoke + 1, o.respond + shift)
        elif choice < 0.8 and len(writes) >= 2:
            a, b = rng.sample(writes, 2)
            a.tau, b.tau = b.tau, a.tau
        elif reads:
            r = rng.choice(reads)
            r.tau = Timestamp(rng.randint(0, 9), rng.randint(1, 3))
    for w in writes:
        if w.complete and w.tau is None:
            w.tau = Timestamp(100 + w.client, w.client)
    return history(*hist)
