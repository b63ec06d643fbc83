from crr_register.config import Params
from crr_register.core import (
    CV, TS0, V0, PreCV, Read, ReadAck, RequestId, State, Timestamp, TSVal, Write, WriteAck,
)
from crr_register.protocols.protocol_d import ProtocolD, merge_into
from crr_register.scenarios.scripts import d_ack_crash_race, d_all_rolled_back
from crr_register.sim.script import Crash, Restart, RunUntil, ScriptRunner

from conftest import drain, poke, script_sim

RID = RequestId(9, 0)
T14 = Timestamp(1, 4)


def d(n=3, k=1, b=0):
    return ProtocolD(Params(n, k, "unknown", b))


def test_initial_state():
    sim = script_sim(d(), 3)
    rep = sim.procs[1]
    assert (rep.ts, rep.val, rep.cv, rep.pre_cv, rep.stale) == (TS0, V0, [0, 0, 0], [0, 0, 0], False)
    assert rep.persistent


def test_plan_sizes():
    plan = d(6, 2, 1).plan
    assert (plan.q_w, plan.q_r) == (4, 3)
    assert d(3, 1, 1).plan.below_bound and not d(4, 1, 1).plan.below_bound


def test_state_read_raises_sender_incarnation():
    sim = script_sim(d(), 3)
    rep = sim.procs[1]
    rep.cv = [0, 0, 1]
    out = poke(sim, 1, Read(RID, State(5)), 3)
    assert rep.cv == [0, 0, 5]
    assert out == [(3, ReadAck(RID, (TS0, V0, (0, 0, 5), (0, 0, 0)), 1))]


def test_stale_replica_silent_to_reads_and_value_writes():
    sim = script_sim(d(), 3)
    sim.procs[1].stale = True
    assert poke(sim, 1, Read(RID, TSVal()), 4) == []
    assert poke(sim, 1, Write(RID, TSVal(T14, "v"), 0), 4) == []
    assert sim.procs[1].ts == TS0


def test_cv_read_echoes_vector():
    sim = script_sim(d(), 3)
    sim.procs[1].cv = [0, 3, 1]
    assert poke(sim, 1, Read(RID, CV()), 2) == [(2, ReadAck(RID, (0, 3, 1), 1))]


def test_value_write_ack_piggybacks_cv():
    sim = script_sim(d(), 3)
    out = poke(sim, 1, Write(RID, TSVal(T14, "v"), 0), 4)
    assert (sim.procs[1].ts, sim.procs[1].val) == (T14, "v")
    assert out == [(4, WriteAck(RID, 0, (0, 0, 0), 1))]


def test_value_write_older_still_acked_with_current_cv():
    sim = script_sim(d(), 3)
    sim.procs[1].cv = [2, 1, 0]
    poke(sim, 1, Write(RID, TSVal(Timestamp(3, 5), "w"), 0), 4)
    out = poke(sim, 1, Write(RID, TSVal(T14, "v"), 0), 4)
    assert sim.procs[1].val == "w"
    assert out == [(4, WriteAck(RID, 2, (2, 1, 0), 1))]


def test_precv_write_while_stale():
    sim = script_sim(d(), 3)
    rep = sim.procs[1]
    rep.stale = True
    out = poke(sim, 1, Write(RID, PreCV(2, 5), 3), 2)
    assert rep.cv[0] == 3 and rep.pre_cv[1] == 5
    assert out == [(2, WriteAck(RID, 3, None, 1))]


def test_cv_write_max_merges():
    sim = script_sim(d(), 3)
    rep = sim.procs[1]
    rep.cv = [4, 0, 2]
    out = poke(sim, 1, Write(RID, CV(3, 7), 0), 3)
    assert rep.cv == [4, 0, 7]
    assert out == [(3, WriteAck(RID, 4, None, 1))]
    again = poke(sim, 1, Write(RID, CV(3, 7), 0), 3)
    assert again == out and rep.cv == [4, 0, 7]


def test_merge_into():
    cv = [1, 0, 0]
    merge_into(cv, (0, 2, 0))
    assert cv == [1, 2, 0]


def _recover_with_precv(values):
    """Restart p1 at n=5, k=2 and answer its preCV read with ``values``."""
    sim = script_sim(d(5, 2, 0), 5)
    sim.crash(1)
    sim.restart(1)
    assert sim.procs[1].stale
    sent = drain(sim)
    rid = sent[0][1].id
    assert all(isinstance(m, Read) and m.req == PreCV(1) for _, m in sent)
    out = []
    for j, v in zip((2, 3, 4), values):
        out += poke(sim, 1, ReadAck(rid, v, j), j)
    return {m.req for _, m in out}


def test_first_recovery_picks_incarnation_one():
    assert _recover_with_precv([0, 0, 0]) == {PreCV(1, 1)}


def test_recovery_picks_max_plus_one():
    assert _recover_with_precv([2, 4, 1]) == {PreCV(1, 5)}


def test_write_quorum_filters_outdated_acks():
    sim = script_sim(d(), 3)
    client = sim.procs[4]
    gen = client.write_quorum(TSVal(T14, "v"))
    call = next(gen)
    acks = [WriteAck(call.id, 2, (2, 2, 2), 1), WriteAck(call.id, 1, (2, 2, 2), 2),
            WriteAck(call.id, 3, (2, 2, 2), 3)]
    for a in acks:
        call.accept(a)
    try:
        gen.send(call.result())
    except StopIteration as stop:
        result = stop.value
    else:  # pragma: no cover
        raise AssertionError("write quorum should have completed")
    assert set(result) == {1, 3}
    assert client.cv == [2, 2, 2]


def test_write_quorum_retries_when_filter_leaves_too_few():
    sim = script_sim(d(), 3)
    client = sim.procs[4]
    gen = client.write_quorum(TSVal(T14, "v"))
    call = next(gen)
    call.accept(WriteAck(call.id, 0, (0, 0, 0), 3))
    call.accept(WriteAck(call.id, 0, (0, 0, 1), 2))
    nxt = gen.send(call.result())
    # p3's ack is outdated; only p2 stays validated, so p1 and p3 get the write again.
    assert nxt.pending_targets(range(1, 4)) == [1, 3]
    assert nxt.message_for(3).inc == 1


def test_replayed_race_discards_outdated_ack():
    res = d_ack_crash_race()
    assert not res.flagged
    w, r = res.result.history
    assert r.value == "v"
    assert res.verdicts["blackbox"].word == "linearizable"
    writer_call = next(c for c in res.result.trace.calls
                       if c.actor == 4 and c.kind == "write")
    assert writer_call.extra["rounds"] == 2
    assert w.hops > 4
    assert any(line for line in res.result.trace.lines() if "kind=discard" in line)


def test_successive_recoveries_increase_incarnation():
    sim = script_sim(d(), 3)
    ScriptRunner(sim).run([
        Crash(1), Restart(1), RunUntil(lambda s: 1 in s.active),
        Crash(1), Restart(1), RunUntil(lambda s: 1 in s.active),
    ])
    incs = [v for _, pid, v in sim.trace.incarnations if pid == 1]
    assert incs == [1, 2]


def test_all_rolled_back_stalls_safely():
    res = d_all_rolled_back()
    assert res.result.stalled and res.result.pending_recoveries
    assert res.verdicts["blackbox"].ok
