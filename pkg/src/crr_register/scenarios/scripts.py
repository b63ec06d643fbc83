"""Packaged scripted executions: known counterexamples and liveness-loss demos."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from ..checker.blackbox import check_atomicity_blackbox
from ..checker.monitors import (
    check_incarnation_monotonicity, check_liveness, check_real_time_property,
)
from ..checker.verdict import Verdict
from ..checker.whitebox import check_atomicity_whitebox
from ..config import Params
from ..protocols.protocol_a import ProtocolA
from ..protocols.protocol_d import ProtocolD
from ..sim.engine import DEFAULT_STEP_BUDGET, RunResult, Simulator
from ..sim.network import Match, ScriptNetwork
from ..sim.script import (
    Block, Crash, Deliver, Drop, Invoke, Restart, RunUntil, ScriptRunner, Unblock,
)
from .baselines import (
    AMSParams, AMSProtocol, NaiveRecoveryProtocol, RRParams, RRProtocol, check_ams_property,
)


@dataclass
class ScenarioResult:
    name: str
    result: RunResult
    verdicts: Dict[str, Verdict]
    flagged: bool  # a safety violation was detected
    notes: List[str] = field(default_factory=list)

    def summary(self) -> str:
        words = " ".join(f"{k}={v.word}" for k, v in self.verdicts.items())
        return f"scenario={self.name} flagged={self.flagged} {words}"


def _sim(protocol, n: int, clients: int, step_budget: int) -> Simulator:
    return Simulator(protocol, n, clients, ScriptNetwork(), seed=0, step_budget=step_budget)


def _register_verdicts(result: RunResult, protocol: str = "A") -> Dict[str, Verdict]:
    out = {
        "blackbox": check_atomicity_blackbox(result.history),
        "whitebox": check_atomicity_whitebox(result.history),
        "real_time": check_real_time_property(result.trace.calls),
        "liveness": check_liveness(result),
    }
    if protocol == "D":
        out["incarnations"] = check_incarnation_monotonicity(result.trace.incarnations)
    return out


def _finish(name: str, sim: Simulator, protocol: str = "A", notes=()) -> ScenarioResult:
    result = sim.result()
    verdicts = _register_verdicts(result, protocol)
    return ScenarioResult(name, result, verdicts, not verdicts["blackbox"].ok, list(notes))


def _idle(pid: int) -> Callable:
    return lambda sim: sim.procs[pid].idle


def _active(pid: int) -> Callable:
    return lambda sim: pid in sim.active


# -- ack, crash, lose the write, recover early -------------------------------

WRITER, READER = 4, 5


def ack_crash_race_steps(value: str = "v") -> list:
    """p3 acks the write, crashes and recovers before p2 sees it; p1 never does."""
    return [
        Block(Match("WRITE", WRITER, 1)),
        Invoke(WRITER, "write", value),
        Deliver(Match("READ", WRITER)),
        Deliver(Match("READ_ACK", dst=WRITER)),
        Deliver(Match("WRITE", WRITER, 3)),
        Deliver(Match("WRITE_ACK", 3, WRITER)),
        Block(Match("WRITE", WRITER, 2)),
        Crash(3),
        Restart(3, rollback=0),
        RunUntil(_active(3), "p3 active"),
        Unblock(Match("WRITE", WRITER, 2)),
        RunUntil(_idle(WRITER), "write done"),
        Block(Match(src=READER, dst=2)),
        Invoke(READER, "read"),
        RunUntil(_idle(READER), "read done"),
        Unblock(),
        RunUntil(lambda sim: sim.quiescent(), "quiescent"),
    ]


def ack_crash_race_params() -> Params:
    return Params(n=3, k=1, r=1, b=0)


def naive_recovery_race(step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    sim = _sim(NaiveRecoveryProtocol(ack_crash_race_params()), 3, 2, step_budget)
    ScriptRunner(sim).run(ack_crash_race_steps())
    return _finish("naive-recovery", sim)


def d_ack_crash_race(step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    sim = _sim(ProtocolD(ack_crash_race_params()), 3, 2, step_budget)
    ScriptRunner(sim).run(ack_crash_race_steps())
    res = _finish("d-ack-crash-race", sim, "D")
    rounds = [c.extra.get("rounds") for c in res.result.trace.calls
              if c.actor == WRITER and c.kind == "write"]
    res.notes.append(f"writer write_quorum rounds={rounds}")
    return res


# -- RR model: rollback after ack, recovery from unaware replicas -----------


def rr_baseline_script(step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    rr = RRParams(m_r=2, f=2)
    writer, reader = rr.n + 1, rr.n + 2
    sim = _sim(RRProtocol(rr), rr.n, 2, step_budget)
    steps = [
        Invoke(writer, "write", "v1"),
        *[Deliver(Match("READ", writer, j)) for j in (1, 2, 3)],
        Deliver(Match("READ_ACK", dst=writer)),
        Drop(Match("READ", writer)),
        Deliver(Match("WRITE", writer, 2)),
        Deliver(Match("WRITE_ACK", 2, writer)),
        Crash(2),
        Restart(2, rollback=0),
        *[Deliver(Match("READ", 2, j)) for j in (3, 4, 5)],
        Deliver(Match("READ_ACK", dst=2)),
        Drop(Match("READ", 2)),
        *[Deliver(Match("WRITE", writer, j)) for j in (1, 3)],
        Deliver(Match("WRITE_ACK", dst=writer)),
        Drop(Match("WRITE", writer)),
        Invoke(reader, "read"),
        *[Deliver(Match("READ", reader, j)) for j in (2, 4, 5)],
        Deliver(Match("READ_ACK", dst=reader)),
        Drop(Match()),
    ]
    ScriptRunner(sim).run(steps)
    return _finish("rr-baseline", sim, notes=[f"N={rr.n} W={rr.w} R(s=0)={rr.r(0)}"])


# -- AMS: a late write resurrects an amnesic replica with an old pair -------


def ams_baseline_script(step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    ams = AMSParams(a=1, b=2)
    n = ams.n
    writer, reader = n + 1, n + 2
    first_q = list(range(1, ams.a + 2 * ams.b + 1)) + [2 * ams.a + 2 * ams.b + 2]
    late = 2 * ams.a + 2 * ams.b + 3
    second_q = list(range(1, ams.a + 2 * ams.b + 1)) + [late]
    read_q = list(range(ams.a + 2 * ams.b + 1, 2 * ams.a + 3 * ams.b + 2))
    sim = _sim(AMSProtocol(ams), n, 2, step_budget)
    runner = ScriptRunner(sim)
    runner.run([
        Block(Match("WRITE", writer, late)),
        Invoke(writer, "write", ("1", 1)),
        *[Deliver(Match("WRITE", writer, j)) for j in first_q],
        Deliver(Match("WRITE_ACK", dst=writer)),
    ])
    held = sim.network.take(Match("WRITE", writer, late))
    runner.run([
        Drop(Match("WRITE", writer)),
        Unblock(),
        Invoke(writer, "write", ("2", 2)),
        *[Deliver(Match("WRITE", writer, j)) for j in second_q],
        Deliver(Match("WRITE_ACK", dst=writer)),
        Drop(Match("WRITE", writer)),
        Crash(late),
        Restart(late),
    ])
    sim.network.pool.extend(held)
    runner.run([
        Deliver(Match("WRITE", writer, late)),
        Drop(Match("WRITE_ACK")),
        Invoke(reader, "read"),
        *[Deliver(Match("READ", reader, j)) for j in read_q],
        Deliver(Match("READ_ACK", dst=reader)),
        Drop(Match()),
    ])
    result = sim.result()
    verdict = check_ams_property(result.trace)
    notes = [f"n={n} |Q_W|={ams.q_w} |Q_R|={ams.q_r} stable={sorted(ams.stable)}"]
    return ScenarioResult("ams-baseline", result, {"ams_property": verdict,
                                                   "liveness": check_liveness(result)},
                          not verdict.ok, notes)


def ams_fault_free(step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    ams = AMSParams(a=1, b=2)
    writer, reader = ams.n + 1, ams.n + 2
    sim = _sim(AMSProtocol(ams), ams.n, 2, step_budget)
    runner = ScriptRunner(sim)
    runner.run([
        Invoke(writer, "write", ("1", 1)),
        RunUntil(_idle_ams(writer)),
        Invoke(writer, "write", ("2", 2)),
        RunUntil(_idle_ams(writer)),
        Invoke(reader, "read"),
        RunUntil(_idle_ams(reader)),
    ])
    result = sim.result()
    verdict = check_ams_property(result.trace)
    return ScenarioResult("ams-fault-free", result, {"ams_property": verdict}, not verdict.ok)


def _idle_ams(pid: int) -> Callable:
    return lambda sim: sim.procs[pid].current is None


# -- below the resilience bound: the read loses its quorum ------------------


def below_bound_demo(n: int = 3, k: int = 1, r: int = 1, b: int = 1,
                     step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    """Write misses p1; then p3 restarts (stale, possibly rolled back) and p2 goes silent."""
    params = Params(n=n, k=k, r=r, b=b)
    writer, reader = n + 1, n + 2
    sim = _sim(ProtocolA(params), n, 2, step_budget)
    ScriptRunner(sim).run([
        Block(Match(src=writer, dst=1)),
        Invoke(writer, "write", "v"),
        RunUntil(_idle(writer), "write done"),
        Unblock(),
        Drop(Match(src=writer)),
        Crash(3),
        Restart(3, rollback=0),
        Block(Match(src=reader, dst=2)),
        Invoke(reader, "read"),
        RunUntil(_idle(reader), "read done"),
    ])
    return _finish(f"below-bound-n{n}", sim, notes=[f"plan={sim.protocol.plan}"])


def d_all_rolled_back(step_budget: int = DEFAULT_STEP_BUDGET) -> ScenarioResult:
    """Every replica restarts rolled back to its initial state at once: recovery cannot finish."""
    sim = _sim(ProtocolD(Params(n=3, k=1, b=0)), 3, 2, step_budget)
    ScriptRunner(sim).run([
        Invoke(WRITER, "write", "v"),
        RunUntil(_idle(WRITER), "write done"),
        *[Crash(p) for p in (1, 2, 3)],
        *[Restart(p, rollback=0) for p in (1, 2, 3)],
        Invoke(READER, "read"),
        RunUntil(lambda sim: not sim.recovering, "recovered"),
    ])
    return _finish("d-all-rolled-back", sim, "D")


SCENARIOS: Dict[str, Callable[..., ScenarioResult]] = {
    "naive-recovery": naive_recovery_race,
    "d-ack-crash-race": d_ack_crash_race,
    "rr-baseline": rr_baseline_script,
    "ams-baseline": ams_baseline_script,
    "ams-fault-free": ams_fault_free,
    "below-bound": below_bound_demo,
    "below-bound-plus-one": lambda step_budget=DEFAULT_STEP_BUDGET: below_bound_demo(
        n=4, step_budget=step_budget),
    "d-all-rolled-back": d_all_rolled_back,
}
