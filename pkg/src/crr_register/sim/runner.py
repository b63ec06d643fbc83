"""Build and run one simulation from a flat configuration."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional

from ..config import UNKNOWN, Params, resolve
from .engine import DEFAULT_STEP_BUDGET, RunResult, Simulator
from .faults import AckCrashNemesis, Workload, eventual_faults, static_faults
from .network import RandomNetwork

FAULT_MODES = ("none", "static", "eventual", "ack-crash")


@dataclass(frozen=True)
class RunConfig:
    protocol: str = "A"
    n: int = 3
    k: int = 1
    r: object = UNKNOWN
    b: object = UNKNOWN
    clients: int = 2
    ops: int = 6
    write_ratio: float = 0.5
    think_max: int = 3
    min_delay: int = 1
    max_delay: int = 3
    drop_prob: float = 0.0
    slow_prob: float = 0.0
    slow_max: int = 0
    outages: int = 0
    outage_max: int = 10
    retransmit_period: int = 1
    horizon: int = 5000
    faults: str = "none"
    fault_window: int = 40
    step_budget: int = DEFAULT_STEP_BUDGET
    seed: int = 0
    record_events: bool = True

    def params(self) -> Params:
        return resolve(Params(self.n, self.k, self.r, self.b))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)


def make_protocol(name: str, params: Params):
    from ..protocols.protocol_a import ProtocolA
    from ..protocols.protocol_d import ProtocolD

    if name == "A":
        return ProtocolA(params)
    if name == "D":
        return ProtocolD(params)
    from ..scenarios.baselines import BASELINES

    if name in BASELINES:
        return BASELINES[name](params)
    raise ValueError(f"unknown protocol {name!r}")


def build(cfg: RunConfig) -> Simulator:
    if cfg.faults not in FAULT_MODES:
        raise ValueError(f"faults must be one of {FAULT_MODES}, got {cfg.faults!r}")
    params = cfg.params()
    protocol = make_protocol(cfg.protocol, params)
    # Independent streams so that changing one knob does not reshuffle the others.
    master = random.Random(cfg.seed)
    net_rng, work_rng, fault_rng = (random.Random(master.getrandbits(64)) for _ in range(3))
    network = RandomNetwork(net_rng, cfg.min_delay, cfg.max_delay, cfg.drop_prob,
                            cfg.horizon, cfg.slow_prob, cfg.slow_max)
    for _ in range(cfg.outages):
        pid = fault_rng.randint(1, params.n)
        start = fault_rng.randint(0, cfg.fault_window)
        network.outages.append((pid, start, start + fault_rng.randint(1, cfg.outage_max)))
    guard = params.k if cfg.faults == "eventual" else None
    sim = Simulator(protocol, params.n, cfg.clients, network, seed=master.getrandbits(64),
                    step_budget=cfg.step_budget, record_events=cfg.record_events,
                    availability_guard=guard,
                    retransmit_period=cfg.retransmit_period)
    if cfg.faults == "static":
        sim.add_faults(static_faults(fault_rng, params.n, params.k, params.r_eff,
                                     params.b_eff, cfg.fault_window))
    elif cfg.faults == "eventual":
        sim.add_faults(eventual_faults(fault_rng, params.n, params.k, cfg.fault_window))
    elif cfg.faults == "ack-crash":
        AckCrashNemesis(fault_rng, params.n, params.k, params.r_eff).install(sim)
    Workload(work_rng, list(sim.client_ids), cfg.ops, cfg.write_ratio, cfg.think_max).start(sim)
    return sim


def run(cfg: RunConfig, sim: Optional[Simulator] = None) -> RunResult:
    sim = sim or build(cfg)
    sim.run()
    return sim.result()
