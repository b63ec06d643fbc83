"""Threshold arithmetic: effective thresholds, predicate P, quorum sizes, storage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Union

UNKNOWN = "unknown"

Threshold = Union[int, str, None]


class ConfigError(ValueError):
    """Invalid replica/threshold configuration."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Params:
    n: int
    k: int
    r: Threshold = UNKNOWN
    b: Threshold = UNKNOWN
    r_eff: Optional[int] = None
    b_eff: Optional[int] = None

    @property
    def resolved(self) -> bool:
        return self.r_eff is not None and self.b_eff is not None


@dataclass(frozen=True)
class QuorumPlan:
    q_w: int
    q_r: int
    p_holds: bool
    nonvolatile: FrozenSet[int] = field(default_factory=frozenset)
    below_bound: bool = False


def _is_unknown(x: Threshold) -> bool:
    return x is None or (isinstance(x, str) and x.lower() == UNKNOWN)


def _check_int(name: str, x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(name, f"expected an integer, got {x!r}")
    if x < 0:
        raise ConfigError(name, f"must be non-negative, got {x}")
    return x


def resolve(params: Params) -> Params:
    """Substitute r := k and b := n for unknown thresholds and validate."""
    n = _check_int("n", params.n)
    k = _check_int("k", params.k)
    if n < 1:
        raise ConfigError("n", "at least one replica is required")
    if _is_unknown(params.r):
        r = k
    else:
        r = _check_int("r", params.r)
        if r > k:
            raise ConfigError("r", f"r={r} exceeds k={k}")
    if _is_unknown(params.b):
        b = n
    else:
        b = _check_int("b", params.b)
        if b > n:
            raise ConfigError("b", f"b={b} exceeds n={n}")
    return Params(
        n=n,
        k=k,
        r=UNKNOWN if _is_unknown(params.r) else r,
        b=UNKNOWN if _is_unknown(params.b) else b,
        r_eff=r,
        b_eff=b,
    )


def predicate_p(n: int, k: int, r: int, b: int) -> bool:
    return 2 * k + r + 1 <= n < 2 * k + b + 1


def resilience_bound(k: int, r: int, b: int) -> int:
    """Smallest n admitting a k-tolerant wait-free atomic register."""
    return 2 * k + min(b, r) + 1


def quorum_plan(params: Params) -> QuorumPlan:
    if not params.resolved:
        params = resolve(params)
    n, k, r, b = params.n, params.k, params.r_eff, params.b_eff
    below = n < resilience_bound(k, r, b)
    if predicate_p(n, k, r, b):
        return QuorumPlan(
            q_w=n - k,
            q_r=n - k,
            p_holds=True,
            nonvolatile=frozenset(range(1, 2 * k + r + 2)),
            below_bound=below,
        )
    return QuorumPlan(q_w=n - k, q_r=k + 1, p_holds=False, below_bound=below)
