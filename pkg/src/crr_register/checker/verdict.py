from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict

from ..core import Timestamp


class CheckerInputError(ValueError):
    """The history or trace does not satisfy a checker's preconditions."""


@dataclass
class Verdict:
    word: str
    ok: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def line(self) -> str:
        parts = ",".join(f"{k}={_flat(v)}" for k, v in self.detail.items())
        return f"verdict={self.word} detail={parts or '-'}"

    def __bool__(self) -> bool:
        return self.ok


def _flat(v) -> str:
    if isinstance(v, (list, tuple)) and not isinstance(v, Timestamp):
        return "[" + " ".join(_flat(x) for x in v) + "]"
    return str(v).replace(",", ";").replace(" ", "_")
