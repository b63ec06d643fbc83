"""Failure-atomic persistent storage with a full version history."""

from __future__ import annotations

from typing import Any, List, Optional


class RollbackError(ValueError):
    pass


class PersistentStore:
    """Append-only snapshot log of one replica's persisted state.

    Index 0 holds the initial state. ``current`` is the version a restart
    without rollback restores; a rollback restores any strictly older index.
    """

    def __init__(self, initial: Any):
        self.versions: List[Any] = [initial]
        self.current = 0

    def commit(self, snapshot: Any) -> None:
        if snapshot != self.versions[self.current]:
            self.versions.append(snapshot)
            self.current = len(self.versions) - 1

    def latest(self) -> Any:
        return self.versions[self.current]

    def restore(self, rollback: Optional[int] = None) -> Any:
        if rollback is None:
            return self.versions[self.current]
        if not 0 <= rollback < self.current:
            raise RollbackError(
                f"rollback target {rollback} is not older than version {self.current}"
            )
        self.current = rollback
        return self.versions[rollback]

    def older_versions(self) -> range:
        return range(self.current)
