"""Append-only persistence: one JSON-lines event log per thread plus derived
snapshot files. The log is the source of truth; replaying it must rebuild
the engine state exactly, so every state change flows through an event."""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterator

EVENT_KINDS = (
    "thread-created",
    "space-edited",
    "sprint-created",
    "sprint-primed",
    "sprint-started",
    "trial-started",
    "tick",
    "trial-finished",
    "sprint-finished",
)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


class EventStore:
    """Filesystem layout:

    root/threads/{thread_id}.log     append-only JSON lines
    root/snapshots/sprint-{id}.json  derived, rewritten on sprint finish
    root/snapshots/space-{thread}-v{version}.json
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "threads").mkdir(parents=True, exist_ok=True)
        (self.root / "snapshots").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, thread_id: str, kind: str, payload: dict[str, Any]) -> dict[str, Any]:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = {"kind": kind, "ts": _utc_now(), **payload}
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            path = self.root / "threads" / f"{thread_id}.log"
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return event

    def thread_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "threads").glob("*.log"))

    def events(self, thread_id: str) -> Iterator[dict[str, Any]]:
        path = self.root / "threads" / f"{thread_id}.log"
        if not path.exists():
            return
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def write_snapshot(self, name: str, data: dict[str, Any]) -> Path:
        path = self.root / "snapshots" / f"{name}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(data, sort_keys=True, indent=1), encoding="utf-8")
        tmp.replace(path)
        return path

    def read_snapshot(self, name: str) -> dict[str, Any] | None:
        path = self.root / "snapshots" / f"{name}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))
