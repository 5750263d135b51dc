"""Append-only session event log with a tamper-evident hash chain.

Persisted as JSON Lines: a header line (engine version + frozen config)
followed by one event per line. Timestamps are logical (the event index)
so identical runs produce byte-identical logs; wall-clock times belong in
session manifests, not here. Each line carries a chain hash over the
header and every prior event, which lets replay name the exact event a
tampered byte lands on.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

KINDS = (
    "Init",
    "Clicked",
    "Propagated",
    "Assessed",
    "Refined",
    "ReAnchored",
    "Corrected",
    "Paused",
    "Resumed",
    "Finished",
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class SessionEvent:
    index: int
    timestamp: float
    kind: str
    frame: int
    payload: dict
    chain: str

    def body(self) -> dict:
        return {
            "index": self.index,
            "timestamp": self.timestamp,
            "kind": self.kind,
            "frame": self.frame,
            "payload": self.payload,
        }

    def to_line(self) -> str:
        d = self.body()
        d["chain"] = self.chain
        return canonical_json(d)


def _chain_hash(prev: str, body: dict) -> str:
    h = hashlib.sha256()
    h.update(prev.encode())
    h.update(canonical_json(body).encode())
    return h.hexdigest()


class EventLog:
    """Single-writer append-only log; concurrent readers see a consistent prefix."""

    def __init__(self, header: dict, observer: Callable[[SessionEvent], None] | None = None):
        self.header = dict(header)
        self.events: list[SessionEvent] = []
        self._chain = _chain_hash("", self.header)
        self._observer = observer

    def append(self, kind: str, frame: int, payload: dict) -> SessionEvent:
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        index = len(self.events)
        body = {
            "index": index,
            "timestamp": float(index),
            "kind": kind,
            "frame": frame,
            "payload": payload,
        }
        self._chain = _chain_hash(self._chain, body)
        event = SessionEvent(
            index=index,
            timestamp=float(index),
            kind=kind,
            frame=frame,
            payload=payload,
            chain=self._chain,
        )
        self.events.append(event)
        if self._observer is not None:
            self._observer(event)
        return event

    def to_lines(self) -> list[str]:
        return [canonical_json(self.header)] + [e.to_line() for e in self.events]

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def write(self, path: Path | str) -> None:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(self.dumps())


def read_log(path: Path | str) -> tuple[dict, list[SessionEvent]]:
    return parse_log(Path(path).read_text())


def parse_log(text: str) -> tuple[dict, list[SessionEvent]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty event log")
    header = json.loads(lines[0])
    events = []
    for ln in lines[1:]:
        d = json.loads(ln)
        events.append(
            SessionEvent(
                index=d["index"],
                timestamp=d["timestamp"],
                kind=d["kind"],
                frame=d["frame"],
                payload=d["payload"],
                chain=d["chain"],
            )
        )
    return header, events


def verify_chain(header: dict, events: Iterable[SessionEvent]) -> int | None:
    """Return the index of the first chain-inconsistent event, or None."""
    chain = _chain_hash("", header)
    for i, e in enumerate(events):
        if e.index != i:
            return i
        chain = _chain_hash(chain, e.body())
        if e.chain != chain:
            return i
    return None


def audit_one_pass(events: Iterable[SessionEvent], n_frames: int) -> list[str]:
    """Check the one-pass contract; returns a list of violations (empty = clean)."""
    problems: list[str] = []
    propagated: dict[int, int] = {}
    last_assessed_fail: dict[int, set[int]] = {}
    for e in events:
        if e.kind == "Propagated":
            propagated[e.frame] = propagated.get(e.frame, 0) + 1
        elif e.kind == "Assessed":
            if not e.payload.get("pass", True):
                last_assessed_fail.setdefault(e.frame, set()).add(e.payload["object_id"])
        elif e.kind == "Refined":
            if e.payload["object_id"] not in last_assessed_fail.get(e.frame, set()):
                problems.append(
                    f"Refined event at frame {e.frame} without a failing assessment "
                    f"for object {e.payload['object_id']}"
                )
    for frame in range(1, n_frames):
        count = propagated.get(frame, 0)
        if count != 1:
            problems.append(f"frame {frame} propagated {count} times (expected 1)")
    extra = sorted(set(propagated) - set(range(1, n_frames)))
    if extra:
        problems.append(f"propagation outside the frame range: {extra}")
    return problems
