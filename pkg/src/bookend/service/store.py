"""Session state and its append-only event-log persistence.

Each session is one JSON-lines file of events under the data directory.
State is always the fold of those events, so replaying a log rebuilds the
exact session and a restart loses nothing.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path


class SessionNotFound(KeyError):
    pass


@dataclass
class Attempt:
    index: int
    phrase_list: list[str]
    phrase_list_source: str
    warnings: list[str] = field(default_factory=list)
    intermediates: dict | None = None
    stop: str | None = None
    sentences: list[str] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    final_story: list[str] | None = None
    scores: dict | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "phrase_list": list(self.phrase_list),
            "phrase_list_source": self.phrase_list_source,
            "warnings": list(self.warnings),
            "intermediates": self.intermediates,
            "stop": self.stop,
            "sentences": list(self.sentences),
            "trace": list(self.trace),
            "final_story": list(self.final_story) if self.final_story is not None else None,
            "scores": self.scores,
        }


@dataclass
class SessionState:
    id: str
    start: str
    scheme: str
    config: dict
    created_at: float
    updated_at: float
    attempts: list[Attempt] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "start": self.start,
            "scheme": self.scheme,
            "config": self.config,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "attempts": [a.to_dict() for a in self.attempts],
        }

    def attempt(self, index: int) -> Attempt:
        if not 0 <= index < len(self.attempts):
            raise IndexError(f"attempt {index} does not exist (have {len(self.attempts)})")
        return self.attempts[index]


def apply_event(state: SessionState | None, event: dict) -> SessionState:
    """Fold one event into session state. Pure except for mutating `state`."""
    kind = event["event"]
    if kind == "created":
        return SessionState(
            id=event["id"],
            start=event["start"],
            scheme=event["scheme"],
            config=event["config"],
            created_at=event["ts"],
            updated_at=event["ts"],
        )
    if state is None:
        raise ValueError(f"event log starts with {kind!r}, not 'created'")
    state.updated_at = event["ts"]
    if kind == "attempt_added":
        state.attempts.append(
            Attempt(
                index=len(state.attempts),
                phrase_list=list(event["phrase_list"]),
                phrase_list_source=event["source"],
                warnings=list(event.get("warnings", [])),
            )
        )
    elif kind == "stop_set":
        attempt = state.attempt(event["attempt"])
        attempt.stop = event["stop"]
        attempt.sentences = list(event["sentences"])
        attempt.intermediates = event.get("intermediates")
    elif kind == "infill_step":
        attempt = state.attempt(event["attempt"])
        attempt.trace.append(event["step"])
        attempt.sentences = list(event["sentences"])
    elif kind == "completed":
        attempt = state.attempt(event["attempt"])
        attempt.final_story = list(event["final_story"])
        attempt.sentences = list(event["final_story"])
    elif kind == "scored":
        state.attempt(event["attempt"]).scores = event["scores"]
    else:
        raise ValueError(f"unknown event kind: {kind!r}")
    return state


def replay(events: list[dict]) -> SessionState:
    state: SessionState | None = None
    for event in events:
        state = apply_event(state, event)
    if state is None:
        raise ValueError("empty event log")
    return state


class SessionStore:
    """In-memory index over per-session event logs, with per-session locks.

    The store lock only guards the index; callers hold a session's own lock
    across read-modify-write cycles so backend calls never block the store.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._index_lock = threading.Lock()
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._load_existing()

    def _log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def _load_existing(self) -> None:
        for path in sorted(self.data_dir.glob("*.jsonl")):
            events = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
            if not events:
                continue
            state = replay(events)
            self._sessions[state.id] = state
            self._locks[state.id] = threading.Lock()

    def new_id(self) -> str:
        return uuid.uuid4().hex[:12]

    def create(self, start: str, scheme: str, config: dict) -> SessionState:
        event = {
            "event": "created",
            "id": self.new_id(),
            "start": start,
            "scheme": scheme,
            "config": config,
            "ts": time.time(),
        }
        state = apply_event(None, event)
        with self._index_lock:
            self._sessions[state.id] = state
            self._locks[state.id] = threading.Lock()
        self._append_line(state.id, event)
        return state

    def _append_line(self, session_id: str, event: dict) -> None:
        with self._log_path(session_id).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def append(self, session_id: str, event: dict) -> SessionState:
        """Fold an event into a session (caller holds the session lock)."""
        state = self.get(session_id)
        event = {**event, "ts": time.time()}
        apply_event(state, event)
        self._append_line(session_id, event)
        return state

    def get(self, session_id: str) -> SessionState:
        with self._index_lock:
            state = self._sessions.get(session_id)
        if state is None:
            raise SessionNotFound(session_id)
        return state

    def lock(self, session_id: str) -> threading.Lock:
        with self._index_lock:
            lock = self._locks.get(session_id)
        if lock is None:
            raise SessionNotFound(session_id)
        return lock

    def list_sessions(self) -> list[SessionState]:
        with self._index_lock:
            return sorted(self._sessions.values(), key=lambda s: s.created_at)

    def events(self, session_id: str) -> list[dict]:
        path = self._log_path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
