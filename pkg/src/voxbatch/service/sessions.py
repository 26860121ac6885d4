"""In-process session registry: one live VecEnv per session id.

A session is confined to one request at a time; concurrent step calls on the
same handle are a contract violation and are rejected, not queued.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from ..vecenv import VecEnv


class SessionBusy(RuntimeError):
    pass


class SessionNotFound(KeyError):
    pass


@dataclass
class Session:
    session_id: str
    env: VecEnv
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionRegistry:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._guard = threading.Lock()

    def create(self, env: VecEnv) -> Session:
        session = Session(session_id=uuid.uuid4().hex, env=env)
        with self._guard:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._guard:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        return session

    def close(self, session_id: str) -> None:
        with self._guard:
            session = self._sessions.pop(session_id, None)
        if session is None:
            raise SessionNotFound(session_id)
        with session.lock:
            session.env.close()

    def close_all(self) -> None:
        with self._guard:
            sessions = list(self._sessions.values())
            self._sessions.clear()
        for session in sessions:
            session.env.close()
