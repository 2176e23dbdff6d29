"""Asynchronous job tickets over a bounded worker pool.

Tickets are persisted to disk so polls stay answerable after a restart;
terminal states are immutable.
"""

from __future__ import annotations

import json
import threading
import traceback
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

TERMINAL = ("succeeded", "failed")


@dataclass
class JobTicket:
    id: str
    session_id: str
    stage: str
    status: str = "queued"  # queued | running | succeeded | failed
    progress: float = 0.0
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


class JobQueue:
    def __init__(self, root: str | Path, workers: int = 1):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._pool = ThreadPoolExecutor(max_workers=workers)
        self._guard = threading.Lock()
        self._tickets: dict[str, JobTicket] = {}

    def _persist(self, ticket: JobTicket) -> None:
        (self.root / f"{ticket.id}.json").write_text(json.dumps(ticket.to_dict()))

    def submit(self, session_id: str, stage: str, fn) -> JobTicket:
        ticket = JobTicket(id=uuid.uuid4().hex[:12], session_id=session_id, stage=stage)
        with self._guard:
            self._tickets[ticket.id] = ticket
            self._persist(ticket)

        def run():
            self._set(ticket.id, status="running", progress=0.0)
            try:
                fn(lambda p: self._set(ticket.id, progress=float(p)))
                self._set(ticket.id, status="succeeded", progress=1.0)
            except Exception as exc:
                detail = f"{exc}\n{traceback.format_exc(limit=3)}"
                self._set(ticket.id, status="failed", error=detail)

        self._pool.submit(run)
        return ticket

    def _set(self, ticket_id: str, **updates) -> None:
        with self._guard:
            ticket = self._tickets[ticket_id]
            if ticket.status in TERMINAL:
                return
            for k, v in updates.items():
                setattr(ticket, k, v)
            self._persist(ticket)

    def get(self, ticket_id: str) -> JobTicket:
        with self._guard:
            if ticket_id in self._tickets:
                return self._tickets[ticket_id]
        path = self.root / f"{ticket_id}.json"
        if path.exists():
            data = json.loads(path.read_text())
            ticket = JobTicket(**data)
            with self._guard:
                self._tickets.setdefault(ticket_id, ticket)
            return ticket
        raise KeyError(ticket_id)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
