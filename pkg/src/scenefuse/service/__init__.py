from .app import create_app
from .jobs import JobQueue, JobTicket
from .sessions import IllegalTransition, SessionState, SessionStore

__all__ = [
    "IllegalTransition",
    "JobQueue",
    "JobTicket",
    "SessionState",
    "SessionStore",
    "create_app",
]
