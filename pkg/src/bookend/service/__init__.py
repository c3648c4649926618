"""Interactive session service: HTTP API plus event-log persistence."""

from .app import ApiError, ServiceConfig, create_app
from .store import Attempt, SessionNotFound, SessionState, SessionStore, apply_event, replay

__all__ = [
    "ApiError",
    "Attempt",
    "ServiceConfig",
    "SessionNotFound",
    "SessionState",
    "SessionStore",
    "apply_event",
    "create_app",
    "replay",
]
