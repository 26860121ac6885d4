"""HTTP service layer: FastAPI app, pydantic schemas, session registry."""

from .app import app, create_app
from .sessions import SessionRegistry

__all__ = ["app", "create_app", "SessionRegistry"]
