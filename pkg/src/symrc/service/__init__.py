"""FastAPI service wrapping the experiment harness."""

from .app import app  # noqa: F401
