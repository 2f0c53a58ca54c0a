"""Network boundary: REST endpoints plus per-expansion event streams."""

from .app import ApiConfig, create_app
from .examples import example_tasks
from .serve import ServiceHandle, serve

__all__ = ["ApiConfig", "ServiceHandle", "create_app", "example_tasks", "serve"]
