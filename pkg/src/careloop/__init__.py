"""Event-driven clinical agent workflow engine with human-in-the-loop governance."""

__version__ = "0.1.0"

from .application import Application  # noqa: E402
from .infra.config import AppConfig, load_config  # noqa: E402

__all__ = ["Application", "AppConfig", "load_config", "__version__"]
