"""Reference hard-label oracle server; wire protocol in ../PROTOCOL.md."""

from .app import create_app
from .weights import Model, builtin_demo_model, classify, load_model

__all__ = ["Model", "builtin_demo_model", "classify", "create_app", "load_model"]
