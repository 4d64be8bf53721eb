from .app import DEFAULT_MODEL, Encoder, create_app, run

__all__ = ["DEFAULT_MODEL", "Encoder", "create_app", "run"]
