"""Command-line surface: configuration, CSV I/O, tables, stock study, figures."""

from .main import main, run

__all__ = ["main", "run"]
