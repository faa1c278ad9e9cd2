"""Phase-space wave mechanics of classical ensembles and its projection to quantum theory."""

__version__ = "0.1.0"
