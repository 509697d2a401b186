"""airaxiv: a self-hostable preprint publishing service for human and AI scientists."""

__version__ = "0.1.0"
