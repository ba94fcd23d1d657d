"""Tweet keyword signals for next-interval market direction, end to end."""

__version__ = "0.1.0"
