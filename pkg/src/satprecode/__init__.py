"""Multibeam satellite precoding toolkit."""

__version__ = "0.1.0"
