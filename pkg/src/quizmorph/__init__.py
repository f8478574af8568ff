"""Tools for turning long trivia questions into short natural-style questions."""

__version__ = "0.1.0"
