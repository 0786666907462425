"""Conformance checking and task-oriented analysis toolkit."""

__version__ = "0.1.0"
