"""Mallows-type model averaging for partially linear functional score models."""

__version__ = "0.3.0"
