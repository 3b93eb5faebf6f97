"""Overloaded multi-LNB satellite receiver simulator."""

__version__ = "0.1.0"
