"""Gaze-target prediction toolkit."""

__version__ = "0.1.0"
