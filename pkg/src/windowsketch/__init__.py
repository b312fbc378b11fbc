"""Deterministic matrix sketches over sliding windows, with a benchmark harness.
"""

__version__ = "0.1.0.dev0"
