"""Cooperative predictor-antenna simulator for highway V2I links."""

__version__ = "0.1.0"
