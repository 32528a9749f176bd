"""Simulator for fair reconstruction with coin penalties."""

__version__ = "0.1.0"
