"""Simulation of a self-stabilizing MST construction with a compact local verifier."""

__version__ = "0.1.0"
