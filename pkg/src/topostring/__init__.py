"""Topological spectrum and discretized energy of closed bosonic strings."""

__version__ = "0.1.0"
