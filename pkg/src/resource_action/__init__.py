"""Least-action paths on pure-state manifolds with resource potentials."""

__version__ = "0.1.0"
