"""Lagrangian and Eulerian solvers for gradient-controlling modified level-set equations."""

__version__ = "0.1.0"
