"""Numerical evidence for local uniqueness of autonomous ODEs.

Checks a transversality condition and Lipschitz continuity along the leaves
of a foliation, estimates moduli of continuity along hyperplanes, builds
foliations from curves with an explicit rotation formula, and integrates
trajectories to illustrate (non-)uniqueness.
"""

__version__ = "0.1.0"
