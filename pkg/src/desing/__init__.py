"""Exact desingularization invariant, blow-ups and minimal-singularity recognition."""

__version__ = "0.1.0"
