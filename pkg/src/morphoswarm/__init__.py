"""Chemotaxis-driven swarm aggregation with moment-constrained initial conditions."""

__version__ = "0.1.0"
