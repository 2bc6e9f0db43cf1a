"""Adaptive RBF-network tracking control of a two-link arm: plant, controllers, node placement and analysis."""

__version__ = "0.1.0"
