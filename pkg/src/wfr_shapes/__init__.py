"""Elastic shape distances for convex planar loops via unbalanced optimal
transport of length measures on the circle, with sparse linear optimization
over the corresponding distance balls."""

__version__ = "0.1.0"
