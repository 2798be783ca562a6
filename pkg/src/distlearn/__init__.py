"""Decentralized training of randomized networks, reservoirs, spline filters and semi-supervised learners."""

__version__ = "0.1.0"
