"""Cluster-expansion engine for the hard-core model on the hypercube Q_d."""

__version__ = "0.1.0"
