"""Simulation of centralized, federated and split learning on small networks."""

__version__ = "0.1.0"
