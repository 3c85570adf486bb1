"""Simulation and reinforcement-learning control of DNN layer offloading in
federated learning."""

__version__ = "0.1.0"
