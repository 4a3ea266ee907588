"""Quantum neural network forecasting: CV (Fock) and DV (qubit) simulators,
variational training, and a transfer-learning forecasting pipeline."""

__version__ = "0.1.0"
