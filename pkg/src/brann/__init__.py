"""Bayesian-regularized neural networks for milling tool-wear prediction."""

__version__ = "0.1.0"
