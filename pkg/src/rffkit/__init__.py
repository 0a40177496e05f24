"""Positive-definite kernels, random Fourier features and the concentration bounds behind them."""

__version__ = "0.1.0"
