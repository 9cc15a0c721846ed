"""Excess-delay measurement and regression analysis for ground delay programs."""

__version__ = "0.1.0"
