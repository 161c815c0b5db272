"""Stationary-point number densities of chi-squared random fields."""

__version__ = "0.1.0"
