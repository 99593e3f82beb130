"""Feasibility-guaranteed CBF-CLF quadratic programs for affine control systems."""

__version__ = "0.1.0"
