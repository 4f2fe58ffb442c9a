"""Cautious constraint-based causal structure learning."""
__version__ = "0.1.0"
