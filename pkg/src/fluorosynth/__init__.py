"""Synthetic fluorescence-spectroscopy datasets with peak-correlated noise."""

__version__ = "0.1.0"
