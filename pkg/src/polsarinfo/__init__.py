"""Polarimetric SAR speckle filtering and supervised classification toolkit."""
__version__ = "0.1.0"
