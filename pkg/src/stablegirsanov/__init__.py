"""Purely discontinuous Girsanov transforms of isotropic alpha-stable processes."""

__version__ = "0.1.0"
