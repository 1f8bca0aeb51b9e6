"""Spectral multipliers, dyadic grids, sparse forms and weights on finite models of stratified groups."""

__version__ = "0.1.0"
