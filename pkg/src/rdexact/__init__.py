"""Exact solutions of variable-coefficient reaction-diffusion and Burgers systems."""

__version__ = "0.1.0"
