"""Fourier-Walsh spectrum of the endpoint of a coalescing random walk."""
__version__ = "0.1.0"
