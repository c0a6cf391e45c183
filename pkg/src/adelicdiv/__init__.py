"""Adelic potential theory over Q: exact Fekete identities, local kernels, heights and experiments."""

__version__ = "0.1.0"
