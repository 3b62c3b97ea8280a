"""Adaptive edge-element solver with local multigrid for curl-curl problems."""
__version__ = "0.1.0"
