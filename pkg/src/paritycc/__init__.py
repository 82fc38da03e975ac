"""Parity-architecture constraint compilation with Steiner-tree bridging."""

__version__ = "0.1.0"
