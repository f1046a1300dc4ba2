"""Discrete laboratory for Muckenhoupt weights and the preimage of A-infinity under M."""

__version__ = "0.1.0"
