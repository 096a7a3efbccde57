"""Condensate loading by spontaneous emission with photon reabsorption."""

__version__ = "1.0.0"
