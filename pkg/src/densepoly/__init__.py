"""Dense building footprint polygonization from interior, edge and frame-field maps."""

__version__ = "0.1.0"
