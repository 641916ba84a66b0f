"""Relation classification with multiple range-restricted bidirectional GRUs and attention."""

__version__ = "0.1.0"
