"""Sandglass quasi-mechanisms on antiprismatic skeletons."""

__version__ = "0.1.0"
