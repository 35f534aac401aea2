"""Activity-state classification from tri-axial collar accelerometry."""

__version__ = "0.1.0"
