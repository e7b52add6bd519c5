"""Certify Kannan-type contractive conditions and locate fixed points by Picard iteration."""

__version__ = "0.1.0"
