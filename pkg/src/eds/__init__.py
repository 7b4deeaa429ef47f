"""Symbolic-numeric toolkit for Darboux-integrable elliptic exterior
differential systems on coordinate charts."""

__version__ = "0.1.0"
