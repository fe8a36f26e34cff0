"""Adaptive central-upwind solver for 2-D shallow water flows with variable density."""
__version__ = "0.1.0"
