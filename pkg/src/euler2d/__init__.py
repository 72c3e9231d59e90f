"""2D Euler vortex-particle harness for velocity fields growing at infinity."""

__version__ = "0.1.0"
