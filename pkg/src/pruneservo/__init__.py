"""Image-based visual servoing of a UR5e for precision pruning, in simulation."""

__version__ = "0.1.0"
