"""Recipe question generation from sentence AMR graphs and action flow graphs."""

__version__ = "0.1.0"
