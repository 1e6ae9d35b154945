"""Evaluation toolkit for head pose estimation on SO(3)."""
__version__ = "0.1.0"
