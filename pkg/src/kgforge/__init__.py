"""Probabilistic data augmentation for knowledge-graph link prediction."""

from ._kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
