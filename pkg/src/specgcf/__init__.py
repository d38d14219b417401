"""Jacobi-polynomial graph collaborative filtering.

Band-stop plus band-pass spectral filtering of user/item embeddings on the
bipartite interaction graph, BPR training, full-ranking evaluation, and
spectral diagnostics of the training graph.
"""
from .kernels import BACKEND
from .polybasis import FilterParams

__all__ = ["BACKEND", "FilterParams"]
__version__ = "0.1.0"
