"""A MiniML kernel for Jupyter, for writing exercises"""

from .kernel import MiniMLKernel

__all__ = ["MiniMLKernel"]
