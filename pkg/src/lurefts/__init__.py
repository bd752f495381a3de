"""Certification and simulation of Lur'e systems with piecewise continuous nonlinearities."""

from .errors import LureError
from .luresys import LureSystem
from .pwfun import PiecewiseFn

__all__ = ["LureError", "LureSystem", "PiecewiseFn"]
__version__ = "0.1.0"
