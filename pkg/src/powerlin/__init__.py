"""Exact power-series linearization toolkit."""

from .errors import ObstructionError, PowerlinError, PreconditionError
from .ring import QQ, Nil, Ring
from .series import INF, AtLeast, Series, SeriesVec, parse_poly

__all__ = [
    "INF", "QQ", "AtLeast", "Nil", "ObstructionError", "PowerlinError",
    "PreconditionError", "Ring", "Series", "SeriesVec", "parse_poly",
]
