"""Schottky groups, Bruhat-Tits trees and Mumford curves over discretely
valued fields, at explicit finite precision."""
from __future__ import annotations

from .field import FieldSpec, LaurentField, Qp, ValuedScalar

__version__ = "0.1.0"

__all__ = [
    "FieldSpec",
    "LaurentField",
    "Qp",
    "ValuedScalar",
    "__version__",
]
