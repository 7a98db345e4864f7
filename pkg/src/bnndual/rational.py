"""Parsing and formatting of exact rationals."""

from __future__ import annotations

import math
import re
from fractions import Fraction

INF = math.inf

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


def as_fraction(value) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are refused: every quantity in this package is exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not _RATIONAL.match(text):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, float):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def as_bound(value):
    """Like :func:`as_fraction` but also accepts ``"inf"``/``"-inf"``."""
    if isinstance(value, float) and math.isinf(value):
        return value
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf"):
        return -INF if value.strip().startswith("-") else INF
    return as_fraction(value)


def fmt(value) -> str:
    """Serialize as ``p/q`` (or an integer, or ``inf``)."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        raise TypeError("refusing to serialize a float as a rational")
    value = as_fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def decimal(value, digits: int = 12) -> str:
    """Decimal rendering rounded to ``digits`` significant digits (plotting only)."""
    return f"{float(value):.{digits}g}"


def parse_range(text: str) -> list[Fraction]:
    """Parse ``lo:hi:step`` into the inclusive exact grid lo, lo+step, ..., <= hi."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected lo:hi:step, got {text!r}")
    lo, hi, step = (as_fraction(p) for p in parts)
    if step <= 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError("grid upper end below lower end")
    count = math.floor((hi - lo) / step)
    return [lo + i * step for i in range(count + 1)]
