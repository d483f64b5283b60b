"""Parsing of unit-suffixed quantities such as ``"780 nm"`` or ``"3 mW"``."""

from __future__ import annotations

import re

from .errors import ConfigError

__all__ = ["parse_quantity", "UNITS", "PREFIXES"]

UNITS = ("rad", "m", "W", "K", "s")
PREFIXES = {"n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3, "k": 1e3, "": 1.0}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PATTERN = re.compile(rf"^\s*({_NUMBER})\s*([nuµmk]?)(rad|m|W|K|s)\s*$")


def parse_quantity(text, unit: str, name: str = "value") -> float:
    """SI value of ``text`` whose unit must be ``unit`` (after the prefix).

    >>> parse_quantity("780 nm", "m")
    7.8e-07
    >>> parse_quantity("2 mrad", "rad")
    0.002
    """
    if unit not in UNITS:
        raise ValueError(f"unsupported unit {unit!r}")
    if not isinstance(text, str):
        raise ConfigError(f"{name}: expected a string with a unit of {unit}, got {text!r}")
    m = _PATTERN.match(text)
    if m is None:
        raise ConfigError(f"{name}: cannot parse {text!r} as a quantity")
    number, prefix, found = m.groups()
    if found != unit:
        raise ConfigError(f"{name}: expected a unit of {unit}, got {found!r} in {text!r}")
    return float(number) * PREFIXES[prefix]
