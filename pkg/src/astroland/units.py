"""Parsing of ``"<number> <unit>"`` quantities from scenario files into SI."""
import math
import re

_SCALE = {
    # length
    "m": ("length", 1.0), "km": ("length", 1e3), "cm": ("length", 1e-2),
    # time
    "s": ("time", 1.0), "sec": ("time", 1.0), "min": ("time", 60.0),
    "h": ("time", 3600.0), "hr": ("time", 3600.0), "hour": ("time", 3600.0), "d": ("time", 86400.0),
    # mass
    "kg": ("mass", 1.0), "g": ("mass", 1e-3),
    # density
    "kg/m3": ("density", 1.0), "g/cm3": ("density", 1000.0),
    # angle
    "rad": ("angle", 1.0), "deg": ("angle", math.pi / 180.0),
    # rate
    "rad/s": ("rate", 1.0), "deg/s": ("rate", math.pi / 180.0),
    # speed
    "m/s": ("speed", 1.0), "km/s": ("speed", 1e3),
}

_ALIASES = {"g/cm^3": "g/cm3", "g/cm³": "g/cm3", "kg/m^3": "kg/m3", "kg/m³": "kg/m3"}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(value, kind, default_unit=None):
    """Return ``value`` in SI. Bare numbers are taken in ``default_unit`` (SI if None)."""
    if isinstance(value, bool):
        raise UnitError(f"expected a {kind} quantity, got {value!r}")
    if isinstance(value, (int, float)):
        unit = default_unit
        number = float(value)
    elif isinstance(value, str):
        m = _NUM.match(value)
        if not m:
            raise UnitError(f"cannot parse quantity {value!r}")
        number = float(m.group(1))
        unit = m.group(2) or default_unit
    else:
        raise UnitError(f"expected a {kind} quantity, got {value!r}")
    if unit is None:
        return number
    unit = _ALIASES.get(unit, unit)
    if unit not in _SCALE:
        raise UnitError(f"unknown unit {unit!r}")
    got, scale = _SCALE[unit]
    if got != kind:
        raise UnitError(f"unit {unit!r} is a {got}, expected a {kind}")
    return number * scale


def period_to_rate(period_seconds):
    return 2.0 * math.pi / period_seconds
