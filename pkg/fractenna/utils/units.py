import re
from typing import Optional

import click


_PREFIX = {"": 1.0, "k": 1e3, "K": 1e3, "M": 1e6, "G": 1e9, "T": 1e12, "m": 1e-3, "u": 1e-6, "µ": 1e-6, "n": 1e-9}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([kKMGTmuµn]?)([A-Za-zΩ]*)\s*$")


def parse_quantity(text: str, unit: Optional[str] = None) -> float:
    """
    Parse '3.5GHz', '1.57mm', '7e9' or '50ohm' into an SI float.
    - A bare number is already SI
    - The unit suffix, when given, must match `unit` (case-insensitive)
    """
    match = _QUANTITY.match(str(text))
    if not match:
        raise ValueError(f"cannot parse {text!r} as a number")
    number, prefix, suffix = match.groups()
    if not suffix and prefix and unit is not None and prefix.lower() == unit.lower():
        # a lone "m" on a length is the meter, not milli
        return float(number)
    if suffix and unit is not None and suffix.lower() != unit.lower():
        raise ValueError(f"expected a value in {unit}, got {text!r}")
    return float(number) * _PREFIX[prefix]


class Quantity(click.ParamType):
    name = "quantity"

    def __init__(self, unit: Optional[str] = None):
        self.unit = unit

    def convert(self, value, param, ctx):
        if isinstance(value, (int, float)):
            return float(value)
        try:
            return parse_quantity(value, self.unit)
        except ValueError as e:
            self.fail(str(e), param, ctx)


FREQUENCY = Quantity("Hz")
LENGTH = Quantity("m")
