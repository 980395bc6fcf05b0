'''
=====
Units
=====

Here is where we create the :py:data:`units` object from which we pull
units throughout synprint. Configuration files may give durations and
coherence times either as plain numbers, which are taken to be seconds,
or as strings that Pint can parse:

>>> to_seconds('2 hour')
7200.0
>>> to_seconds(2.0)
2.0
>>> round(to_seconds(35 * units.ns) * 1e9, 6)
35.0
'''

from typing import Any, Union

import pint

try:
    from pint.quantity import _Quantity as Quantity
except ImportError:
    from pint import Quantity

#: Units registry used to parse physical quantities in configuration
units = pint.UnitRegistry()

pint.set_application_registry(units)

QuantityLike = Union[float, int, str, Any]


def to_seconds(value: QuantityLike) -> float:
    '''Normalize a duration to a float number of seconds.

    Args:
        value: A number (already in seconds), a Pint quantity, or a
            string such as ``"300 ns"`` or ``"24 hour"``.

    Returns:
        The duration in seconds.

    Raises:
        ValueError: The value has units that are not a time.
    '''
    if isinstance(value, str):
        value = units(value)
    if isinstance(value, Quantity):
        try:
            return float(value.to(units.s).magnitude)
        except pint.DimensionalityError as error:
            raise ValueError(
                f'expected a duration, got {value}') from error
    return float(value)


def range_to_seconds(bounds: Any) -> tuple:
    '''Normalize a ``[low, high]`` pair of durations to seconds.

    >>> range_to_seconds(['1 s', '1 minute'])
    (1.0, 60.0)
    '''
    low, high = bounds
    return to_seconds(low), to_seconds(high)
