import collections.abc
import copy
from typing import Optional


def deep_merge(dct: Optional[dict], merge_dct: Optional[dict]) -> dict:
    """ Recursive dict merge

    This mutates dct - the contents of merge_dct are added to dct (which
    is also returned). If you want to keep dct you could call it like
    ``deep_merge(copy.deepcopy(dct), merge_dct)``.

    >>> deep_merge({'a': {'b': 1, 'c': 2}}, {'a': {'c': 3}, 'd': 4})
    {'a': {'b': 1, 'c': 3}, 'd': 4}
    """
    if dct is None:
        dct = {}
    if merge_dct is None:
        merge_dct = {}
    for k, v in merge_dct.items():
        if (k in dct and isinstance(dct[k], dict)
                and isinstance(v, collections.abc.Mapping)):
            deep_merge(dct[k], v)
        else:
            dct[k] = v
    return dct


def merge_defaults(defaults: dict, parameters: Optional[dict]) -> dict:
    """Deep-merge ``parameters`` over a copy of ``defaults``.

    ``defaults`` is never mutated.
    """
    return deep_merge(copy.deepcopy(defaults), copy.deepcopy(parameters))


def test_merge_defaults_does_not_mutate() -> None:
    defaults = {'fleet': {'n_backends': 5, 'tier': 'full'}}
    merged = merge_defaults(defaults, {'fleet': {'tier': 'erad'}})
    assert merged == {'fleet': {'n_backends': 5, 'tier': 'erad'}}
    assert defaults['fleet']['tier'] == 'full'
