"""
==========
Serialize
==========

orjson-based serialization of profiles, models, circuits and reports.
Documents are written with sorted keys and fixed indentation, so equal
inputs give byte-identical files.
"""

import enum
import warnings
from typing import Any, Callable, List, Optional

import numpy as np
import orjson

from synprint.core.registry import serializer_registry, Serializer

DOCUMENT_OPTIONS = (
    orjson.OPT_SERIALIZE_NUMPY
    | orjson.OPT_INDENT_2
    | orjson.OPT_SORT_KEYS
    | orjson.OPT_APPEND_NEWLINE)

LINE_OPTIONS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE


def find_non_string_keys(
        d: Any,
        curr_path: tuple = tuple(),
        saved_paths: Optional[List[tuple]] = None,
) -> List[tuple]:
    """Return list of paths which terminate in a non-string dictionary
    key. Orjson does not handle these types of keys by default."""
    if saved_paths is None:
        saved_paths = []
    if isinstance(d, dict):
        for key in d.keys():
            if not isinstance(key, str) or isinstance(key, np.str_):
                saved_paths.append(curr_path + (key,))
            find_non_string_keys(d[key], curr_path + (key,), saved_paths)
    return saved_paths


def dumps_document(value: Any, default: Optional[Callable] = None) -> bytes:
    """Serialize ``value`` to an indented, key-sorted JSON document."""
    return _dumps(value, DOCUMENT_OPTIONS, default)


def dumps_line(value: Any, default: Optional[Callable] = None) -> bytes:
    """Serialize ``value`` to one compact JSON-Lines record."""
    return _dumps(value, LINE_OPTIONS, default)


def loads_document(data: bytes) -> Any:
    return orjson.loads(data)


def serialize_value(value: Any, default: Optional[Callable] = None) -> Any:
    """Round-trip ``value`` through orjson, returning plain JSON types."""
    return orjson.loads(_dumps(value, orjson.OPT_SERIALIZE_NUMPY, default))


def _dumps(value: Any, options: int, default: Optional[Callable]) -> bytes:
    if default is None:
        default = make_fallback_serializer_function()
    try:
        return orjson.dumps(value, option=options, default=default)
    except TypeError as e:
        bad_keys = find_non_string_keys(value)
        raise TypeError(
            'These paths end in incompatible non-string keys: '
            f'{bad_keys}').with_traceback(e.__traceback__) from e


class NumpyFallbackSerializer(Serializer):
    """Orjson does not handle non-contiguous or object Numpy arrays."""
    python_type = np.ndarray

    def serialize(self, data: Any) -> list:
        return data.tolist()


class NumpyScalarSerializer(Serializer):
    python_type = np.generic

    def serialize(self, data: Any) -> Any:
        return data.item()


class EnumSerializer(Serializer):
    """Enums serialize to their values."""
    python_type = enum.Enum

    def serialize(self, data: enum.Enum) -> Any:
        return data.value


def make_fallback_serializer_function() -> Callable:
    """Creates a fallback function that is called by orjson on data of
    types that are not natively supported. Define and register instances of
    :py:class:`synprint.core.registry.Serializer` with serialization
    routines for the types in question."""

    def default(obj: Any) -> Any:
        # Try to lookup by exclusive type
        serializer = serializer_registry.access(str(type(obj)))
        if not serializer:
            compatible_serializers = []
            for serializer_name in serializer_registry.list():
                test_serializer = serializer_registry.access(serializer_name)
                # Subclasses with registered serializers will be caught here
                if isinstance(obj, test_serializer.python_type):
                    compatible_serializers.append(test_serializer)
            if len(compatible_serializers) > 1:
                raise TypeError(
                    f'Multiple serializers ({compatible_serializers}) found '
                    f'for {obj} of type {type(obj)}')
            if not compatible_serializers:
                raise TypeError(
                    f'No serializer found for {obj} of type {type(obj)}')
            serializer = compatible_serializers[0]
            if not isinstance(obj, enum.Enum):
                warnings.warn(
                    f'Searched through serializers to find {serializer} '
                    f'for data of type {type(obj)}. This is '
                    f'inefficient.')
        return serializer.serialize(obj)
    return default


def test_only_document_types_serialize() -> None:
    from synprint.core.circuit import GateKind
    assert serialize_value(
        {'kind': GateKind.CNOT, 'rates': np.array([0.5, 0.25]), 'n': np.int64(3)}
    ) == {'kind': 'CNOT', 'rates': [0.5, 0.25], 'n': 3}
    for value in [{1, 2}, frozenset()]:
        try:
            serialize_value({'value': value})
        except TypeError:
            continue
        raise AssertionError(f'serialized {value!r}')
