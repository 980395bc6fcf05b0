"""
==========================================
Registry of Codes, Topologies and Emitters
==========================================

You should interpret words and phrases that appear fully capitalized in
this document as described in :rfc:`2119`.

-----
Codes
-----

Each error-correcting code family is a subclass of
:py:class:`synprint.codes.code.Code`. Code classes are registered in
:py:data:`code_registry` under their ``name`` class attribute, which
MUST match the ``family`` value used in a
:py:class:`synprint.codes.code.CodeSpec`.

----------
Topologies
----------

Each hardware graph template is a function that returns a
:py:class:`synprint.library.topology.ConnectivityGraph` whose nodes
are the integers ``0..n-1``.
Templates are registered in :py:data:`topology_registry` and referenced
by name from scenario files, together with keyword arguments.

--------
Emitters
--------

Shot-log sinks are subclasses of
:py:class:`synprint.core.emitter.Emitter`, registered in
:py:data:`emitter_registry` under the ``type`` name used in emitter
configuration dictionaries.

-----------
Serializers
-----------

Each :term:`serializer` is a class that follows the API below. Serializers
convert objects that ``orjson`` cannot handle natively into JSON-compatible
values. For maximum performance, register serializers using a key equal
to the string representation of their designated type (e.g.
``str(Serializer.python_type)``).

Serializers MUST define:

1. The ``python_type`` class attribute that determines what types are
   handled by the serializer.
2. The :py:meth:`Serializer.serialize` method, called on all objects of
   type ``python_type``.
"""
from typing import Any, Dict, List


class Registry(object):
    def __init__(self) -> None:
        """A Registry holds a collection of functions or objects."""
        self.registry: Dict[str, Any] = {}
        self.main_keys: List[str] = []

    def register(self, key: str, item: Any, alternate_keys: tuple = tuple()) -> None:
        """Add an item to the registry.

        Args:
            key: Item key.
            item: The item to add.
            alternate_keys: Additional keys under which to register the
                item. These keys will not be included in the list
                returned by ``Registry.list()``.
        """
        keys = [key]
        keys.extend(alternate_keys)
        for registry_key in keys:
            if registry_key in self.registry:
                if item != self.registry[registry_key]:
                    raise ValueError(
                        f'registry already contains an entry for '
                        f'{registry_key}: {self.registry[registry_key]} '
                        f'--> {item}')
            else:
                self.registry[registry_key] = item
        if key not in self.main_keys:
            self.main_keys.append(key)

    def access(self, key: str) -> Any:
        """Get an item by key from the registry."""
        return self.registry.get(key)

    def require(self, key: str) -> Any:
        """Get an item by key, raising if it is not registered."""
        if key not in self.registry:
            raise ValueError(
                f'unknown key {key!r}; registered: {self.list()}')
        return self.registry[key]

    def list(self) -> List[str]:
        return list(self.main_keys)


# Initialize registries
# These are filled in by synprint/__init__.py upon import

#: Maps code family names to :term:`code classes`
code_registry = Registry()

#: Maps graph template names to graph builder functions
topology_registry = Registry()

#: Maps emitter type names to :term:`Emitter` classes
emitter_registry = Registry()

#: Maps serializer names to :term:`serializer` classes
serializer_registry = Registry()


class Serializer:
    """Base serializer class.

    Serialization of Python's built-in datatypes and most Numpy types is
    handled directly by ``orjson.dumps()``. The ``serialize`` methods of
    registered serializers are compiled into the fallback function that
    ``orjson`` calls on anything else.
    """
    python_type: Any = None  #: Type matching is NOT exact (subclasses included)

    def __init__(self) -> None:
        self.name = str(self.python_type) or self.__class__.__name__

    def serialize(self, data: Any) -> Any:
        """Controls what happens to data of the type ``python_type``"""
        raise NotImplementedError(
            f'{self.__class__.__name__} does not implement serialize()')


def test_registry_rejects_conflicting_entries() -> None:
    registry = Registry()
    registry.register('a', 1)
    registry.register('a', 1)
    try:
        registry.register('a', 2)
    except ValueError:
        pass
    else:
        raise AssertionError('conflicting registration was accepted')
    assert registry.list() == ['a']
    assert registry.access('missing') is None
