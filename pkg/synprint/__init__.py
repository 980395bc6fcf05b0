""" synprint module init
Register codes, topologies, emitters and serializers upon import
"""

__version__ = '0.1.0'

# import registries
from synprint.core.registry import (
    code_registry,
    topology_registry,
    emitter_registry,
    serializer_registry,
)

# import codes
from synprint.codes.repetition import Repetition
from synprint.codes.shor import Shor
from synprint.codes.steane import Steane
from synprint.codes.surface import Surface

# import topologies, serializers
from synprint.library.topology import heavy_hex, grid, all_to_all
from synprint.core.serialize import (
    NumpyFallbackSerializer, NumpyScalarSerializer, EnumSerializer,
)

# import emitters
from synprint.core.emitter import (
    Emitter, NullEmitter, RAMEmitter, JsonlEmitter
)


# register codes
code_registry.register(Repetition.name, Repetition)
code_registry.register(Shor.name, Shor)
code_registry.register(Steane.name, Steane)
code_registry.register(Surface.name, Surface)

# register topologies
topology_registry.register('heavy_hex', heavy_hex)
topology_registry.register('grid', grid)
topology_registry.register('all_to_all', all_to_all)

# register serializers
for SerializerClass in (
    NumpyFallbackSerializer, NumpyScalarSerializer, EnumSerializer,
    ):
    serializer = SerializerClass()
    serializer_registry.register(
        serializer.name, serializer)

# register emitters
emitter_registry.register('print', Emitter)
emitter_registry.register('null', NullEmitter)
emitter_registry.register('ram', RAMEmitter)
emitter_registry.register('jsonl', JsonlEmitter)
