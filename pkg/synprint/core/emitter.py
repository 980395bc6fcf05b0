"""
========
Emitters
========

Emitters log syndrome records somewhere. A record is one shot of one
job, as a plain dictionary (see
:py:meth:`synprint.farm.provider.SyndromeRecord.to_dict`).

The ``jsonl`` emitter writes the shot log that both fingerprinting
pipelines read back through :py:func:`read_records`.
"""

import gzip
import os
from typing import Any, Dict, IO, Iterator, List, Optional

from synprint.core.registry import emitter_registry
from synprint.core.serialize import (
    dumps_line,
    loads_document,
    make_fallback_serializer_function,
    serialize_value)
from synprint.core.types import Document


def get_emitter(config: Optional[Dict[str, Any]]) -> 'Emitter':
    """Construct an Emitter using the provided config.

    The available Emitter type names and their classes are:

    * ``jsonl``: :py:class:`JsonlEmitter`, writes a JSON-Lines shot log
    * ``null``: :py:class:`NullEmitter`
    * ``print``: :py:class:`Emitter`, prints to stdout
    * ``ram``: :py:class:`RAMEmitter`

    Arguments:
        config: May contain the ``type`` key, which specifies the emitter
            type name (e.g. ``jsonl``). Defaults to ``print``.

    Returns:
        A new Emitter instance.
    """

    if config is None:
        config = {}
    emitter_type = config.get('type', 'print')
    emitter: Emitter = emitter_registry.require(emitter_type)(config)
    return emitter


class Emitter:
    def __init__(self, config: Dict[str, Any]) -> None:
        """Base class for emitters.

        This emitter simply emits to STDOUT.

        Args:
            config: Emitter configuration.
        """
        self.config = config

    def emit(self, data: Document) -> None:
        """Emit one record.

        Args:
            data: The record to emit. Providers call this once per shot,
                in shot order within a job.
        """
        _ = self  # Silence pylint no-self-use
        print(dumps_line(data).decode('utf-8'), end='')

    def emit_all(self, records: List[Document]) -> None:
        for record in records:
            self.emit(record)

    def get_data(self) -> List[Document]:
        """Get the emitted records.

        Returns:
            The records emitted so far, in emission order. For this
            particular class, an empty list is returned.
        """
        _ = self  # Silence pylint no-self-use
        return []

    def close(self) -> None:
        pass

    def __enter__(self) -> 'Emitter':
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


class NullEmitter(Emitter):
    """
    Don't emit anything
    """
    def emit(self, data: Document) -> None:
        pass


class RAMEmitter(Emitter):
    """
    Accumulate records in RAM.
    """

    def __init__(self, config: Dict[str, Any]) -> None:
        super().__init__(config)
        self.saved_data: List[Document] = []
        self.fallback_serializer = make_fallback_serializer_function()

    def emit(self, data: Document) -> None:
        self.saved_data.append(
            serialize_value(data, self.fallback_serializer))

    def get_data(self) -> List[Document]:
        return self.saved_data


def _open_log(path: str, mode: str) -> IO[bytes]:
    if path.endswith('.gz'):
        # a fixed header timestamp keeps compressed logs byte-identical
        return gzip.GzipFile(path, mode, mtime=0)  # type: ignore
    return open(path, mode)  # pylint: disable=consider-using-with


class JsonlEmitter(Emitter):
    """
    Append records to a JSON-Lines file, one record per line. A ``.gz``
    suffix on ``path`` selects gzip compression.

    Config keys: ``path`` (required) and ``append`` (default ``False``,
    which truncates an existing file).
    """

    def __init__(self, config: Dict[str, Any]) -> None:
        super().__init__(config)
        if 'path' not in config:
            raise ValueError('the jsonl emitter needs a "path"')
        self.path: str = config['path']
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.fallback_serializer = make_fallback_serializer_function()
        mode = 'ab' if config.get('append', False) else 'wb'
        self.handle: Optional[IO[bytes]] = _open_log(self.path, mode)
        self.count = 0

    def emit(self, data: Document) -> None:
        if self.handle is None:
            raise ValueError(f'emitter for {self.path} is closed')
        self.handle.write(dumps_line(data, self.fallback_serializer))
        self.count += 1

    def get_data(self) -> List[Document]:
        if self.handle is not None:
            self.handle.flush()
        return list(read_records(self.path))

    def close(self) -> None:
        if self.handle is not None:
            self.handle.close()
            self.handle = None


def read_records(path: str) -> Iterator[Document]:
    """Stream the records of a JSON-Lines shot log, gzipped or not.

    Raises:
        FileNotFoundError: ``path`` does not exist.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(
            f'missing shot log: {path}; run the collect command first')
    with _open_log(path, 'rb') as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield loads_document(line)


def test_ram_emitter() -> None:
    emitter = RAMEmitter({})
    emitter.emit({'job_id': 'j', 'shot': 0, 'syndrome': '01'})
    assert emitter.get_data() == [{'job_id': 'j', 'shot': 0, 'syndrome': '01'}]
    assert NullEmitter({}).get_data() == []
