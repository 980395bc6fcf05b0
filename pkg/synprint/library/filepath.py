"""
filepath.py
File and filename path utilities.
"""

import csv
import os
from typing import Any, Iterable, Sequence

from synprint.core.serialize import dumps_document, loads_document


def makedirs(path: str, *paths: str) -> str:
    """Join one or more path components, make that directory path (using the
    default mode 0o0777), and return the full path.

    Raise OSError if it can't achieve the result (e.g. the containing directory
    is readonly or the path contains a file); not if the directory already
    exists.
    """
    full_path = os.path.join(path, *paths)

    os.makedirs(full_path, exist_ok=True)
    return full_path


def write_json_file(filename: str, obj: Any) -> None:
    """Write ``obj`` as an indented, key-sorted JSON document."""
    directory = os.path.dirname(filename)
    if directory:
        makedirs(directory)
    with open(filename, 'wb') as f:
        f.write(dumps_document(obj))


def read_json_file(filename: str) -> Any:
    if not os.path.exists(filename):
        raise FileNotFoundError(f'missing JSON document: {filename}')
    with open(filename, 'rb') as f:
        return loads_document(f.read())


def write_csv_file(
        filename: str,
        header: Sequence[str],
        rows: Iterable[Sequence[Any]],
) -> None:
    """Write a CSV table with a header row."""
    directory = os.path.dirname(filename)
    if directory:
        makedirs(directory)
    with open(filename, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def read_csv_file(filename: str) -> list:
    """Read a CSV table back as a list of dicts keyed by the header."""
    with open(filename, newline='', encoding='utf-8') as f:
        return list(csv.DictReader(f))


def is_empty_dir(path: str) -> bool:
    return not os.path.isdir(path) or not os.listdir(path)
