"""Atomic writers for the CSV, key-value and YAML files every command emits"""
import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union

import yaml

from bawutils.errors import ConfigException

_LOGGER = logging.getLogger(__name__)

NUMBER_FORMAT = "%.10g"


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return NUMBER_FORMAT % value
    if hasattr(value, "dtype"):
        return format_value(value.item())
    return str(value)


def ensure_directory(directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigException(f"Unable to create output directory {directory}: {exc}") from exc
    if not os.access(directory, os.W_OK):
        raise ConfigException(f"Output directory {directory} is not writable")
    return directory


def write_atomic(path: Union[str, Path], text: str) -> Path:
    """Write to a temporary file next to ``path`` and rename it over the target"""
    path = Path(path)
    ensure_directory(path.parent)
    handle, temporary = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    _LOGGER.debug(f"Wrote {path}")
    return path


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return write_atomic(path, buffer.getvalue())


def format_key_values(values: Mapping[str, Any]) -> str:
    return "".join(f"{key} = {format_value(value)}\n" for key, value in values.items())


def write_key_values(path: Union[str, Path], values: Mapping[str, Any]) -> Path:
    return write_atomic(path, format_key_values(values))


def write_yaml(path: Union[str, Path], document: Mapping[str, Any]) -> Path:
    return write_atomic(path, yaml.safe_dump(dict(document), sort_keys=True, default_flow_style=False))
