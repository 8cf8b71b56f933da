"""
File Storage

Atomic writes, input reading with friendly errors, and the per-command run
manifest that records every input and output hash.
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable

from app.errors import UsageError
from app.models.schemas import RunManifest

logger = logging.getLogger(__name__)


def read_bytes(path: str | Path) -> bytes:
    """Read a whole input file; a missing file is a usage error."""
    path = Path(path)
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None
    except IsADirectoryError:
        raise UsageError(f"expected a file, got a directory: {path}") from None


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """Write `data` to a temp file next to `path`, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(data))
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def canonical_json(document: Any) -> bytes:
    """Sorted-key, fixed-separator JSON so identical content is identical bytes."""
    return (json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_run_manifest(
    primary_output: str | Path,
    command: str,
    arguments: dict[str, Any],
    inputs: Iterable[str | Path],
    outputs: Iterable[str | Path],
    extra: dict[str, Any] | None = None,
) -> Path:
    """
    Record a command invocation next to its primary output.

    Args:
        primary_output: File (or directory) the command produced
        command: Command name
        arguments: Effective arguments after config/flag merging
        inputs: Files read by the command
        outputs: Files written by the command

    Returns:
        Path of the manifest (`<primary_output>.run.json`, or
        `run.json` inside an output directory)
    """
    primary_output = Path(primary_output)
    if primary_output.is_dir():
        manifest_path = primary_output / "run.json"
    else:
        manifest_path = primary_output.with_name(primary_output.name + ".run.json")

    manifest = RunManifest(
        command=command,
        arguments={k: _jsonable(v) for k, v in sorted(arguments.items())},
        inputs={str(p): sha256_file(p) for p in inputs},
        outputs={str(p): sha256_file(p) for p in outputs if Path(p).is_file()},
        extra=extra or {},
    )
    atomic_write_bytes(manifest_path, json.dumps(manifest.model_dump(), sort_keys=True, indent=2).encode("utf-8"))
    return manifest_path


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value
