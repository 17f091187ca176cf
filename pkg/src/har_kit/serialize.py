"""Byte-stable array container used by every on-disk artifact.

``np.savez`` embeds the current time in its zip entries, which breaks
the contract that re-running an experiment reproduces identical files.
:func:`savez_stable` writes the same ``.npz`` layout with frozen
timestamps and sorted member order; :func:`np.load` reads it as usual.

Each artifact stores a JSON header under the ``header`` key carrying a
format tag, a format version, and run provenance (config hash, seed,
toolkit version).
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from har_kit.errors import DataError


def savez_stable(path, arrays: dict, header: dict | None = None) -> None:
    """Write arrays (plus an optional JSON ``header``) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    items = dict(arrays)
    if header is not None:
        items["header"] = json_array(header)
    with zipfile.ZipFile(path, mode="w", compression=zipfile.ZIP_STORED) as zf:
        for key in sorted(items):
            buf = io.BytesIO()
            np.save(buf, np.asarray(items[key]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{key}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def json_array(obj) -> np.ndarray:
    """Encode a JSON-serializable object as a uint8 array."""
    return np.frombuffer(
        json.dumps(obj, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )


def json_from_array(arr) -> dict:
    return json.loads(bytes(arr).decode("utf-8"))


def read_header(path, expected_format: str, expected_version: int) -> tuple[dict, np.lib.npyio.NpzFile]:
    """Open an artifact, validate its tag, and return (header, open file)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"artifact not found: {path}")
    arrays = np.load(path)
    try:
        header = json_from_array(arrays["header"])
    except Exception as exc:
        arrays.close()
        raise DataError(f"{path}: missing or corrupt header") from exc
    if header.get("format") != expected_format:
        arrays.close()
        raise DataError(
            f"{path}: format tag {header.get('format')!r}, "
            f"expected {expected_format!r}"
        )
    if header.get("version") != expected_version:
        arrays.close()
        raise DataError(
            f"{path}: unsupported version {header.get('version')} "
            f"(expected {expected_version})"
        )
    return header, arrays
