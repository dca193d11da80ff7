"""Binary checkpoint files.

Layout (all integers little-endian):

    bytes 0..7    magic b"TRKPOLCK"
    bytes 8..11   format version, uint32 (currently 1)
    bytes 12..19  header length L, uint64
    bytes 20..    UTF-8 JSON header of exactly L bytes
    then          one float64 little-endian blob per array, in the order
                  listed under header["arrays"]

The header records {"kind": ..., "meta": {...}, "arrays": [{"name", "shape"}]}.
JSON is dumped with sorted keys and no whitespace so identical inputs always
produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import MissingArtifactError, SchemaMismatchError

MAGIC = b"TRKPOLCK"
VERSION = 1


def save_checkpoint(path, kind: str, meta: dict, arrays: dict) -> None:
    """Write arrays (dict order = file order) plus a JSON-serializable meta."""
    header = {
        "kind": str(kind),
        "meta": meta,
        "arrays": [{"name": n, "shape": list(np.asarray(a).shape)}
                   for n, a in arrays.items()],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for a in arrays.values():
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple:
    """Returns (kind, meta, arrays). Raises SchemaMismatch on any corruption."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"checkpoint not found: {path}", artifact=str(path))
    raw = path.read_bytes()
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise SchemaMismatchError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<I", raw[8:12])
    if version != VERSION:
        raise SchemaMismatchError(f"{path}: unsupported checkpoint version {version}")
    (hlen,) = struct.unpack("<Q", raw[12:20])
    if len(raw) < 20 + hlen:
        raise SchemaMismatchError(f"{path}: truncated header")
    try:
        header = json.loads(raw[20:20 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaMismatchError(f"{path}: corrupt header ({exc})") from exc
    offset = 20 + hlen
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8 if shape else 8
        if len(raw) < offset + nbytes:
            raise SchemaMismatchError(f"{path}: truncated array {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(
            raw[offset:offset + nbytes], dtype="<f8").astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise SchemaMismatchError(f"{path}: {len(raw) - offset} trailing bytes")
    return header["kind"], header["meta"], arrays
