"""Bitmap serialization and safe file writes.

Packed bitmap format (byte-exact):

    offset  size  field
    0       4     magic  b"PBM1"
    4       2     version, uint16 little-endian (currently 1)
    6       2     reserved, must be 0
    8       8     bit length, uint64 little-endian
    16      ...   payload: ceil(length / 8) bytes, bit i stored at
                  byte i // 8, bit position i % 8 (LSB-first)

All writes in this package go through atomic_write: content lands in a
temp file in the target directory and is renamed into place, so readers
never observe a half-written artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"PBM1"
VERSION = 1
_HEADER = struct.Struct("<4sHHQ")


class FormatError(ValueError):
    """Raised for malformed packed-bitmap files."""


def pack_bits(bits: np.ndarray) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError(f"expected a flat bit vector, got shape {bits.shape}")
    header = _HEADER.pack(MAGIC, VERSION, 0, bits.size)
    return header + np.packbits(bits, bitorder="little").tobytes()


def unpack_bits(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise FormatError(f"truncated header: {len(blob)} bytes")
    magic, version, reserved, n_bits = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if reserved != 0:
        raise FormatError(f"reserved field must be 0, got {reserved}")
    payload = blob[_HEADER.size:]
    need = (n_bits + 7) // 8
    if len(payload) != need:
        raise FormatError(f"payload is {len(payload)} bytes, expected {need} "
                          f"for {n_bits} bits")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8),
                         bitorder="little")[:n_bits]
    return bits.astype(np.uint8)


def atomic_write(path: Path | str, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bitmap(path: Path | str, bits: np.ndarray) -> None:
    atomic_write(path, pack_bits(bits))


def read_bitmap(path: Path | str) -> np.ndarray:
    return unpack_bits(Path(path).read_bytes())


def write_bits_csv(path: Path | str, bits: np.ndarray) -> None:
    """One 0/1 per line; plain interchange form of a bitmap."""
    bits = np.asarray(bits, dtype=np.uint8)
    atomic_write(path, ("\n".join(str(int(b)) for b in bits) + "\n").encode())


def read_bits_csv(path: Path | str) -> np.ndarray:
    lines = Path(path).read_text().split()
    out = np.empty(len(lines), dtype=np.uint8)
    for i, tok in enumerate(lines):
        if tok not in ("0", "1"):
            raise FormatError(f"line {i + 1}: expected 0 or 1, got {tok!r}")
        out[i] = tok == "1"
    return out


def write_responses_hex(path: Path | str, responses: np.ndarray) -> None:
    """One response per line as an MSB-first hex string.

    A `# width=N` comment line records the exact bit width so widths that
    are not a multiple of 4 round-trip without ambiguity.
    """
    rows = np.asarray(responses, dtype=np.uint8)
    if rows.ndim != 2:
        raise FormatError(f"expected a 2-d response block, got shape {rows.shape}")
    width = rows.shape[1]
    digits = -(-width // 4)
    lines = [f"# width={width}"]
    for row in rows:
        value = int("".join("1" if b else "0" for b in row), 2) if width else 0
        lines.append(f"{value:0{digits}x}")
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_responses_hex(path: Path | str) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# width="):
        raise FormatError(f"{path}: missing '# width=' header line")
    try:
        width = int(lines[0].split("=", 1)[1])
    except ValueError as exc:
        raise FormatError(f"{path}: bad width header {lines[0]!r}") from exc
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        try:
            value = int(line, 16)
        except ValueError as exc:
            raise FormatError(f"{path}: line {i}: not a hex string") from exc
        rows.append([(value >> (width - 1 - j)) & 1 for j in range(width)])
    return np.array(rows, dtype=np.uint8).reshape(len(rows), width)


def _json_default(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON-serializable: {type(v).__name__}")


def write_json(path: Path | str, obj) -> None:
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True,
                                   default=_json_default) + "\n").encode())


def write_csv(path: Path | str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_sha256(path: Path | str) -> str:
    return sha256_hex(Path(path).read_bytes())
