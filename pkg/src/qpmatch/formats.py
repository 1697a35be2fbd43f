"""On-disk formats for grid strings and hidden-shift instances.

Text grid::

    QPMGRID 1
    # {"provenance": ...}      (optional JSON comment lines)
    d side q
    <side**d integers, row-major, one row of the last axis per line>

Binary grid: ``QPMGRIDB`` magic, a little-endian ``<HHIQ`` header
(version, d, side, q), a ``uint32`` length-prefixed JSON metadata blob, then
the cells as little-endian ``uint64``.

Shift instance (text)::

    QPMSHIFT 1
    # {...}
    n d q eps
    [f]
    <text grid>
    [g]
    <text grid>
    [sealed]
    <shift components>
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .grid import GridString

TEXT_MAGIC = "QPMGRID"
BINARY_MAGIC = b"QPMGRIDB"
SHIFT_MAGIC = "QPMSHIFT"
VERSION = 1
_BIN_HEADER = struct.Struct("<HHIQ")


def _meta_lines(meta: dict | None) -> list[str]:
    if not meta:
        return []
    return ["# " + json.dumps(meta, sort_keys=True)]


def grid_to_text(S: GridString, meta: dict | None = None) -> str:
    lines = [f"{TEXT_MAGIC} {VERSION}", *_meta_lines(meta), f"{S.d} {S.side} {S.q}"]
    rows = S.cells.reshape(-1, S.side)
    lines.extend(" ".join(str(int(v)) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _parse_grid_lines(lines: list[str], pos: int) -> tuple[GridString, dict, int]:
    if pos >= len(lines) or lines[pos].split() != [TEXT_MAGIC, str(VERSION)]:
        found = lines[pos] if pos < len(lines) else "<eof>"
        raise FormatError(f"expected '{TEXT_MAGIC} {VERSION}' header, found {found!r}")
    pos += 1
    meta: dict = {}
    while pos < len(lines) and lines[pos].startswith("#"):
        try:
            meta.update(json.loads(lines[pos][1:]))
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad metadata line: {exc}") from exc
        pos += 1
    try:
        d, side, q = (int(v) for v in lines[pos].split())
    except (IndexError, ValueError) as exc:
        raise FormatError("expected 'd side q' line") from exc
    pos += 1
    need = side**d
    values: list[int] = []
    while len(values) < need and pos < len(lines):
        if lines[pos].strip():
            values.extend(int(v) for v in lines[pos].split())
        pos += 1
    if len(values) != need:
        raise FormatError(f"expected {need} cells, found {len(values)}")
    dtype = np.uint64 if q > 2**63 else np.int64
    return GridString(np.array(values, dtype=dtype), d, side, q), meta, pos


def grid_from_text(text: str) -> tuple[GridString, dict]:
    grid, meta, _ = _parse_grid_lines(text.splitlines(), 0)
    return grid, meta


def grid_to_bytes(S: GridString, meta: dict | None = None) -> bytes:
    blob = json.dumps(meta or {}, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(BINARY_MAGIC)
    buf.write(_BIN_HEADER.pack(VERSION, S.d, S.side, S.q))
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    buf.write(S.cells.astype("<u8").tobytes())
    return buf.getvalue()


def grid_from_bytes(data: bytes) -> tuple[GridString, dict]:
    if not data.startswith(BINARY_MAGIC):
        raise FormatError("missing binary grid magic")
    pos = len(BINARY_MAGIC)
    try:
        version, d, side, q = _BIN_HEADER.unpack_from(data, pos)
        pos += _BIN_HEADER.size
        (mlen,) = struct.unpack_from("<I", data, pos)
    except struct.error as exc:
        raise FormatError("truncated binary header") from exc
    if version != VERSION:
        raise FormatError(f"unsupported binary grid version {version}")
    pos += 4
    meta = json.loads(data[pos : pos + mlen].decode() or "{}")
    pos += mlen
    cells = np.frombuffer(data, dtype="<u8", offset=pos)
    if cells.size != side**d:
        raise FormatError(f"expected {side**d} cells, found {cells.size}")
    return GridString(cells, d, side, q), meta


def write_grid(path: str | Path, S: GridString, meta: dict | None = None, *, binary: bool = False) -> Path:
    path = Path(path)
    if binary:
        path.write_bytes(grid_to_bytes(S, meta))
    else:
        path.write_text(grid_to_text(S, meta))
    return path


def read_grid(path: str | Path) -> tuple[GridString, dict]:
    data = Path(path).read_bytes()
    if data.startswith(BINARY_MAGIC):
        return grid_from_bytes(data)
    return grid_from_text(data.decode())


# ---------------------------------------------------------------------------
# hidden-shift instances
# ---------------------------------------------------------------------------


def shift_instance_to_text(inst, meta: dict | None = None) -> str:
    lines = [f"{SHIFT_MAGIC} {VERSION}", *_meta_lines(meta)]
    lines.append(f"{inst.n} {inst.d} {inst.q} {inst.noise_fraction!r}")
    lines.append("[f]")
    lines.append(grid_to_text(inst.f_grid()).rstrip("\n"))
    lines.append("[g]")
    lines.append(grid_to_text(inst.g_grid()).rstrip("\n"))
    if inst.has_sealed_shift:
        lines.append("[sealed]")
        lines.append(" ".join(str(c) for c in inst.unseal().components))
    return "\n".join(lines) + "\n"


def shift_instance_from_text(text: str, *, unseal: bool = False):
    """Parse a shift instance. The sealed shift is attached only with ``unseal=True``.

    Without it the instance comes back in exact mode, which never consults a shift.
    """
    from .sieve import HiddenShiftInstance

    lines = text.splitlines()
    if not lines or lines[0].split() != [SHIFT_MAGIC, str(VERSION)]:
        raise FormatError(f"expected '{SHIFT_MAGIC} {VERSION}' header")
    pos = 1
    meta: dict = {}
    while pos < len(lines) and lines[pos].startswith("#"):
        meta.update(json.loads(lines[pos][1:]))
        pos += 1
    try:
        n_s, d_s, q_s, eps_s = lines[pos].split()
        n, d, q, eps = int(n_s), int(d_s), int(q_s), float(eps_s)
    except (IndexError, ValueError) as exc:
        raise FormatError("expected 'n d q eps' line") from exc
    pos += 1
    tables = []
    for tag in ("[f]", "[g]"):
        if pos >= len(lines) or lines[pos].strip() != tag:
            raise FormatError(f"missing {tag} section")
        grid, _, pos = _parse_grid_lines(lines, pos + 1)
        if (grid.d, grid.side) != (d, 1 << n):
            raise FormatError(f"{tag} table shape does not match header")
        tables.append(grid.array)
    shift = None
    if pos < len(lines) and lines[pos].strip() == "[sealed]":
        shift = tuple(int(v) for v in lines[pos + 1].split())
        if len(shift) != d:
            raise FormatError("sealed shift has the wrong dimension")
    if unseal and shift is not None:
        inst = HiddenShiftInstance(n, d, tables[0], tables[1], q, shift=shift, mode="poison")
        if abs(inst.noise_fraction - eps) > 1e-12:
            raise FormatError(f"header eps {eps} disagrees with tables ({inst.noise_fraction})")
    else:
        inst = HiddenShiftInstance(n, d, tables[0], tables[1], q, mode="exact")
    return inst, meta


def write_shift_instance(path: str | Path, inst, meta: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(shift_instance_to_text(inst, meta))
    return path


def read_shift_instance(path: str | Path, *, unseal: bool = False):
    return shift_instance_from_text(Path(path).read_text(), unseal=unseal)
