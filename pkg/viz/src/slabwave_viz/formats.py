"""Readers for the documented slabwave output formats.

Implemented from the format specification only (magic line "SLB1\\n", one
JSON header line per record followed by raw little-endian bytes; CSV with a
header row); this package never imports the solver.
"""

from __future__ import annotations

import json

import numpy as np

_MAGIC = b"SLB1\n"
_DTYPES = {"c128": np.dtype("<c16"), "f64": np.dtype("<f8")}


class FormatError(ValueError):
    pass


def read_slb1(path):
    """Validate and read an SLB1 container into {name: ndarray}."""
    out = {}
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic at offset 0 "
                              f"(got {magic!r}, want {_MAGIC!r})")
        while True:
            pos = fh.tell()
            line = fh.readline()
            if not line:
                break
            try:
                header = json.loads(line.decode())
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise FormatError(f"{path}: bad record header at offset {pos}: {exc}")
            missing = [k for k in ("name", "shape", "dtype", "order") if k not in header]
            if missing:
                raise FormatError(f"{path}: header at offset {pos} missing {missing}")
            if header["dtype"] not in _DTYPES:
                raise FormatError(f"{path}: unknown dtype {header['dtype']!r} at "
                                  f"offset {pos}")
            if header["order"] != "row-major":
                raise FormatError(f"{path}: unsupported order {header['order']!r}")
            dt = _DTYPES[header["dtype"]]
            shape = tuple(int(s) for s in header["shape"])
            nbytes = int(np.prod(shape)) * dt.itemsize
            datapos = fh.tell()
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise FormatError(
                    f"{path}: truncated record {header['name']!r}: wanted "
                    f"{nbytes} bytes at offset {datapos}, got {len(raw)}")
            out[header["name"]] = np.frombuffer(raw, dtype=dt).reshape(shape)
    if not out:
        raise FormatError(f"{path}: no records")
    return out


def read_csv(path, required=()):
    """Read a slabwave CSV into (header, column dict of float arrays where
    possible, raw string rows)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty CSV")
    header = lines[0].split(",")
    for col in required:
        if col not in header:
            raise FormatError(f"{path}: missing column {col!r} "
                              f"(header: {header})")
    rows = [ln.split(",") for ln in lines[1:]]
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise FormatError(f"{path}: row {i + 2} has {len(row)} fields, "
                              f"header has {len(header)}")
    cols = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return header, cols, rows
