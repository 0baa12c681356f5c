"""Bit-specified output formats: the SLB1 binary array container and the
deterministic CSV diagnostics.

SLB1: the file begins with the magic line "SLB1\\n"; each record is one
UTF-8 JSON header line {"name":..., "shape":[...], "dtype":"c128"|"f64",
"order":"row-major"} terminated by '\\n', followed by exactly
prod(shape) * itemsize raw little-endian bytes; records are concatenated.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["write_slb1", "read_slb1", "write_csv", "format_float"]

_MAGIC = b"SLB1\n"
_DTYPES = {"c128": np.dtype("<c16"), "f64": np.dtype("<f8")}


class Slb1Error(ValueError):
    pass


def write_slb1(path, records):
    """records: iterable of (name, ndarray); dtype is forced to little-endian
    complex128 or float64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        for name, arr in records:
            a = np.asarray(arr)
            if np.iscomplexobj(a):
                a = a.astype("<c16")
                tag = "c128"
            else:
                a = a.astype("<f8")
                tag = "f64"
            header = {"name": name, "shape": list(a.shape), "dtype": tag,
                      "order": "row-major"}
            fh.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
            fh.write(np.ascontiguousarray(a).tobytes())


def read_slb1(path):
    """Returns dict name -> ndarray; validates the magic and record sizes,
    reporting the byte offset of any truncation."""
    out = {}
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise Slb1Error(f"{path}: bad magic at offset 0 "
                            f"(got {magic!r}, want {_MAGIC!r})")
        while True:
            pos = fh.tell()
            line = fh.readline()
            if not line:
                break
            try:
                header = json.loads(line.decode())
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise Slb1Error(f"{path}: bad record header at offset {pos}: {exc}")
            for key in ("name", "shape", "dtype", "order"):
                if key not in header:
                    raise Slb1Error(f"{path}: header at offset {pos} missing {key!r}")
            if header["dtype"] not in _DTYPES:
                raise Slb1Error(f"{path}: unknown dtype {header['dtype']!r} "
                                f"at offset {pos}")
            dt = _DTYPES[header["dtype"]]
            shape = tuple(int(s) for s in header["shape"])
            nbytes = int(np.prod(shape)) * dt.itemsize
            datapos = fh.tell()
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise Slb1Error(
                    f"{path}: truncated record {header['name']!r}: wanted "
                    f"{nbytes} bytes at offset {datapos}, got {len(raw)}")
            out[header["name"]] = np.frombuffer(raw, dtype=dt).reshape(shape)
    return out


def format_float(x):
    """17 significant digits; bit-stable across runs."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    """Comma-separated, header row first; fields must not require quoting
    (enforced)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name in header:
            if "," in str(name) or "\n" in str(name):
                raise ValueError(f"CSV field {name!r} would require quoting")
        fh.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, str):
                    if "," in v or "\n" in v:
                        raise ValueError(f"CSV field {v!r} would require quoting")
                    cells.append(v)
                else:
                    cells.append(format_float(v))
            fh.write(",".join(cells) + "\n")


def read_csv(path):
    """Returns (header, rows-of-strings)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]
