"""Versioned binary container for named float64 tensors.

Layout: magic b"HFGW", u32 version, u32 header length, JSON header
(ordered tensor names/shapes + free-form meta), then raw little-endian
float64 payloads in header order. Loads are shape-checked and round
trips are bit-exact.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .errors import InvalidArgumentError, MalformedImageError

MAGIC = b"HFGW"
VERSION = 1


def save_tensors(path, tensors, meta=None):
    entries = []
    payloads = []
    for name, arr in tensors.items():
        # np.require keeps 0-d shapes intact (ascontiguousarray would not)
        arr = np.require(np.asarray(arr, dtype=np.float64), requirements="C")
        entries.append({"name": name, "shape": list(arr.shape)})
        payloads.append(arr.tobytes())
    header = json.dumps({"tensors": entries, "meta": meta or {}}).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        for p in payloads:
            f.write(p)


def load_tensors(path):
    """Returns (dict name -> ndarray, meta dict)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise MalformedImageError(f"{path!r} is not a tensor container")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != VERSION:
            raise InvalidArgumentError(f"unsupported container version {version}")
        header = json.loads(f.read(hlen).decode("utf-8"))
        tensors = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape)) if shape else 1
            raw = f.read(8 * n)
            if len(raw) != 8 * n:
                raise MalformedImageError(f"truncated tensor payload in {path!r}")
            tensors[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return tensors, header.get("meta", {})
