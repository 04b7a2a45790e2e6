"""Binary container for datasets and parameter sets.

Layout: 8-byte magic ``SLSIM\\0\\0\\1``, 4-byte little-endian header length,
UTF-8 JSON header, then each declared array as raw little-endian float64
in header order.
"""
from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..nn.model import Parameters
from .dataset import Dataset

MAGIC = b"SLSIM\x00\x00\x01"
_LEN = struct.Struct("<I")
_F64 = np.dtype("<f8")


def _encode(header: dict, arrays: list[np.ndarray]) -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(np.ascontiguousarray(a, dtype=_F64).tobytes() for a in arrays)
    return MAGIC + _LEN.pack(len(head)) + head + body


def dumps(value) -> bytes:
    if isinstance(value, Dataset):
        header = {"kind": "dataset", "name": value.name, "num_classes": value.num_classes,
                  "arrays": [{"name": "features", "shape": list(value.features.shape)},
                             {"name": "labels", "shape": list(value.labels.shape)}]}
        return _encode(header, [value.features, value.labels.astype(np.float64)])
    if isinstance(value, Parameters):
        entries, arrays = [], []
        for role, group in (("trainable", "trainable"), ("buffer", "buffers")):
            for idx, name, arr in value.named(group):
                entries.append({"layer": idx, "name": name, "role": role, "shape": list(arr.shape)})
                arrays.append(arr)
        return _encode({"kind": "parameters", "arrays": entries}, arrays)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def loads(blob: bytes):
    if len(blob) < len(MAGIC) or blob[:len(MAGIC)] != MAGIC:
        raise FormatError("bad magic, not a container file", offset=0)
    pos = len(MAGIC)
    if len(blob) < pos + _LEN.size:
        raise FormatError(f"truncated header length: need {_LEN.size} bytes, have {len(blob) - pos}", offset=pos)
    (head_len,) = _LEN.unpack_from(blob, pos)
    pos += _LEN.size
    if len(blob) < pos + head_len:
        raise FormatError(f"truncated header: declared {head_len} bytes, have {len(blob) - pos}", offset=pos)
    try:
        header = json.loads(blob[pos:pos + head_len].decode("utf-8"))
        specs = header["arrays"]
        kind = header["kind"]
        shapes = [tuple(int(s) for s in a["shape"]) for a in specs]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"unreadable header: {exc}", offset=pos) from None
    pos += head_len
    expected = 8 * sum(math.prod(s) for s in shapes)
    actual = len(blob) - pos
    if actual != expected:
        raise FormatError(
            f"payload size mismatch: header declares {expected} bytes, file holds {actual}", offset=pos)
    arrays = []
    for shape in shapes:
        count = math.prod(shape)
        arrays.append(np.frombuffer(blob, dtype=_F64, count=count, offset=pos).astype(np.float64).reshape(shape))
        pos += 8 * count
    if kind == "dataset":
        try:
            features, labels = arrays
            return Dataset(features, labels.astype(np.int64), int(header["num_classes"]), header.get("name", ""))
        except (ValueError, KeyError) as exc:
            raise FormatError(f"invalid dataset container: {exc}") from None
    if kind == "parameters":
        params = Parameters()
        for spec, arr in zip(specs, arrays):
            group = params.trainable if spec["role"] == "trainable" else params.buffers
            group.setdefault(int(spec["layer"]), {})[spec["name"]] = arr
        return params
    raise FormatError(f"unknown container kind {kind!r}", offset=len(MAGIC) + _LEN.size)


def write_container(path, value) -> None:
    Path(path).write_bytes(dumps(value))


def read_container(path):
    return loads(Path(path).read_bytes())
