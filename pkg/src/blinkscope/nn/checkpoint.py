"""BSCP model checkpoint files.

Layout (all integers little-endian u32)::

    b"BSCP" | version | meta_len | meta JSON (utf-8)
    then repeated until EOF:
    name_len | name (utf-8) | rank | dims[rank] | float32 data (row-major)
"""

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import FormatError

MAGIC = b"BSCP"
FORMAT_VERSION = 1


@dataclass
class ModelCheckpoint:
    named_tensors: dict
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_bytes(self):
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<I", self.format_version))
        meta = json.dumps(self.metadata, sort_keys=True).encode("utf-8")
        buf.write(struct.pack("<I", len(meta)))
        buf.write(meta)
        # Sorted names keep the byte stream independent of dict insertion order.
        for name in sorted(self.named_tensors):
            arr = np.asarray(self.named_tensors[name], dtype="<f4")
            raw = name.encode("utf-8")
            buf.write(struct.pack("<I", len(raw)))
            buf.write(raw)
            buf.write(struct.pack("<I", arr.ndim))
            buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            buf.write(arr.tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data):
        reader = _Reader(data)
        if reader.take(4, "magic") != MAGIC:
            raise FormatError("not a BSCP checkpoint: bad magic", 0)
        version = reader.u32("version")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported BSCP version {version}", 4)
        meta_len = reader.u32("metadata length")
        start = reader.pos
        try:
            metadata = json.loads(reader.take(meta_len, "metadata").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"metadata is not valid JSON: {exc}", start) from None
        tensors = {}
        while reader.pos < len(data):
            rec = reader.pos
            name_len = reader.u32("name length")
            try:
                name = reader.take(name_len, "tensor name").decode("utf-8")
            except UnicodeDecodeError:
                raise FormatError("tensor name is not utf-8", rec + 4) from None
            if name in tensors:
                raise FormatError(f"duplicate tensor {name!r}", rec)
            rank = reader.u32("rank")
            dims = [reader.u32("dimension") for _ in range(rank)]
            count = int(np.prod(dims)) if dims else 1
            raw = reader.take(4 * count, f"data of {name!r}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        return cls(tensors, metadata, version)

    def save(self, path):
        data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)
        return hashlib.sha256(data).hexdigest()

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def checksum(self):
        return hashlib.sha256(self.to_bytes()).hexdigest()


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated file while reading {what}", self.pos)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def params_digest(params):
    """SHA-256 over the raw bytes of a parameter dict, in name order."""
    h = hashlib.sha256()
    for name in sorted(params):
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(params[name]).tobytes())
    return h.hexdigest()
