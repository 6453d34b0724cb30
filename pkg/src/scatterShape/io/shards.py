"""Binary dataset shards.

Layout, all little-endian:

    magic    4 bytes  b"AISD"
    version  u16      1
    kind     u16      RecordKind value
    count    u32      number of records
    width    u32      values per record
    payload           shapes: count·width bytes of 0/1; farfields: count·width float32
    crc32    u32      CRC32 of the payload
"""
import struct
import zlib
from enum import Enum

import numpy as np

from ..errors import CrcMismatchError, ShapeMismatchError, ShardError, TruncatedShardError, UnknownVersionError
from .tables import atomic_write

MAGIC = b"AISD"
VERSION = 1
HEADER = struct.Struct("<4sHHII")
TRAILER = struct.Struct("<I")


class RecordKind(Enum):
    SHAPES = 1
    FARFIELDS = 2


PAYLOAD_DTYPE = {RecordKind.SHAPES: np.dtype("u1"), RecordKind.FARFIELDS: np.dtype("<f4")}
DEFAULT_WIDTH = {RecordKind.SHAPES: 4096, RecordKind.FARFIELDS: 435}


def _records_array(records, kind, width):
    if len(records) == 0:
        return np.zeros((0, width if width is not None else DEFAULT_WIDTH[kind]), dtype=PAYLOAD_DTYPE[kind])
    rows = [r.flatten() if hasattr(r, "pixels") else np.asarray(r).reshape(-1) for r in records]
    lengths = {len(r) for r in rows}
    if len(lengths) != 1 or (width is not None and lengths != {width}):
        raise ShapeMismatchError(f"records must share one width, got {sorted(lengths)}")
    array = np.stack(rows)
    if kind is RecordKind.SHAPES and not np.isin(array, (0, 1)).all():
        raise ShapeMismatchError("shape records must contain only 0 and 1")
    return array.astype(PAYLOAD_DTYPE[kind])


def encode_shard(records, kind, width=None):
    kind = RecordKind(kind)
    array = _records_array(records, kind, width)
    payload = array.tobytes()
    header = HEADER.pack(MAGIC, VERSION, kind.value, array.shape[0], array.shape[1])
    return header + payload + TRAILER.pack(zlib.crc32(payload))


def write_shard(records, kind, path, width=None):
    atomic_write(path, encode_shard(records, kind, width))


def read_header(data):
    if len(data) < HEADER.size:
        raise TruncatedShardError(f"shard has {len(data)} bytes, header needs {HEADER.size}")
    magic, version, kind, count, width = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ShardError(f"not a dataset shard (magic {magic!r})")
    if version != VERSION:
        raise UnknownVersionError(f"unsupported shard version {version}")
    try:
        kind = RecordKind(kind)
    except ValueError:
        raise ShardError(f"unknown record kind {kind}") from None
    return kind, count, width


def decode_shard(data, kind=None):
    found, count, width = read_header(data)
    if kind is not None and RecordKind(kind) is not found:
        raise ShardError(f"expected a {RecordKind(kind).name.lower()} shard, found {found.name.lower()}")
    dtype = PAYLOAD_DTYPE[found]
    size = count * width * dtype.itemsize
    end = HEADER.size + size
    if len(data) < end + TRAILER.size:
        raise TruncatedShardError(f"shard payload needs {size + TRAILER.size} bytes, found {len(data) - HEADER.size}")
    if len(data) > end + TRAILER.size:
        raise ShardError(f"{len(data) - end - TRAILER.size} unexpected trailing bytes")
    payload = data[HEADER.size:end]
    (crc,) = TRAILER.unpack_from(data, end)
    if zlib.crc32(payload) != crc:
        raise CrcMismatchError(f"payload CRC {zlib.crc32(payload):08x} does not match stored {crc:08x}")
    records = np.frombuffer(payload, dtype=dtype).reshape(count, width)
    return records.astype(np.uint8 if found is RecordKind.SHAPES else np.float32)


def read_shard(path, kind=None):
    """Records as a (count, width) array; uint8 for shapes, float32 for far fields"""
    with open(path, "rb") as fh:
        return decode_shard(fh.read(), kind)


def shard_info(path):
    with open(path, "rb") as fh:
        return read_header(fh.read(HEADER.size))
