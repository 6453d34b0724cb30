"""Model checkpoints.

    magic         4 bytes  b"AICK"
    header_size   u32      little-endian
    header                 UTF-8 JSON: kind, networks (name, widths, activations, slope, dtype),
                           standardizer, config, data_hash, parameter_count
    parameters             little-endian float32 or float64 as each network's dtype says;
                           per network in header order, per layer W (row-major, out × in) then b
"""
import json
import struct

import numpy as np

from ..core.models import MODEL_KINDS
from ..core.nn import Activation, Layer, MlpModel
from ..core.models.fnn import Standardizer
from ..errors import CheckpointError, KindMismatchError
from .tables import atomic_write

MAGIC = b"AICK"
FORMAT = 1
PREFIX = struct.Struct("<4sI")
PARAM_DTYPES = {"float32": np.dtype("<f4"), "float64": np.dtype("<f8")}


def _param_dtype(name):
    if name not in PARAM_DTYPES:
        raise CheckpointError(f"unsupported parameter dtype {name!r}")
    return PARAM_DTYPES[name]


def _network_header(name, net):
    return {
        "name": name,
        "widths": net.widths,
        "activations": [layer.activation.value for layer in net.layers],
        "slope": net.layers[0].slope,
        "seed": int(net.seed),
        "dtype": np.dtype(net.dtype).name,
    }


def parameter_count(widths):
    return sum(o * i + o for i, o in zip(widths, widths[1:]))


def encode_checkpoint(model, meta=None):
    networks = model.networks()
    for name, net in networks.items():
        if not net.is_finite():
            raise CheckpointError(f"{model.kind} network {name!r} has non-finite parameters")
    meta = dict(meta or {})
    standardizer = getattr(model, "standardizer", None)
    entries = [_network_header(name, net) for name, net in networks.items()]
    header = {
        "format": FORMAT,
        "kind": model.kind,
        "networks": entries,
        "standardizer": standardizer.to_dict() if standardizer is not None else None,
        "config": meta.get("config", {}),
        "data_hash": meta.get("data_hash", ""),
        "parameter_count": sum(net.parameter_count() for net in networks.values()),
    }
    text = json.dumps(header, sort_keys=True).encode()
    block = b"".join(
        np.ascontiguousarray(p, dtype=_param_dtype(entry["dtype"])).tobytes()
        for entry, net in zip(entries, networks.values()) for p in net.parameters()
    )
    return PREFIX.pack(MAGIC, len(text)) + text + block


def save_checkpoint(model, meta, path):
    atomic_write(path, encode_checkpoint(model, meta))


def decode_header(data):
    if len(data) < PREFIX.size:
        raise CheckpointError("checkpoint is truncated before its header")
    magic, size = PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"not a checkpoint (magic {magic!r})")
    try:
        header = json.loads(data[PREFIX.size:PREFIX.size + size].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise CheckpointError(f"unreadable checkpoint header: {err}") from err
    return header, PREFIX.size + size


def decode_checkpoint(data, kind=None):
    header, offset = decode_header(data)
    if header.get("kind") not in MODEL_KINDS:
        raise CheckpointError(f"unknown model kind {header.get('kind')!r}")
    if kind is not None and header["kind"] != kind:
        raise KindMismatchError(f"expected a {kind} checkpoint, found {header['kind']}")
    entries = header["networks"]
    dtypes = [_param_dtype(entry.get("dtype", "float32")) for entry in entries]
    counts = [parameter_count(entry["widths"]) for entry in entries]
    declared = sum(counts)
    expected = sum(c * d.itemsize for c, d in zip(counts, dtypes))
    if declared != header["parameter_count"] or len(data) - offset != expected:
        raise CheckpointError(
            f"header declares {header['parameter_count']} parameters ({declared} from widths, "
            f"{expected} bytes), block holds {len(data) - offset} bytes"
        )
    networks = {}
    for entry, dtype, count in zip(entries, dtypes, counts):
        values = np.frombuffer(data, dtype=dtype, count=count, offset=offset).astype(dtype.name)
        offset += count * dtype.itemsize
        position = 0
        layers = []
        for (fan_in, fan_out), act in zip(zip(entry["widths"], entry["widths"][1:]), entry["activations"]):
            weights = values[position:position + fan_in * fan_out].reshape(fan_out, fan_in).copy()
            position += fan_in * fan_out
            bias = values[position:position + fan_out].copy()
            position += fan_out
            layers.append(Layer(weights, bias, Activation(act), entry["slope"]))
        networks[entry["name"]] = MlpModel(layers, entry.get("seed", 0))
    standardizer = Standardizer.from_dict(header["standardizer"]) if header["standardizer"] else None
    return MODEL_KINDS[header["kind"]].from_networks(networks, standardizer), header


def load_checkpoint(path, kind=None):
    """Model stored at path; raises KindMismatchError when kind is given and differs"""
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read(), kind)[0]


def read_checkpoint_header(path):
    with open(path, "rb") as fh:
        return decode_header(fh.read())[0]
