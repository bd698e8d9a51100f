"""Flat binary weight files: named float64 arrays with a shape header.

Layout: magic ``DAOW``, uint32 array count, then per array a uint16
name length, the utf-8 name, uint8 ndim, int64 dims, and the raw
little-endian float64 data in C order.
"""

from __future__ import annotations

import struct

import numpy as np

from daovfl.numkit import DenseNet, Layer

_MAGIC = b"DAOW"


def write_arrays(path, arrays: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}q", *arr.shape))
            fh.write(arr.tobytes())


def read_arrays(path) -> dict:
    out = {}
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a weight file")
        (count,) = struct.unpack("<I", fh.read(4))
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}q", fh.read(8 * ndim))
            n = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape)
            out[name] = data.astype(np.float64)
    return out


def net_arrays(net: DenseNet, prefix: str) -> dict:
    """Flatten a net into named arrays; activations ride in the manifest."""
    out = {}
    for i, layer in enumerate(net.layers):
        out[f"{prefix}.{i}.w"] = layer.weight
        out[f"{prefix}.{i}.b"] = layer.bias
    return out


def net_manifest(net: DenseNet) -> list:
    return [layer.activation for layer in net.layers]


def net_from_arrays(arrays: dict, prefix: str, activations: list) -> DenseNet:
    layers = []
    for i, act in enumerate(activations):
        layers.append(
            Layer(arrays[f"{prefix}.{i}.w"].copy(), arrays[f"{prefix}.{i}.b"].copy(), act)
        )
    return DenseNet(layers)
