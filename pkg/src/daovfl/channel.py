"""Noisy sensor-to-server uplink: uniform scalar quantizer or identity.

The quantizer is midtread with both endpoints on the grid and ties rounded
toward +inf.  Smaller level counts mean a coarser grid and stronger noise.
The downlink is treated as noiseless everywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from daovfl import backend
from daovfl.errors import ConfigError
from daovfl.numkit import as_matrix

KINDS = ("identity", "quantizer")


@dataclass(frozen=True)
class ChannelSpec:
    kind: str = "identity"
    levels: int = 16
    clip: float | None = None  # None until calibrated

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"channel kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "quantizer":
            if self.levels < 2:
                raise ConfigError(f"quantizer needs >= 2 levels, got {self.levels}")
            if self.clip is not None and self.clip <= 0:
                raise ConfigError(f"clip range must be positive, got {self.clip}")

    @property
    def step(self) -> float:
        if self.kind != "quantizer" or self.clip is None:
            raise ConfigError("step is only defined for a calibrated quantizer")
        return 2.0 * self.clip / (self.levels - 1)


def calibrate_clip(embeddings, percentile: float = 99.9) -> float:
    """Clip range from observed magnitudes: the given percentile of |values|.

    Calibrated once per experiment from the first round's clean embeddings
    so that clipping stays rare and quantization dominates the noise.
    """
    mags = np.abs(np.concatenate([np.ravel(e) for e in embeddings]))
    a = float(np.percentile(mags, percentile))
    if a <= 0.0:
        a = 1.0  # degenerate all-zero embeddings; any positive range works
    return a


def transmit(spec: ChannelSpec, embedding) -> np.ndarray:
    """Push one embedding through the uplink; shape is preserved."""
    if spec.kind == "identity":
        return embedding
    if spec.clip is None:
        raise ConfigError("quantizer channel used before clip calibration")
    return backend.quantize_midtread(as_matrix(embedding), spec.clip, spec.levels)
