"""Per-sensor denoising autoencoders for uplink embeddings.

Each DAE trains on (noisy, clean) pairs while clean embeddings are still
available to the server (the denoising learning period), then freezes and
is applied to all later uplink traffic.  Training is online: one
adaptive-moment pass per round on that round's pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from daovfl import serialize
from daovfl.errors import DimensionError, StateError
from daovfl.numkit import (
    AdamState,
    DenseNet,
    adam_step,
    dense_net,
    mlp_backward,
    mlp_forward,
    mse_loss,
)

DAE_LR = 0.01  # adaptive-moment learning rate for all DAEs


@dataclass
class DaePair:
    noisy: np.ndarray
    clean: np.ndarray

    def __post_init__(self):
        if np.shape(self.noisy) != np.shape(self.clean):
            raise DimensionError(
                f"pair shapes differ: {np.shape(self.noisy)} vs {np.shape(self.clean)}"
            )


@dataclass
class DaeModel:
    encoder: DenseNet
    decoder: DenseNet
    period: int  # total training passes before freezing
    enc_state: AdamState = None
    dec_state: AdamState = None
    trained_rounds: int = 0
    # per-dim input standardization, fitted on the first training pair so
    # the encoder's nonlinearity works at a healthy scale
    input_loc: np.ndarray = None
    input_scale: np.ndarray = None

    def __post_init__(self):
        if self.encoder.in_width != self.decoder.out_width:
            raise DimensionError("encoder input width must equal decoder output width")
        if self.encoder.out_width != self.decoder.in_width:
            raise DimensionError("latent widths disagree between encoder and decoder")
        if self.enc_state is None:
            self.enc_state = AdamState.zeros_like(self.encoder)
        if self.dec_state is None:
            self.dec_state = AdamState.zeros_like(self.decoder)

    @property
    def width(self) -> int:
        return self.encoder.in_width

    @property
    def frozen(self) -> bool:
        return self.trained_rounds >= self.period

    def normalize(self, noisy) -> np.ndarray:
        if self.input_loc is None:
            return np.asarray(noisy)
        return (noisy - self.input_loc) / self.input_scale


def make_dae(width: int, period: int, rng: np.random.Generator,
             hidden: int = 16, latent: int = 8) -> DaeModel:
    """Desk-scale DAE: encoder width->hidden->latent, mirrored decoder.

    Hidden nonlinearity is tanh; the reconstruction layer is linear so
    targets near the tanh saturation points stay reachable.  A latent
    narrower than the embedding width caps reconstruction above the
    quantizer's own error at coarse levels, so the default latent matches
    the embedding width and denoising acts through the learned manifold.
    `period` counts training passes, not global rounds; callers running
    several passes per round scale it accordingly.
    """
    encoder = dense_net([width, hidden, latent], "tanh", rng)
    decoder = dense_net([latent, hidden, width], ["tanh", "linear"], rng)
    return DaeModel(encoder, decoder, period)


def dae_train_round(dae: DaeModel, pair: DaePair) -> float:
    """One optimization pass on a (noisy, clean) pair; returns the loss.

    Counts one round toward the denoising learning period and freezes the
    model when the period ends.
    """
    if dae.frozen:
        raise StateError("DAE is frozen; its denoising learning period is over")
    if pair.noisy.shape[1] != dae.width:
        raise DimensionError(
            f"pair width {pair.noisy.shape[1]} does not match DAE width {dae.width}"
        )
    if dae.input_loc is None:
        dae.input_loc = pair.noisy.mean(axis=0)
        dae.input_scale = np.maximum(pair.noisy.std(axis=0), 1e-6)
    enc_acts = mlp_forward(dae.encoder, dae.normalize(pair.noisy))
    dec_acts = mlp_forward(dae.decoder, enc_acts[-1])
    loss, grad = mse_loss(dec_acts[-1], pair.clean)
    dec_grads, latent_grad = mlp_backward(dae.decoder, dec_acts, grad)
    enc_grads, _ = mlp_backward(dae.encoder, enc_acts, latent_grad)
    dae.decoder = adam_step(dae.decoder, dec_grads, dae.dec_state, lr=DAE_LR)
    dae.encoder = adam_step(dae.encoder, enc_grads, dae.enc_state, lr=DAE_LR)
    dae.trained_rounds += 1
    return loss


def denoise(dae: DaeModel, noisy) -> np.ndarray:
    """Deterministic reconstruction pass; never mutates the DAE."""
    if np.shape(noisy)[1] != dae.width:
        raise DimensionError(
            f"embedding width {np.shape(noisy)[1]} does not match DAE width {dae.width}"
        )
    latent = mlp_forward(dae.encoder, dae.normalize(noisy))[-1]
    return mlp_forward(dae.decoder, latent)[-1]


def save_dae(dae: DaeModel, path) -> None:
    """Weights to a flat binary next to a small JSON sidecar."""
    path = Path(path)
    arrays = serialize.net_arrays(dae.encoder, "enc")
    arrays.update(serialize.net_arrays(dae.decoder, "dec"))
    if dae.input_loc is not None:
        arrays["input_loc"] = dae.input_loc
        arrays["input_scale"] = dae.input_scale
    serialize.write_arrays(path, arrays)
    sidecar = {
        "period": dae.period,
        "trained_rounds": dae.trained_rounds,
        "enc_activations": serialize.net_manifest(dae.encoder),
        "dec_activations": serialize.net_manifest(dae.decoder),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def load_dae(path) -> DaeModel:
    path = Path(path)
    arrays = serialize.read_arrays(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    encoder = serialize.net_from_arrays(arrays, "enc", sidecar["enc_activations"])
    decoder = serialize.net_from_arrays(arrays, "dec", sidecar["dec_activations"])
    dae = DaeModel(encoder, decoder, sidecar["period"])
    dae.trained_rounds = sidecar["trained_rounds"]
    if "input_loc" in arrays:
        dae.input_loc = arrays["input_loc"].copy()
        dae.input_scale = arrays["input_scale"].copy()
    return dae
