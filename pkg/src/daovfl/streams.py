"""Synthetic vertically partitioned data streams.

A hidden latent factor z in R^8 drives every sample: sensor k observes
x_k = tanh(z A_k) + noise and the label is argmax(z W) (classification)
or z . w (regression).  The label map W has orthonormal columns so class
scores are i.i.d. standard normal and labels are uniform by construction.
Feature noise is drawn once per sample and never redrawn, so a sample's
measurements are stable across the rounds of a sliding window.

Two online regimes: ``sliding`` keeps a fixed-size window (each round adds
n_new samples and evicts the n_new oldest), ``incremental`` only grows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from daovfl.errors import ConfigError

LATENT_DIM = 8

REGIMES = ("sliding", "incremental")


@dataclass(frozen=True)
class StreamConfig:
    sensors: int = 4
    widths: tuple = (8, 8, 8, 8)  # raw feature width per sensor
    classes: int = 4  # 0 means regression
    n_init: int = 256
    n_new: int = 32
    regime: str = "sliding"
    noise_std: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.sensors < 1 or len(self.widths) != self.sensors:
            raise ConfigError(
                f"need one width per sensor: {self.sensors} sensors, {len(self.widths)} widths"
            )
        if any(w < 1 for w in self.widths):
            raise ConfigError("sensor feature widths must be >= 1")
        if self.classes != 0 and not 2 <= self.classes <= LATENT_DIM:
            raise ConfigError(
                f"classes must be 0 (regression) or in [2, {LATENT_DIM}], got {self.classes}"
            )
        if self.n_new < 1 or self.n_init < self.n_new:
            raise ConfigError("need n_new >= 1 and n_init >= n_new")
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")

    @property
    def total_width(self) -> int:
        return sum(self.widths)

    @property
    def regression(self) -> bool:
        return self.classes == 0


@dataclass
class RoundBatch:
    """One round's window: per-sensor feature blocks plus shared labels.

    ``ids`` and ``latents`` are generator bookkeeping (FIFO checks, label
    replay); models never see them.
    """

    t: int
    blocks: list[np.ndarray]  # K blocks, each (N, P_k)
    labels: np.ndarray  # (N,) int classes or float targets
    ids: np.ndarray  # (N,) int64, monotone per generation order
    latents: np.ndarray  # (N, LATENT_DIM)

    @property
    def window_size(self) -> int:
        return self.labels.shape[0]


class StreamState:
    """Single-owner stream; advance with :func:`next_round`."""

    def __init__(self, cfg: StreamConfig):
        self.cfg = cfg
        ss = np.random.SeedSequence(cfg.seed)
        map_seed, sample_seed = ss.spawn(2)
        map_rng = np.random.default_rng(map_seed)
        # Mixing matrices scaled so pre-tanh features are ~N(0, 1).
        self.mixers = [
            map_rng.standard_normal((LATENT_DIM, w)) / np.sqrt(LATENT_DIM)
            for w in cfg.widths
        ]
        q, _ = np.linalg.qr(map_rng.standard_normal((LATENT_DIM, LATENT_DIM)))
        if cfg.regression:
            self.label_map = q[:, 0]
        else:
            self.label_map = q[:, : cfg.classes]
        self._rng = np.random.default_rng(sample_seed)
        self._next_id = 0
        self.t = -1  # becomes 0 on the first next_round
        self._z, self._x, self._y, self._ids = self._generate(cfg.n_init)

    def _generate(self, n: int):
        z = self._rng.standard_normal((n, LATENT_DIM))
        cols = []
        for mixer in self.mixers:
            feats = np.tanh(z @ mixer)
            if self.cfg.noise_std > 0:
                feats += self.cfg.noise_std * self._rng.standard_normal(feats.shape)
            cols.append(feats)
        x = np.concatenate(cols, axis=1)
        y = self.labels_from_latents(z)
        ids = np.arange(self._next_id, self._next_id + n, dtype=np.int64)
        self._next_id += n
        return z, x, y, ids

    def labels_from_latents(self, z) -> np.ndarray:
        """Re-evaluate the hidden label map (the generator-as-oracle)."""
        scores = np.asarray(z) @ self.label_map
        if self.cfg.regression:
            return scores
        return np.argmax(scores, axis=1).astype(np.int64)

    def _window_batch(self) -> RoundBatch:
        offsets = np.cumsum((0,) + self.cfg.widths)
        blocks = []
        for k in range(self.cfg.sensors):
            block = self._x[:, offsets[k] : offsets[k + 1]].copy()
            block.flags.writeable = False
            blocks.append(block)
        labels = self._y.copy()
        labels.flags.writeable = False
        return RoundBatch(self.t, blocks, labels, self._ids.copy(), self._z.copy())

    def draw_batch(self, n: int, rng: np.random.Generator) -> RoundBatch:
        """Fresh samples from the same latent map, outside the window.

        Used for held-out test batches; consumes only the caller's rng.
        """
        z = rng.standard_normal((n, LATENT_DIM))
        blocks = []
        for mixer in self.mixers:
            feats = np.tanh(z @ mixer)
            if self.cfg.noise_std > 0:
                feats += self.cfg.noise_std * rng.standard_normal(feats.shape)
            blocks.append(feats)
        y = self.labels_from_latents(z)
        ids = np.full(n, -1, dtype=np.int64)  # not part of the stream
        return RoundBatch(self.t, blocks, y, ids, z)


def make_stream(cfg: StreamConfig) -> StreamState:
    return StreamState(cfg)


def next_round(state: StreamState) -> RoundBatch:
    """Advance one round: collect n_new samples, apply the regime, return
    the current window."""
    cfg = state.cfg
    z, x, y, ids = state._generate(cfg.n_new)
    if cfg.regime == "sliding":
        keep = slice(cfg.n_new, None)
        state._z = np.concatenate([state._z[keep], z])
        state._x = np.concatenate([state._x[keep], x])
        state._y = np.concatenate([state._y[keep], y])
        state._ids = np.concatenate([state._ids[keep], ids])
    else:
        state._z = np.concatenate([state._z, z])
        state._x = np.concatenate([state._x, x])
        state._y = np.concatenate([state._y, y])
        state._ids = np.concatenate([state._ids, ids])
    state.t += 1
    return state._window_batch()


def batch_to_csv(batch: RoundBatch, path, widths=None) -> None:
    """Debug export: one row per sample (id, features by sensor, label)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id"]
        for k, block in enumerate(batch.blocks, start=1):
            header += [f"x{k}_{j}" for j in range(block.shape[1])]
        header.append("label")
        writer.writerow(header)
        for i in range(batch.window_size):
            row = [int(batch.ids[i])]
            for block in batch.blocks:
                row += [format(v, ".9g") for v in block[i]]
            label = batch.labels[i]
            row.append(int(label) if np.issubdtype(batch.labels.dtype, np.integer) else format(label, ".9g"))
            writer.writerow(row)
