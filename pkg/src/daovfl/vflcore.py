"""The online vertical federated learning protocol engine.

One global round: every sensor extracts an embedding from its feature
block, uploads it through the (possibly noisy) channel, the server
denoises (mode-dependent), assembles the model representation (head
snapshot plus all embedding blocks), and distributes it; each block then
performs its own number of local gradient iterations against the frozen
snapshot and inherits the result into the next round.

The engine also keeps the per-round loss ledger used for regret
accounting, and optional probes that estimate the gradient-gap constants
appearing in the regret bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from daovfl import envsim, serialize
from daovfl.channel import ChannelSpec, calibrate_clip, transmit
from daovfl.denoiser import DaeModel, DaePair, dae_train_round, denoise, make_dae
from daovfl.envsim import EnvDraw, EnvParams, RewardWeights
from daovfl.errors import (
    ConfigError,
    DimensionError,
    NumericError,
    ProtocolError,
    StateError,
)
from daovfl.numkit import (
    DenseNet,
    GradBundle,
    dense_net,
    mlp_backward,
    mlp_forward,
    mse_loss,
    ogd_step,
    softmax_xent,
)
from daovfl.streams import RoundBatch, StreamConfig, StreamState, make_stream, next_round

NOISE_MODES = ("NE", "NI", "DAO-NR")


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ModelSpec:
    """Desk-scale architecture knobs shared by all sensors."""

    emb_width: int = 8
    extractor_hidden: tuple = (16,)
    head_hidden: tuple = ()
    activation: str = "tanh"
    emb_gain: float = 1.0  # scales the extractor output layer's init


@dataclass
class GlobalModel:
    """Server head plus one feature extractor per sensor."""

    head: DenseNet
    features: list[DenseNet]
    eta: float

    def __post_init__(self):
        emb_total = sum(f.out_width for f in self.features)
        if self.head.in_width != emb_total:
            raise DimensionError(
                f"head input {self.head.in_width} != total embedding width {emb_total}"
            )

    @property
    def sensors(self) -> int:
        return len(self.features)

    @property
    def param_count(self) -> int:
        return self.head.param_count + sum(f.param_count for f in self.features)

    @property
    def emb_offsets(self) -> list[int]:
        out = [0]
        for f in self.features:
            out.append(out[-1] + f.out_width)
        return out

    def copy(self) -> "GlobalModel":
        return GlobalModel(self.head.copy(), [f.copy() for f in self.features], self.eta)


def init_models(stream_cfg: StreamConfig, spec: ModelSpec, eta: float,
                rng: np.random.Generator) -> GlobalModel:
    out_width = stream_cfg.classes if stream_cfg.classes else 1
    features = []
    for width in stream_cfg.widths:
        widths = [width, *spec.extractor_hidden, spec.emb_width]
        net = dense_net(widths, spec.activation, rng)
        if spec.emb_gain != 1.0:
            net.layers[-1].weight *= spec.emb_gain
        features.append(net)
    head_widths = [spec.emb_width * stream_cfg.sensors, *spec.head_hidden, out_width]
    head_acts = [spec.activation] * (len(head_widths) - 2) + ["linear"]
    head = dense_net(head_widths, head_acts, rng)
    return GlobalModel(head, features, eta)


def zero_model_like(model: GlobalModel) -> GlobalModel:
    out = model.copy()
    for net in [out.head, *out.features]:
        for layer in net.layers:
            layer.weight[:] = 0.0
            layer.bias[:] = 0.0
    return out


# ---------------------------------------------------------------------------
# losses and evaluation


def loss_and_grad(output: np.ndarray, labels: np.ndarray, task: str):
    if task == "classification":
        return softmax_xent(output, labels)
    return mse_loss(output, np.asarray(labels, dtype=float).reshape(-1, 1))


def accuracy_of(output: np.ndarray, labels: np.ndarray, task: str) -> float:
    """Fraction correct, or 1 - normalized RMSE clipped to [0, 1]."""
    if task == "classification":
        return float(np.mean(np.argmax(output, axis=1) == labels))
    targets = np.asarray(labels, dtype=float).reshape(-1, 1)
    rmse = float(np.sqrt(np.mean((output - targets) ** 2)))
    scale = float(np.std(targets)) + 1e-12
    return float(np.clip(1.0 - rmse / scale, 0.0, 1.0))


def extract_embedding(extractor: DenseNet, block) -> np.ndarray:
    """Final activation of the sensor's local feature model."""
    return mlp_forward(extractor, block)[-1]


def model_forward(model: GlobalModel, blocks) -> tuple[list, np.ndarray]:
    embs = [extract_embedding(f, b) for f, b in zip(model.features, blocks)]
    out = mlp_forward(model.head, np.concatenate(embs, axis=1))[-1]
    return embs, out


def evaluate(model: GlobalModel, blocks, labels, task: str) -> tuple[float, float]:
    _, out = model_forward(model, blocks)
    loss, _ = loss_and_grad(out, labels, task)
    return loss, accuracy_of(out, labels, task)


# ---------------------------------------------------------------------------
# model representation


@dataclass
class ModelRepresentation:
    """Round-start broadcast: head snapshot plus all embedding blocks.

    Immutable once distributed; ``without(k)`` is the reduced view each
    block updates against (k = 0 drops the head copy).
    """

    head_copy: DenseNet | None
    embeddings: list  # K entries; an entry is None only in reduced views

    @property
    def sensors(self) -> int:
        return len(self.embeddings)

    def without(self, k: int) -> "ModelRepresentation":
        if not 0 <= k <= self.sensors:
            raise ProtocolError(f"block index {k} outside [0, {self.sensors}]")
        if k == 0:
            return ModelRepresentation(None, list(self.embeddings))
        reduced = list(self.embeddings)
        reduced[k - 1] = None
        return ModelRepresentation(self.head_copy, reduced)

    def present_blocks(self) -> list[str]:
        out = [] if self.head_copy is None else ["head"]
        out += [str(k + 1) for k, e in enumerate(self.embeddings) if e is not None]
        return out


def assemble_representation(head: DenseNet, embeddings) -> ModelRepresentation:
    embeddings = list(embeddings)
    if any(e is None for e in embeddings):
        raise ProtocolError("cannot assemble a representation with missing blocks")
    frozen = []
    for e in embeddings:
        e = np.asarray(e)
        e.flags.writeable = False
        frozen.append(e)
    return ModelRepresentation(head.copy(), frozen)


# ---------------------------------------------------------------------------
# block-coordinate local updates


def _head_input(embeddings, own_k: int | None = None, own_emb=None) -> np.ndarray:
    cols = []
    for j, e in enumerate(embeddings, start=1):
        if own_k is not None and j == own_k:
            cols.append(own_emb)
        else:
            if e is None:
                raise ProtocolError(f"embedding block {j} missing from representation")
            cols.append(e)
    return np.concatenate(cols, axis=1)


def sensor_local_update(extractor: DenseNet, rep: ModelRepresentation, k: int,
                        block, labels, iterations: int, eta: float, task: str,
                        collect_grads: GradBundle | None = None):
    """Run sensor k's local iterations against the frozen representation.

    At each iteration the sensor recomputes its own embedding while every
    other block and the head snapshot stay at their round-start values;
    the gradient flows through the frozen head into the extractor.
    Returns (updated extractor, per-iteration losses).
    """
    if iterations < 1:
        raise ProtocolError(f"local iterations must be >= 1, got {iterations}")
    if rep.head_copy is None:
        raise ProtocolError("sensor update needs the head snapshot in its view")
    if rep.embeddings[k - 1] is not None:
        raise ProtocolError(f"representation still contains sensor {k}'s own block")
    head = rep.head_copy
    offsets = np.cumsum([0] + [
        e.shape[1] if e is not None else extractor.out_width for e in rep.embeddings
    ])
    lo, hi = offsets[k - 1], offsets[k - 1] + extractor.out_width
    losses = []
    for _ in range(iterations):
        acts = mlp_forward(extractor, block)
        head_in = _head_input(rep.embeddings, own_k=k, own_emb=acts[-1])
        head_acts = mlp_forward(head, head_in)
        loss, grad_out = loss_and_grad(head_acts[-1], labels, task)
        losses.append(loss)
        _, d_head_in = mlp_backward(head, head_acts, grad_out)
        grads, _ = mlp_backward(extractor, acts, d_head_in[:, lo:hi])
        if collect_grads is not None:
            collect_grads.add(grads)
        extractor = ogd_step(extractor, grads, eta)
    return extractor, losses


def head_local_update(head: DenseNet, rep: ModelRepresentation, labels,
                      iterations: int, eta: float, task: str,
                      collect_grads: GradBundle | None = None):
    """Run the server's local iterations with every embedding frozen."""
    if iterations < 1:
        raise ProtocolError(f"local iterations must be >= 1, got {iterations}")
    head_in = _head_input(rep.embeddings)
    losses = []
    for _ in range(iterations):
        acts = mlp_forward(head, head_in)
        loss, grad_out = loss_and_grad(acts[-1], labels, task)
        losses.append(loss)
        grads, _ = mlp_backward(head, acts, grad_out)
        if collect_grads is not None:
            collect_grads.add(grads)
        head = ogd_step(head, grads, eta)
    return head, losses


def stacked_gradients(model: GlobalModel, rep: ModelRepresentation, blocks,
                      labels, iteration_row, task: str) -> np.ndarray:
    """Per-block local-iteration gradient sums, flattened head-first.

    This is the round's stacked update direction: block j's entry is the
    sum over its local iterations of its partial gradient with all other
    blocks frozen at the given representation.
    """
    e_row = np.asarray(iteration_row, dtype=int)
    e_head = int(e_row.max())
    parts = []
    acc = GradBundle.zeros_like(model.head)
    head_local_update(model.head, rep, labels, e_head, model.eta, task, collect_grads=acc)
    parts.append(acc.flat())
    for k in range(1, model.sensors + 1):
        acc = GradBundle.zeros_like(model.features[k - 1])
        sensor_local_update(
            model.features[k - 1], rep.without(k), k, blocks[k - 1], labels,
            int(e_row[k - 1]), model.eta, task, collect_grads=acc,
        )
        parts.append(acc.flat())
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# regret ledger and theory probe


@dataclass
class RegretLedger:
    online: list = field(default_factory=list)
    comparator: list = field(default_factory=list)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.array(self.online) - np.array(self.comparator))

    @property
    def regret(self) -> float:
        return float(self.cumulative[-1]) if self.online else 0.0


def regret_update(ledger: RegretLedger, online_loss: float, comparator_loss: float) -> RegretLedger:
    if not (np.isfinite(online_loss) and np.isfinite(comparator_loss)):
        raise NumericError("regret inputs must be finite")
    ledger.online.append(float(online_loss))
    ledger.comparator.append(float(comparator_loss))
    return ledger


@dataclass
class TheoryProbe:
    """Empirical stand-ins for the gradient-gap and iteration constants.

    ``beta_noisy`` / ``beta_denoised`` are running maxima of the
    per-coordinate gap between the round's stacked gradients computed
    from clean embeddings and from noisy / denoised ones.  The remaining
    bound constants (Lipschitz, smoothness, and the parameter range) are
    not estimated; the fields exist for documentation only.
    """

    beta_noisy: float = 0.0
    beta_denoised: float = 0.0
    e_max: int = 0
    e_min: int = 0
    rounds_probed: int = 0
    lipschitz: float | None = None
    smoothness: float | None = None
    param_range: float | None = None

    def observe_iterations(self, iteration_row) -> None:
        row = np.asarray(iteration_row, dtype=int)
        self.e_max = int(max(self.e_max, row.max()))
        self.e_min = int(row.min()) if self.e_min == 0 else int(min(self.e_min, row.min()))

    def observe_gaps(self, gap_noisy: float, gap_denoised: float | None) -> None:
        self.beta_noisy = max(self.beta_noisy, float(gap_noisy))
        if gap_denoised is not None:
            self.beta_denoised = max(self.beta_denoised, float(gap_denoised))
        self.rounds_probed += 1


# ---------------------------------------------------------------------------
# engine


@dataclass
class EngineConfig:
    noise_mode: str = "NE"
    t_dl: int = 40  # denoising learning period, rounds
    eta: float = 0.01
    n_test: int = 512
    dae_passes: int = 4  # DAE optimization passes per round within t_dl
    dae_hidden: int = 16
    dae_latent: int = 8
    probe: bool = False
    track_history: bool = True

    def __post_init__(self):
        if self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"noise mode must be one of {NOISE_MODES}")
        if self.eta <= 0:
            raise ConfigError("eta must be positive")
        if self.t_dl < 0 or self.dae_passes < 1 or self.n_test < 1:
            raise ConfigError("t_dl >= 0, dae_passes >= 1, n_test >= 1 required")


@dataclass
class RoundMetrics:
    t: int
    train_loss: float
    test_loss: float
    test_acc: float
    latency: float
    disparity: float
    reward: float
    iteration_row: np.ndarray

    def finite(self) -> bool:
        vals = [self.train_loss, self.test_loss, self.test_acc,
                self.latency, self.disparity, self.reward]
        return bool(np.all(np.isfinite(vals)))


class VflEngine:
    """Owns the stream, the models, the channel, and the round loop."""

    def __init__(self, stream: StreamState, model: GlobalModel,
                 channel_spec: ChannelSpec, cfg: EngineConfig,
                 env_params: EnvParams, reward_weights: RewardWeights,
                 rng_env: np.random.Generator, rng_test: np.random.Generator,
                 rng_dae: np.random.Generator):
        self.stream = stream
        self.model = model
        self.channel_spec = channel_spec
        self.cfg = cfg
        self.env_params = env_params
        self.reward_weights = reward_weights
        self.rng_env = rng_env
        self.rng_test = rng_test
        self.task = "regression" if stream.cfg.regression else "classification"
        self.mu = envsim.draw_mu(env_params, rng_env)
        self.t = 0
        self._calibration_round = channel_spec.kind != "identity" and channel_spec.clip is None
        self.ledger = RegretLedger()
        self.history: list[RoundBatch] = []
        self.metrics: list[RoundMetrics] = []
        self.probe = TheoryProbe() if cfg.probe else None
        if cfg.noise_mode == "DAO-NR":
            self.daes = [
                make_dae(f.out_width, cfg.t_dl * cfg.dae_passes, rng_dae,
                         hidden=cfg.dae_hidden, latent=cfg.dae_latent)
                for f in model.features
            ]
        else:
            self.daes = None

    # -- environment interface ------------------------------------------

    def next_env(self) -> EnvDraw:
        """Draw the round's gains and CPU frequencies (state precursors)."""
        return envsim.draw_round(self.env_params, self.model.sensors, self.mu, self.rng_env)

    # -- round execution --------------------------------------------------

    def _uplink(self, clean_embs) -> list[np.ndarray]:
        if self.channel_spec.kind == "identity":
            return list(clean_embs)
        if self.channel_spec.clip is None:
            # first round doubles as clip calibration under identity uplink
            clip = calibrate_clip(clean_embs)
            self.channel_spec = ChannelSpec(self.channel_spec.kind,
                                            self.channel_spec.levels, clip)
            self._calibration_round = True
            return list(clean_embs)
        self._calibration_round = False
        return [transmit(self.channel_spec, e) for e in clean_embs]

    def _server_embeddings(self, clean_embs, sent_embs) -> list[np.ndarray]:
        """What enters the model representation, by noise mode and period."""
        if self.cfg.noise_mode == "NE":
            return list(clean_embs)
        if self.cfg.noise_mode == "NI":
            return list(sent_embs)
        # DAO-NR: train on pairs during the learning period (clean targets
        # exist only then), deploy the frozen DAEs afterwards
        if self.t < self.cfg.t_dl:
            for dae, noisy, clean in zip(self.daes, sent_embs, clean_embs):
                pair = DaePair(noisy, clean)
                for _ in range(self.cfg.dae_passes):
                    dae_train_round(dae, pair)
            return list(clean_embs)
        return [denoise(dae, noisy) for dae, noisy in zip(self.daes, sent_embs)]

    def run_round(self, iteration_row, draw: EnvDraw | None = None) -> RoundMetrics:
        e_row = np.asarray(iteration_row, dtype=int)
        if e_row.shape != (self.model.sensors,) or e_row.min() < 1:
            raise ProtocolError(f"bad iteration row {iteration_row}")
        if draw is None:
            draw = self.next_env()
        batch = next_round(self.stream)
        if self.cfg.track_history:
            self.history.append(batch)

        clean_embs = [
            extract_embedding(f, b) for f, b in zip(self.model.features, batch.blocks)
        ]
        head_out = mlp_forward(self.model.head, np.concatenate(clean_embs, axis=1))[-1]
        train_loss, _ = loss_and_grad(head_out, batch.labels, self.task)

        sent_embs = self._uplink(clean_embs)
        used_embs = self._server_embeddings(clean_embs, sent_embs)
        rep = assemble_representation(self.model.head, used_embs)

        if self.probe is not None:
            self._probe_round(rep, batch, clean_embs, sent_embs, e_row)

        e_head = int(e_row.max())
        new_head, _ = head_local_update(
            self.model.head, rep, batch.labels, e_head, self.model.eta, self.task)
        new_features = []
        for k in range(1, self.model.sensors + 1):
            updated, _ = sensor_local_update(
                self.model.features[k - 1], rep.without(k), k, batch.blocks[k - 1],
                batch.labels, int(e_row[k - 1]), self.model.eta, self.task)
            new_features.append(updated)
        self.model = GlobalModel(new_head, new_features, self.model.eta)

        # model quality is measured channel-free, like the loss it optimizes
        test = self.stream.draw_batch(self.cfg.n_test, self.rng_test)
        test_loss, test_acc = evaluate(self.model, test.blocks, test.labels, self.task)

        latency = envsim.round_latency(self.env_params, draw, e_row)
        disp = envsim.disparity(e_row)
        rew = envsim.reward(self.reward_weights, test_acc, latency, disp)

        metrics = RoundMetrics(self.t, train_loss, test_loss, test_acc,
                               latency, disp, rew, e_row.copy())
        if not metrics.finite() or not self._models_finite():
            raise NumericError(f"numeric divergence at round {self.t}")
        self.metrics.append(metrics)
        self.ledger.online.append(train_loss)
        self.t += 1
        return metrics

    def _models_finite(self) -> bool:
        for net in [self.model.head, *self.model.features]:
            for layer in net.layers:
                if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                    return False
        return True

    def _probe_round(self, rep, batch, clean_embs, sent_embs, e_row) -> None:
        self.probe.observe_iterations(e_row)
        daes_ready = self.daes is not None and all(d.frozen for d in self.daes)
        if self.cfg.noise_mode == "DAO-NR" and self.t < self.cfg.t_dl:
            return  # gaps are compared once the denoisers are deployed
        clean_rep = assemble_representation(self.model.head, clean_embs)
        g_clean = stacked_gradients(self.model, clean_rep, batch.blocks,
                                    batch.labels, e_row, self.task)
        noisy_rep = assemble_representation(self.model.head, sent_embs)
        g_noisy = stacked_gradients(self.model, noisy_rep, batch.blocks,
                                    batch.labels, e_row, self.task)
        gap_noisy = float(np.max(np.abs(g_noisy - g_clean)))
        gap_den = None
        if daes_ready:
            den_embs = [denoise(d, e) for d, e in zip(self.daes, sent_embs)]
            den_rep = assemble_representation(self.model.head, den_embs)
            g_den = stacked_gradients(self.model, den_rep, batch.blocks,
                                      batch.labels, e_row, self.task)
            gap_den = float(np.max(np.abs(g_den - g_clean)))
        self.probe.observe_gaps(gap_noisy, gap_den)

    # -- regret ----------------------------------------------------------

    def finalize_regret(self, rng: np.random.Generator,
                        epochs: int = 200) -> RegretLedger:
        """Fit the hindsight comparator and fill the ledger."""
        if not self.history:
            raise StateError("no rounds executed; nothing to compare against")
        comp_losses, _ = hindsight_loss(
            self.history, self.stream.cfg, spec_of_model(self.model), self.task,
            self.model.eta, rng, epochs=epochs, extra_candidates=[self.model],
        )
        ledger = RegretLedger()
        for online, comp in zip(self.ledger.online, comp_losses):
            regret_update(ledger, online, comp)
        self.ledger = ledger
        return ledger


def spec_of_model(model: GlobalModel) -> ModelSpec:
    """Recover the architecture knobs used to build `model`."""
    f0 = model.features[0]
    return ModelSpec(
        emb_width=f0.out_width,
        extractor_hidden=tuple(l.weight.shape[1] for l in f0.layers[:-1]),
        head_hidden=tuple(l.weight.shape[1] for l in model.head.layers[:-1]),
        activation=f0.layers[0].activation,
    )


# ---------------------------------------------------------------------------
# hindsight comparator


def _joint_gradient(model: GlobalModel, blocks, labels, task):
    """One full joint gradient of the loss through every block."""
    acts_per_sensor = [mlp_forward(f, b) for f, b in zip(model.features, blocks)]
    head_in = np.concatenate([a[-1] for a in acts_per_sensor], axis=1)
    head_acts = mlp_forward(model.head, head_in)
    loss, grad_out = loss_and_grad(head_acts[-1], labels, task)
    head_grads, d_head_in = mlp_backward(model.head, head_acts, grad_out)
    offsets = model.emb_offsets
    feature_grads = []
    for k, acts in enumerate(acts_per_sensor):
        upstream = d_head_in[:, offsets[k]:offsets[k + 1]]
        grads, _ = mlp_backward(model.features[k], acts, upstream)
        feature_grads.append(grads)
    return loss, head_grads, feature_grads


def _train_offline(model: GlobalModel, blocks, labels, task, eta, epochs,
                   patience: int = 10):
    """Full-gradient training with learning-rate halving on plateau."""
    best = np.inf
    stall = 0
    for _ in range(epochs):
        loss, head_grads, feature_grads = _joint_gradient(model, blocks, labels, task)
        if loss < best - 1e-12:
            best = loss
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                eta *= 0.5
                stall = 0
        new_head = ogd_step(model.head, head_grads, eta)
        new_features = [ogd_step(f, g, eta) for f, g in zip(model.features, feature_grads)]
        model = GlobalModel(new_head, new_features, model.eta)
    return model


def _union_dataset(history):
    """Distinct samples across all round windows, keyed by sample id."""
    seen = {}
    for batch in history:
        for i, sid in enumerate(batch.ids):
            if sid not in seen:
                seen[sid] = (tuple(b[i] for b in batch.blocks), batch.labels[i])
    rows = list(seen.values())
    k = len(history[0].blocks)
    blocks = [np.array([r[0][j] for r in rows]) for j in range(k)]
    labels = np.array([r[1] for r in rows])
    return blocks, labels


def hindsight_loss(history, stream_cfg: StreamConfig, spec: ModelSpec, task: str,
                   eta: float, rng: np.random.Generator, epochs: int = 200,
                   extra_candidates=()):
    """Approximate the best fixed model in hindsight and score it per round.

    The returned comparator is the cumulative-loss argmin over the
    offline-trained model and a probe set: every extra candidate (e.g.
    the final online model), the zero model, and models retrained on
    single rounds.  Its cumulative loss therefore lower-bounds them all.
    """
    if not history:
        raise StateError("empty history")
    union_blocks, union_labels = _union_dataset(history)

    candidates = []
    trained = _train_offline(
        init_models(stream_cfg, spec, eta, rng), union_blocks, union_labels,
        task, eta, epochs,
    )
    candidates.append(trained)
    candidates.extend(c.copy() for c in extra_candidates)
    candidates.append(zero_model_like(trained))
    probe_rounds = sorted({0, len(history) // 2, len(history) - 1})
    for r in probe_rounds:
        candidates.append(_train_offline(
            init_models(stream_cfg, spec, eta, rng), history[r].blocks,
            history[r].labels, task, eta, epochs,
        ))

    per_round = []
    for cand in candidates:
        losses = [
            loss_and_grad(model_forward(cand, b.blocks)[1], b.labels, task)[0]
            for b in history
        ]
        per_round.append(losses)
    totals = [float(np.sum(l)) for l in per_round]
    best = int(np.argmin(totals))
    return per_round[best], candidates[best]


# ---------------------------------------------------------------------------
# checkpointing


def save_checkpoint(engine: VflEngine, path) -> None:
    """All model weights plus the loss ledger, with a JSON manifest."""
    path = Path(path)
    arrays = serialize.net_arrays(engine.model.head, "head")
    for k, f in enumerate(engine.model.features, start=1):
        arrays.update(serialize.net_arrays(f, f"feature.{k}"))
    if engine.daes is not None:
        for k, dae in enumerate(engine.daes, start=1):
            arrays.update(serialize.net_arrays(dae.encoder, f"dae.{k}.enc"))
            arrays.update(serialize.net_arrays(dae.decoder, f"dae.{k}.dec"))
    arrays["ledger.online"] = np.asarray(engine.ledger.online)
    arrays["ledger.comparator"] = np.asarray(engine.ledger.comparator)
    serialize.write_arrays(path, arrays)
    manifest = {
        "round": engine.t,
        "noise_mode": engine.cfg.noise_mode,
        "eta": engine.model.eta,
        "head_activations": serialize.net_manifest(engine.model.head),
        "feature_activations": [serialize.net_manifest(f) for f in engine.model.features],
        "param_count": engine.model.param_count,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(manifest, indent=2))


def load_model(path, eta: float | None = None) -> GlobalModel:
    path = Path(path)
    arrays = serialize.read_arrays(path)
    manifest = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    head = serialize.net_from_arrays(arrays, "head", manifest["head_activations"])
    features = []
    for k, acts in enumerate(manifest["feature_activations"], start=1):
        features.append(serialize.net_from_arrays(arrays, f"feature.{k}", acts))
    return GlobalModel(head, features, eta if eta is not None else manifest["eta"])
