"""DAE training and inference tests."""

import numpy as np
import pytest

from daovfl.channel import ChannelSpec, calibrate_clip, transmit
from daovfl.denoiser import (
    DaeModel,
    DaePair,
    dae_train_round,
    denoise,
    load_dae,
    make_dae,
    save_dae,
)
from daovfl.errors import DimensionError, StateError
from daovfl.numkit import dense_net, mlp_forward
from daovfl.streams import StreamConfig, make_stream, next_round


def embedding_stream(seed=0, width=8):
    """Rounds of (clean embedding) matrices like the engine produces."""
    rng = np.random.default_rng(seed)
    state = make_stream(StreamConfig(seed=seed))
    extractor = dense_net([8, 16, width], "tanh", rng)
    while True:
        batch = next_round(state)
        yield mlp_forward(extractor, batch.blocks[0])[-1]


class TestPair:
    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            DaePair(np.zeros((2, 3)), np.zeros((2, 4)))


class TestTraining:
    def test_identity_pairs_converge(self):
        # training loss after 50 passes drops below 10% of the initial loss
        rng = np.random.default_rng(1)
        stream = embedding_stream(seed=1)
        emb = next(stream)
        dae = make_dae(8, period=50, rng=rng)
        losses = [dae_train_round(dae, DaePair(emb, emb)) for _ in range(50)]
        assert losses[-1] < 0.1 * losses[0]

    def test_frozen_rejects_training(self):
        rng = np.random.default_rng(2)
        dae = make_dae(4, period=1, rng=rng)
        pair = DaePair(np.zeros((2, 4)), np.zeros((2, 4)))
        dae_train_round(dae, pair)
        assert dae.frozen
        with pytest.raises(StateError):
            dae_train_round(dae, pair)

    def test_width_mismatch(self):
        rng = np.random.default_rng(3)
        dae = make_dae(4, period=10, rng=rng)
        with pytest.raises(DimensionError):
            dae_train_round(dae, DaePair(np.zeros((2, 5)), np.zeros((2, 5))))

    def test_smoothed_loss_non_increasing(self):
        rng = np.random.default_rng(4)
        stream = embedding_stream(seed=4)
        clean0 = next(stream)
        spec = ChannelSpec(kind="quantizer", levels=8, clip=calibrate_clip([clean0]))
        dae = make_dae(8, period=200, rng=rng)
        losses = []
        for _ in range(50):
            clean = next(stream)
            noisy = transmit(spec, clean)
            for _ in range(4):
                losses.append(dae_train_round(dae, DaePair(noisy, clean)))
        smooth = np.convolve(losses, np.ones(5) / 5, mode="valid")
        assert np.all(np.diff(smooth) <= 1e-3)  # jitter allowed, divergence not

    def test_beats_quantizer_noise_after_period(self):
        # denoising period of 40 rounds, 4 passes each, quantizer L=8
        rng = np.random.default_rng(5)
        state = make_stream(StreamConfig(seed=5))
        extractor = dense_net([8, 16, 8], "tanh", rng)
        first = mlp_forward(extractor, next_round(state).blocks[0])[-1]
        spec = ChannelSpec(kind="quantizer", levels=8, clip=calibrate_clip([first]))
        dae = make_dae(8, period=40 * 4, rng=rng)
        for _ in range(40):
            clean = mlp_forward(extractor, next_round(state).blocks[0])[-1]
            noisy = transmit(spec, clean)
            for _ in range(4):
                dae_train_round(dae, DaePair(noisy, clean))
        assert dae.frozen
        held = state.draw_batch(512, np.random.default_rng(55))
        clean = mlp_forward(extractor, held.blocks[0])[-1]
        noisy = transmit(spec, clean)
        rec = denoise(dae, noisy)
        assert np.mean((rec - clean) ** 2) < np.mean((noisy - clean) ** 2)

    def test_identity_channel_reconstruction_floor(self):
        # noisy == clean: a trained DAE reconstructs below 1e-2 MSE
        rng = np.random.default_rng(6)
        stream = embedding_stream(seed=6)
        dae = make_dae(8, period=200, rng=rng)
        for _ in range(200):
            emb = next(stream)
            dae_train_round(dae, DaePair(emb, emb))
        held = next(stream)
        assert np.mean((denoise(dae, held) - held) ** 2) < 1e-2


class TestInference:
    def test_untrained_output_finite_and_shaped(self):
        rng = np.random.default_rng(7)
        dae = make_dae(6, period=10, rng=rng)
        out = denoise(dae, rng.standard_normal((9, 6)))
        assert out.shape == (9, 6)
        assert np.all(np.isfinite(out))

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        dae = make_dae(5, period=10, rng=rng)
        x = rng.standard_normal((4, 5))
        np.testing.assert_array_equal(denoise(dae, x), denoise(dae, x))

    def test_inference_read_only(self):
        rng = np.random.default_rng(9)
        dae = make_dae(5, period=10, rng=rng)
        before = [l.weight.copy() for l in dae.encoder.layers + dae.decoder.layers]
        denoise(dae, rng.standard_normal((4, 5)))
        after = [l.weight for l in dae.encoder.layers + dae.decoder.layers]
        for b, a in zip(before, after):
            np.testing.assert_array_equal(b, a)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(10)
        dae = make_dae(5, period=10, rng=rng)
        with pytest.raises(DimensionError):
            denoise(dae, np.zeros((2, 4)))


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        dae = make_dae(7, period=20, rng=rng)
        x = rng.standard_normal((3, 7))
        dae_train_round(dae, DaePair(x, x))
        path = tmp_path / "dae.bin"
        save_dae(dae, path)
        loaded = load_dae(path)
        assert loaded.trained_rounds == 1
        assert loaded.period == 20
        np.testing.assert_array_equal(denoise(loaded, x), denoise(dae, x))
