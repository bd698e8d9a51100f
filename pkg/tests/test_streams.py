"""Synthetic stream generator tests."""

import numpy as np
import pytest

from daovfl.errors import ConfigError
from daovfl.streams import StreamConfig, batch_to_csv, make_stream, next_round


def small_cfg(**kw):
    defaults = dict(sensors=3, widths=(4, 5, 3), classes=3, n_init=100,
                    n_new=10, regime="sliding", noise_std=0.05, seed=7)
    defaults.update(kw)
    return StreamConfig(**defaults)


class TestConfig:
    def test_width_count_mismatch(self):
        with pytest.raises(ConfigError):
            small_cfg(widths=(4, 5))

    def test_bad_regime(self):
        with pytest.raises(ConfigError):
            small_cfg(regime="batch")

    def test_window_bounds(self):
        with pytest.raises(ConfigError):
            small_cfg(n_init=5, n_new=10)

    def test_total_width(self):
        assert small_cfg().total_width == 12


class TestGeneration:
    def test_partition_property(self):
        state = make_stream(small_cfg())
        batch = next_round(state)
        assert sum(b.shape[1] for b in batch.blocks) == 12

    def test_determinism(self):
        a = make_stream(small_cfg())
        b = make_stream(small_cfg())
        ba, bb = next_round(a), next_round(b)
        for x, y in zip(ba.blocks, bb.blocks):
            np.testing.assert_array_equal(x, y)
        np.testing.assert_array_equal(ba.labels, bb.labels)

    def test_label_replay(self):
        state = make_stream(small_cfg())
        batch = next_round(state)
        np.testing.assert_array_equal(
            state.labels_from_latents(batch.latents), batch.labels
        )

    def test_row_alignment(self):
        # every row's blocks came from the same latent draw
        state = make_stream(small_cfg(noise_std=0.0))
        batch = next_round(state)
        for k, mixer in enumerate(state.mixers):
            np.testing.assert_allclose(
                batch.blocks[k], np.tanh(batch.latents @ mixer), atol=1e-12
            )


class TestRegimes:
    def test_sliding_window_size(self):
        state = make_stream(small_cfg(n_init=100, n_new=10))
        for _ in range(5):
            batch = next_round(state)
        assert batch.window_size == 100

    def test_incremental_growth(self):
        state = make_stream(small_cfg(regime="incremental", n_init=100, n_new=10))
        for _ in range(5):
            batch = next_round(state)
        assert batch.window_size == 150

    def test_sliding_fifo(self):
        state = make_stream(small_cfg(n_init=50, n_new=10))
        first = next_round(state)
        second = next_round(state)
        # oldest n_new ids evicted, ids stay sorted
        assert second.ids[0] == first.ids[10]
        assert np.all(np.diff(second.ids) > 0)

    def test_replays_identical(self):
        runs = []
        for _ in range(2):
            state = make_stream(small_cfg())
            runs.append([next_round(state).labels.copy() for _ in range(4)])
        for x, y in zip(*runs):
            np.testing.assert_array_equal(x, y)


class TestDistribution:
    def test_class_balance(self):
        cfg = small_cfg(classes=4, n_init=10_000, n_new=10, seed=3)
        state = make_stream(cfg)
        counts = np.bincount(state._y, minlength=4)
        assert np.all(np.abs(counts / 10_000 - 0.25) <= 0.05)

    def test_regression_targets(self):
        state = make_stream(small_cfg(classes=0))
        batch = next_round(state)
        assert batch.labels.dtype == np.float64
        assert abs(batch.labels.mean()) < 0.5


class TestHeldOut:
    def test_draw_batch_uses_caller_rng(self):
        state = make_stream(small_cfg())
        rng1 = np.random.default_rng(11)
        rng2 = np.random.default_rng(11)
        b1 = state.draw_batch(32, rng1)
        b2 = state.draw_batch(32, rng2)
        np.testing.assert_array_equal(b1.blocks[0], b2.blocks[0])

    def test_draw_batch_does_not_advance_stream(self):
        a = make_stream(small_cfg())
        b = make_stream(small_cfg())
        a.draw_batch(32, np.random.default_rng(0))
        np.testing.assert_array_equal(next_round(a).labels, next_round(b).labels)


class TestCsvExport:
    def test_round_trip_shape(self, tmp_path):
        state = make_stream(small_cfg(n_init=20, n_new=5))
        batch = next_round(state)
        path = tmp_path / "batch.csv"
        batch_to_csv(batch, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + batch.window_size
        assert lines[0].startswith("id,x1_0")
        assert lines[0].endswith("label")
