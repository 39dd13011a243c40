import numpy as np
import pytest
import scipy.signal
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import clean_signal
from rvalue import (
    ConfigError,
    StftConfig,
    analytic_signal,
    dft,
    envelope_hilbert,
    envelope_stft,
    idft,
    stft,
)
from rvalue.errors import SignalError

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def dft_matrix_oracle(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ np.asarray(x, dtype=complex)


class TestDft:
    def test_impulse(self):
        np.testing.assert_allclose(dft([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)

    def test_tone_at_bin_three(self):
        n = np.arange(16)
        mags = np.abs(dft(np.exp(2j * np.pi * 3 * n / 16)))
        assert mags[3] == pytest.approx(16.0, abs=1e-12)
        assert np.max(np.delete(mags, 3)) < 1e-12

    @given(st.integers(1, 64).flatmap(lambda n: arrays(np.float64, n, elements=finite)))
    @settings(max_examples=60, deadline=None)
    def test_matches_direct_summation(self, x):
        np.testing.assert_allclose(dft(x), dft_matrix_oracle(x), atol=1e-9 * max(1.0, np.abs(x).sum()))

    @pytest.mark.parametrize("n", [4, 16, 200, 256, 1, 7, 97])
    def test_round_trip(self, n):
        rng = np.random.default_rng(n)
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        back = idft(dft(x))
        assert np.max(np.abs(back - x)) <= 1e-12 * np.max(np.abs(x))

    def test_idft_carries_one_over_n(self):
        np.testing.assert_allclose(idft(np.full(8, 8.0)), [8, 0, 0, 0, 0, 0, 0, 0], atol=1e-15)

    def test_empty(self):
        with pytest.raises(SignalError):
            dft([])


class TestAnalyticSignal:
    @pytest.mark.parametrize("n,k", [(200, 3), (200, 20), (64, 31), (63, 5)])
    def test_cosine_becomes_complex_exponential(self, n, k):
        t = np.arange(n)
        z = analytic_signal(np.cos(2 * np.pi * k * t / n))
        np.testing.assert_allclose(z, np.exp(2j * np.pi * k * t / n), atol=1e-12)
        np.testing.assert_allclose(envelope_hilbert(np.cos(2 * np.pi * k * t / n)).values, 1.0, atol=1e-12)

    @pytest.mark.parametrize("c", [2.5, -1.25])
    def test_constant_passes_through(self, c):
        z = analytic_signal(np.full(50, c))
        np.testing.assert_allclose(z, c, atol=1e-13)
        np.testing.assert_allclose(envelope_hilbert(np.full(50, c)).values, abs(c), atol=1e-13)

    @given(st.integers(2, 300).flatmap(lambda n: arrays(np.float64, n, elements=finite)))
    @settings(max_examples=60, deadline=None)
    def test_agrees_with_scipy(self, x):
        np.testing.assert_allclose(analytic_signal(x), scipy.signal.hilbert(x), atol=1e-9 * max(1.0, np.abs(x).max()))

    @given(st.integers(2, 300).flatmap(lambda n: arrays(np.float64, n, elements=finite)))
    @settings(max_examples=60, deadline=None)
    def test_real_part_is_input(self, x):
        np.testing.assert_allclose(analytic_signal(x).real, x, atol=1e-9 * max(1.0, np.abs(x).max()))

    @given(st.integers(4, 300).flatmap(lambda n: arrays(np.float64, n, elements=finite)))
    @settings(max_examples=60, deadline=None)
    def test_one_sided_spectrum(self, x):
        spec = np.abs(dft(analytic_signal(x)))
        n = len(x)
        negative = spec[n // 2 + 1 :]
        assert np.all(negative <= 1e-9 * max(spec.max(), 1.0))

    def test_too_short(self):
        with pytest.raises(SignalError):
            analytic_signal([1.0])

    def test_batch_rows_match_single(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 200))
        batch = analytic_signal(x)
        for row, z in zip(x, batch):
            np.testing.assert_allclose(analytic_signal(row), z, atol=1e-14)


class TestHilbertEnvelope:
    def test_dsb_closed_form(self, sample_times):
        _, s = clean_signal("DSB", freq=250.0)
        np.testing.assert_allclose(envelope_hilbert(s).values, np.abs(np.cos(2 * np.pi * 250 * sample_times)), atol=1e-9)

    def test_am_closed_form(self, sample_times):
        _, s = clean_signal("AM", freq=250.0, phase=1.1)
        want = 1.0 + np.cos(2 * np.pi * 250 * sample_times + 1.1)
        env = envelope_hilbert(s)
        assert env.source == "hilbert"
        assert len(env) == 200
        np.testing.assert_allclose(env.values, want, atol=1e-9)

    def test_zero_signal(self):
        np.testing.assert_array_equal(envelope_hilbert(np.zeros(32)).values, 0.0)

    @given(st.floats(0, 2 * np.pi), st.integers(1, 99))
    @settings(max_examples=40)
    def test_carrier_phase_invariance(self, phi, k):
        t = np.arange(200)
        base = envelope_hilbert(np.cos(2 * np.pi * k * t / 200)).values
        rotated = envelope_hilbert(np.cos(2 * np.pi * k * t / 200 + phi)).values
        assert np.max(np.abs(base - rotated)) < 1e-9


class TestStft:
    def test_constant_rectangular(self):
        cfg = StftConfig(window_len=16, hop=4, window_fn="rectangular")
        sp = stft(np.full(64, 0.5 + 0j), cfg)
        assert sp.bins.shape == (16, 13)
        np.testing.assert_allclose(np.abs(sp.bins[0]), 16 * 0.5, atol=1e-12)
        assert np.max(np.abs(sp.bins[1:])) < 1e-12

    def test_tone_orthogonality(self):
        cfg = StftConfig(window_len=32, hop=32, window_fn="rectangular")
        n = np.arange(128)
        sp = stft(np.exp(2j * np.pi * 5 * n / 32), cfg)
        mags = np.abs(sp.bins)
        np.testing.assert_allclose(mags[5], 32.0, atol=1e-12)
        assert np.max(np.delete(mags, 5, axis=0)) < 1e-11

    def test_hann_parseval(self):
        cfg = StftConfig(window_len=64, hop=16, window_fn="hann")
        rng = np.random.default_rng(8)
        z = rng.normal(size=200) + 1j * rng.normal(size=200)
        sp = stft(z, cfg)
        w = cfg.window()
        for t in range(sp.frames):
            frame = z[t * 16 : t * 16 + 64] * w
            assert np.sum(np.abs(sp.bins[:, t]) ** 2) == pytest.approx(64 * np.sum(np.abs(frame) ** 2), rel=1e-12)

    def test_hann_is_periodic(self):
        w = StftConfig(window_len=8, hop=8, window_fn="hann").window()
        np.testing.assert_allclose(w, [0, 0.14644660940672624, 0.5, 0.8535533905932737, 1, 0.8535533905932737, 0.5, 0.14644660940672624], atol=1e-15)

    @given(st.integers(1, 300), st.integers(1, 300), st.integers(1, 300))
    def test_frame_count_formula(self, n, w, h):
        if not (h <= w <= n):
            return
        cfg = StftConfig(window_len=w, hop=h, window_fn="rectangular")
        sp = stft(np.ones(n, dtype=complex), cfg)
        assert sp.frames == (n - w) // h + 1

    def test_default_framing_of_spec_config(self):
        assert StftConfig(window_len=64, hop=16, window_fn="hann").frame_count(200) == 9
        assert StftConfig().frame_count(200) == 1

    def test_shorter_than_window(self):
        with pytest.raises(SignalError):
            stft(np.ones(10, dtype=complex), StftConfig(window_len=16, hop=4))

    @pytest.mark.parametrize(
        "kwargs,field",
        [
            ({"window_len": 0}, "window_len"),
            ({"window_len": 16, "hop": 0}, "hop"),
            ({"window_len": 16, "hop": 17}, "hop"),
            ({"window_fn": "kaiser"}, "window_fn"),
            ({"aggregate": "max"}, "aggregate"),
        ],
    )
    def test_config_validation(self, kwargs, field):
        with pytest.raises(ConfigError) as info:
            StftConfig(**kwargs)
        assert info.value.field == field


class TestStftEnvelope:
    def test_frame_sum_of_constant(self):
        cfg = StftConfig(window_len=16, hop=8, window_fn="rectangular", aggregate="frame_sum")
        env = envelope_stft(np.full(64, -2.0), cfg)
        assert env.source == "stft"
        assert len(env) == 7
        np.testing.assert_allclose(env.values, 16 * 2.0, atol=1e-12)

    def test_cells_of_constant(self):
        cfg = StftConfig(window_len=16, hop=8, window_fn="rectangular", aggregate="cells")
        env = envelope_stft(np.full(64, 2.0), cfg)
        assert len(env) == 7 * 16
        cells = env.values.reshape(7, 16)
        np.testing.assert_allclose(cells[:, 0], 32.0, atol=1e-12)
        assert np.max(cells[:, 1:]) < 1e-12

    def test_cells_equal_spectrogram_magnitudes(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=200)
        cfg = StftConfig(window_len=64, hop=16, window_fn="hann")
        sp = stft(analytic_signal(x), cfg)
        np.testing.assert_allclose(envelope_stft(x, cfg).values, np.abs(sp.bins).T.ravel(), atol=1e-12)
        summed = envelope_stft(x, StftConfig(64, 16, "hann", "frame_sum")).values
        np.testing.assert_allclose(summed, np.abs(sp.bins).sum(axis=0), rtol=1e-12)

    @pytest.mark.parametrize(
        "cfg",
        [StftConfig(64, 16, "hann", "frame_sum"), StftConfig(aggregate="frame_sum"), StftConfig(32, 8, "rectangular", "frame_sum")],
    )
    def test_ssb_tone_frames_constant(self, cfg):
        _, s = clean_signal("SSB", freq=300.0, phase=0.4)
        vals = envelope_stft(s, cfg).values
        assert (vals.max() - vals.min()) / vals.mean() < 1e-6

    @given(
        st.integers(16, 120).flatmap(lambda n: arrays(np.float64, n, elements=finite)),
        st.sampled_from(["hann", "rectangular"]),
        st.sampled_from(["cells", "frame_sum"]),
    )
    @settings(max_examples=60, deadline=None)
    def test_nonnegative_and_finite(self, x, window, aggregate):
        cfg = StftConfig(window_len=16, hop=5, window_fn=window, aggregate=aggregate)
        vals = envelope_stft(x, cfg).values
        assert np.all(vals >= 0) and np.all(np.isfinite(vals))
        assert np.all(envelope_hilbert(x).values >= 0)
