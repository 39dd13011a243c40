"""Transforms behind the two envelope pipelines.

All array functions operate on the last axis, so a ``(records, samples)``
matrix is processed row by row with one call.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, SignalError

METHODS = ("hilbert", "stft")
WINDOWS = ("rectangular", "hann")
AGGREGATES = ("cells", "frame_sum")


def dft(values):
    """Unnormalized forward DFT, ``X[k] = sum_n x[n] exp(-2j*pi*k*n/N)``.

    Any length >= 1 is accepted (numpy's pocketfft handles composite and
    prime sizes without padding).
    """
    values = np.asarray(values)
    if values.shape[-1] < 1:
        raise SignalError("dft of an empty sequence")
    return np.fft.fft(values, axis=-1)


def idft(values):
    """Inverse of :func:`dft`, carrying the ``1/N`` factor."""
    values = np.asarray(values)
    if values.shape[-1] < 1:
        raise SignalError("idft of an empty sequence")
    return np.fft.ifft(values, axis=-1)


def _one_sided_weights(n):
    h = np.zeros(n)
    h[0] = 1.0
    if n % 2 == 0:
        h[n // 2] = 1.0
        h[1 : n // 2] = 2.0
    else:
        h[1 : (n + 1) // 2] = 2.0
    return h


def analytic_signal(signal):
    """Analytic signal ``s + j*H{s}`` built in the frequency domain.

    Negative-frequency bins are zeroed, strictly positive bins doubled, and
    DC (plus Nyquist for even lengths) kept as is. The real part of the
    result reproduces the input.

    Parameters
    ----------
    signal : array_like
        Real samples, shape ``(..., N)`` with ``N >= 2``.

    Returns
    -------
    numpy.ndarray
        Complex array of the same shape.
    """
    x = np.asarray(signal, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise SignalError(f"analytic signal needs at least 2 samples, got {n}")
    return idft(dft(x) * _one_sided_weights(n))


def hilbert_transform(signal):
    """Discrete (circular) Hilbert transform: the imaginary part of the analytic signal."""
    return analytic_signal(signal).imag


@dataclass(frozen=True)
class StftConfig:
    """Framing for the STFT pipeline.

    ``aggregate`` selects how the magnitude spectrogram becomes the envelope
    sequence fed to R: ``"cells"`` keeps every ``|X(f, t)|`` value (frame by
    frame), ``"frame_sum"`` sums over frequency to give one value per frame.
    """

    window_len: int = 200
    hop: int = 50
    window_fn: Literal["rectangular", "hann"] = "rectangular"
    aggregate: Literal["cells", "frame_sum"] = "cells"

    def __post_init__(self):
        if int(self.window_len) != self.window_len or self.window_len < 1:
            raise ConfigError("window_len", f"must be a positive integer, got {self.window_len}")
        if int(self.hop) != self.hop or not 1 <= self.hop <= self.window_len:
            raise ConfigError("hop", f"must satisfy 1 <= hop <= window_len, got {self.hop}")
        if self.window_fn not in WINDOWS:
            raise ConfigError("window_fn", f"must be one of {WINDOWS}, got {self.window_fn!r}")
        if self.aggregate not in AGGREGATES:
            raise ConfigError("aggregate", f"must be one of {AGGREGATES}, got {self.aggregate!r}")

    def frame_count(self, n):
        if n < self.window_len:
            raise SignalError(f"signal of {n} samples is shorter than window_len={self.window_len}")
        return (n - self.window_len) // self.hop + 1

    def window(self):
        if self.window_fn == "hann":
            # periodic Hann, the usual choice for spectral analysis
            k = np.arange(self.window_len)
            return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / self.window_len)
        return np.ones(self.window_len)

    def to_dict(self):
        return {
            "window_len": self.window_len,
            "hop": self.hop,
            "window_fn": self.window_fn,
            "aggregate": self.aggregate,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT matrix, frequency-major: ``bins[f, t]``."""

    bins: np.ndarray
    config: StftConfig

    @property
    def frames(self):
        return self.bins.shape[-1]


@dataclass(frozen=True)
class Envelope:
    values: np.ndarray
    source: Literal["hilbert", "stft"]

    def __len__(self):
        return self.values.shape[-1]


def _frames(x, config):
    n = x.shape[-1]
    count = config.frame_count(n)
    view = np.lib.stride_tricks.sliding_window_view(x, config.window_len, axis=-1)
    return view[..., : (count - 1) * config.hop + 1 : config.hop, :]


def stft_matrix(series, config):
    """STFT of ``(..., N)`` input as ``(..., frames, window_len)``, time-major.

    Frame ``i`` covers samples ``[i*hop, i*hop + window_len)``; a trailing
    partial frame is dropped rather than zero-padded.
    """
    x = np.asarray(series)
    return dft(_frames(x, config) * config.window())


def stft(series, config=StftConfig()):
    """Short-time Fourier transform of a 1-D (usually analytic) series."""
    x = np.asarray(series)
    if x.ndim != 1:
        raise SignalError("stft expects a 1-D series; use stft_matrix for batches")
    return Spectrogram(bins=stft_matrix(x, config).T.copy(), config=config)


def hilbert_magnitude(signal):
    """``|analytic_signal(signal)|`` along the last axis."""
    return np.abs(analytic_signal(signal))


def stft_magnitude(signal, config):
    """STFT-pipeline envelope values along the last axis (see :class:`StftConfig`)."""
    mags = np.abs(stft_matrix(analytic_signal(signal), config))
    if config.aggregate == "frame_sum":
        return mags.sum(axis=-1)
    return mags.reshape(mags.shape[:-2] + (-1,))


def envelope_hilbert(signal):
    """Instantaneous amplitude ``sqrt(s^2 + H{s}^2)`` of a real signal."""
    return Envelope(values=hilbert_magnitude(np.asarray(signal, dtype=float)), source="hilbert")


def envelope_stft(signal, config=StftConfig()):
    """Envelope from the magnitude STFT of the analytic signal.

    With ``aggregate="frame_sum"`` this is ``sum_f |X(f, t)|``, one value per
    frame. With ``"cells"`` every magnitude cell is kept, giving
    ``frames * window_len`` values ordered frame by frame.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise SignalError("envelope_stft expects a 1-D signal")
    return Envelope(values=stft_magnitude(x, config), source="stft")
