"""The R statistic: envelope variance over squared envelope mean."""

from dataclasses import dataclass

import numpy as np

from .dsp import METHODS, Envelope, StftConfig, hilbert_magnitude, stft_magnitude
from .errors import ConfigError, DegenerateSignalError, SignalError


def mean(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise SignalError("mean of an empty sequence")
    return float(v.mean())


def _centered_var(v):
    # shifting by the first sample makes constant input exactly zero
    d = v - v[..., :1]
    return d.var(axis=-1)


def variance(values):
    """Population variance (divides by n)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise SignalError("variance of an empty sequence")
    if v.size == 1:
        raise SignalError("variance needs at least 2 values")
    return float(_centered_var(v.ravel()))


@dataclass(frozen=True)
class RValue:
    value: float
    method: str
    n_points: int


def r_value(envelope):
    """R of an :class:`~rvalue.dsp.Envelope`.

    Raises
    ------
    DegenerateSignalError
        If the envelope mean is zero (an all-zero input signal).
    """
    a = np.asarray(envelope.values, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise SignalError(f"R needs a 1-D envelope of at least 2 points, got shape {a.shape}")
    mu = mean(a)
    if mu <= 0:
        raise DegenerateSignalError("envelope mean is zero; R is undefined")
    # normalizing first avoids mu**2 underflow for tiny envelopes
    return RValue(value=float(_centered_var(a / mu)), method=envelope.source, n_points=a.size)


def _samples(record):
    return record.samples if hasattr(record, "samples") else np.asarray(record, dtype=float)


def r_pipeline(record, method, stft_cfg=None):
    """R of a record (or raw samples) through the chosen envelope pipeline."""
    x = _samples(record)
    if method == "hilbert":
        env = Envelope(values=hilbert_magnitude(x), source="hilbert")
    elif method == "stft":
        env = Envelope(values=stft_magnitude(x, stft_cfg or StftConfig()), source="stft")
    else:
        raise ConfigError("method", f"must be one of {METHODS}, got {method!r}")
    return r_value(env)


def batch_r_values(samples, method, stft_cfg=None):
    """R for every row of a ``(records, N)`` sample matrix.

    Rows whose envelope mean is zero come back as NaN; callers decide how to
    report them.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise SignalError("batch_r_values expects a 2-D (records, samples) array")
    if method == "hilbert":
        env = hilbert_magnitude(x)
    elif method == "stft":
        env = stft_magnitude(x, stft_cfg or StftConfig())
    else:
        raise ConfigError("method", f"must be one of {METHODS}, got {method!r}")
    mu = env.mean(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = _centered_var(env / mu)
    return np.where(mu[..., 0] > 0, r, np.nan)
