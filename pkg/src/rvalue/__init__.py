"""Envelope R-value modulation classification for AM, DSB and SSB signals.

The R value of a signal is the variance of its amplitude envelope divided by
the squared mean. Two envelope pipelines are provided (analytic signal and
STFT of the analytic signal); per-class R intervals are calibrated from
labelled data and anything outside every interval is rejected as Unknown.
"""

from .classifier import (
    ClassInterval,
    Decision,
    ThresholdProfile,
    calibrate,
    classify_r,
    classify_record,
)
from .dsp import (
    Envelope,
    Spectrogram,
    StftConfig,
    analytic_signal,
    dft,
    envelope_hilbert,
    envelope_stft,
    idft,
    stft,
)
from .errors import (
    CalibrationError,
    ConfigError,
    FormatError,
    RValueError,
)
from .rstat import RValue, mean, r_pipeline, r_value, variance
from .siggen import (
    DatasetSpec,
    GenConfig,
    ModulationClass,
    SignalRecord,
    add_awgn,
    generate_dataset,
    generate_message,
    generate_record,
    modulate,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ClassInterval",
    "ConfigError",
    "DatasetSpec",
    "Decision",
    "Envelope",
    "FormatError",
    "GenConfig",
    "ModulationClass",
    "RValue",
    "RValueError",
    "SignalRecord",
    "Spectrogram",
    "StftConfig",
    "ThresholdProfile",
    "add_awgn",
    "analytic_signal",
    "calibrate",
    "classify_r",
    "classify_record",
    "dft",
    "envelope_hilbert",
    "envelope_stft",
    "generate_dataset",
    "generate_message",
    "generate_record",
    "idft",
    "mean",
    "modulate",
    "r_pipeline",
    "r_value",
    "stft",
    "variance",
]
