"""Interval thresholds on R with an Unknown rejection outcome."""

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dsp import METHODS, StftConfig
from .errors import (
    CalibrationError,
    ConfigError,
    DegenerateSignalError,
    FormatError,
    MethodMismatchError,
)
from .rstat import RValue, r_pipeline
from .siggen import CLASSES, ModulationClass, config_digest

UNKNOWN = "Unknown"
OUTCOMES = tuple(c.value for c in CLASSES) + (UNKNOWN,)
MIN_CALIBRATION_SAMPLES = 10
PROFILE_FORMAT = "rvalue-threshold-profile"
PROFILE_VERSION = 1


class DigestMismatchWarning(UserWarning):
    """A record's generation/STFT config differs from the profile's calibration config."""


@dataclass(frozen=True)
class ClassInterval:
    cls: ModulationClass
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise CalibrationError(f"invalid interval for {self.cls.value}: [{self.lo}, {self.hi}]")

    @property
    def midpoint(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, r):
        return self.lo <= r <= self.hi


@dataclass(frozen=True)
class ThresholdProfile:
    method: str
    intervals: tuple
    margin: float = 0.0
    gen_config_digest: Optional[str] = None
    calibration_count: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {METHODS}, got {self.method!r}")
        if [iv.cls for iv in self.intervals] != list(CLASSES):
            raise CalibrationError("profile needs exactly one interval per class, in AM, DSB, SSB order")

    def interval(self, cls):
        return self.intervals[ModulationClass(cls).ordinal]

    def to_dict(self):
        return {
            "format": PROFILE_FORMAT,
            "version": PROFILE_VERSION,
            "method": self.method,
            "margin": self.margin,
            "calibration_count": {c.value: self.calibration_count.get(c.value, 0) for c in CLASSES},
            "gen_config_digest": self.gen_config_digest,
            "intervals": [{"class": iv.cls.value, "lo": iv.lo, "hi": iv.hi} for iv in self.intervals],
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != PROFILE_FORMAT:
            raise FormatError(f"not a threshold profile (format={d.get('format')!r})")
        if d.get("version") != PROFILE_VERSION:
            raise FormatError(f"unsupported profile version {d.get('version')!r}")
        try:
            intervals = tuple(
                ClassInterval(ModulationClass(iv["class"]), float(iv["lo"]), float(iv["hi"]))
                for iv in d["intervals"]
            )
            return cls(
                method=d["method"],
                intervals=intervals,
                margin=float(d["margin"]),
                gen_config_digest=d.get("gen_config_digest"),
                calibration_count=dict(d.get("calibration_count", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed threshold profile: {exc}") from exc

    @classmethod
    def loads(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"threshold profile is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


@dataclass(frozen=True)
class Decision:
    outcome: str
    r: Optional[RValue]
    matched: int
    diagnostic: Optional[str] = None


def calibrate(r_samples, method, margin=0.0, gen_config=None, stft_config=None):
    """Per-class ``[min, max]`` of training R values, widened so the width grows by ``margin * width``.

    Parameters
    ----------
    r_samples : mapping
        Class (or class name) to a sequence of R values computed with ``method``.
    method : {"hilbert", "stft"}
    margin : float
        Fractional widening; 0.5 on ``[0.43, 0.49]`` gives ``[0.415, 0.505]``.
    gen_config, stft_config : optional
        Recorded in the profile as a digest so later mismatches can be flagged.
    """
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {METHODS}, got {method!r}")
    if not (math.isfinite(margin) and margin >= 0):
        raise ConfigError("margin", f"must be nonnegative, got {margin}")
    by_class = {ModulationClass(k): v for k, v in r_samples.items()}
    intervals, counts = [], {}
    for cls in CLASSES:
        values = np.asarray(by_class.get(cls, ()), dtype=float)
        if values.size < MIN_CALIBRATION_SAMPLES:
            raise CalibrationError(
                f"{cls.value}: need at least {MIN_CALIBRATION_SAMPLES} R samples, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise CalibrationError(f"{cls.value}: calibration R values must be finite")
        lo, hi = float(values.min()), float(values.max())
        if lo == hi and margin == 0:
            raise CalibrationError(f"{cls.value}: all R values equal {lo}; interval is degenerate")
        # total widening is margin * width, half on each side
        pad = 0.5 * margin * (hi - lo)
        intervals.append(ClassInterval(cls, lo - pad, hi + pad))
        counts[cls.value] = int(values.size)
    digest = None
    if gen_config is not None:
        digest = config_digest(gen_config, stft_config if method == "stft" else None)
    return ThresholdProfile(
        method=method,
        intervals=tuple(intervals),
        margin=float(margin),
        gen_config_digest=digest,
        calibration_count=counts,
    )


def decide(value, profile):
    """Outcome name and match count for a bare R value."""
    hits = [iv for iv in profile.intervals if iv.contains(value)]
    if not hits:
        return UNKNOWN, 0
    if len(hits) == 1:
        return hits[0].cls.value, 1
    # min() keeps the first of equal distances, i.e. AM < DSB < SSB
    best = min(hits, key=lambda iv: abs(value - iv.midpoint))
    return best.cls.value, len(hits)


def decide_array(values, profile):
    """Vectorized :func:`decide`: outcome indices into ``OUTCOMES``.

    NaN never falls inside an interval, so it maps to Unknown.
    """
    v = np.asarray(values, dtype=float)[..., None]
    lo = np.array([iv.lo for iv in profile.intervals])
    hi = np.array([iv.hi for iv in profile.intervals])
    mid = np.array([iv.midpoint for iv in profile.intervals])
    inside = (v >= lo) & (v <= hi)
    with np.errstate(invalid="ignore"):
        dist = np.where(inside, np.abs(v - mid), np.inf)
    # argmin returns the first minimum, matching the AM < DSB < SSB tie order
    idx = np.argmin(dist, axis=-1)
    return np.where(inside.any(axis=-1), idx, OUTCOMES.index(UNKNOWN))


def classify_r(r, profile):
    """Map an :class:`~rvalue.rstat.RValue` to AM, DSB, SSB or Unknown."""
    if r.method != profile.method:
        raise MethodMismatchError(f"R computed with {r.method!r}, profile is for {profile.method!r}")
    outcome, matched = decide(r.value, profile)
    return Decision(outcome=outcome, r=r, matched=matched)


def check_digest(profile, gen_config, stft_config=None):
    """Warn when ``gen_config``/``stft_config`` differ from the profile's calibration setup."""
    if profile.gen_config_digest is None or gen_config is None:
        return True
    digest = config_digest(gen_config, stft_config if profile.method == "stft" else None)
    if digest != profile.gen_config_digest:
        warnings.warn(
            f"config digest {digest} differs from profile digest {profile.gen_config_digest}; "
            "R thresholds may not apply",
            DigestMismatchWarning,
            stacklevel=3,
        )
        return False
    return True


def classify_record(record, profile, stft_cfg=None):
    """R pipeline followed by :func:`classify_r`.

    Accepts a :class:`~rvalue.siggen.SignalRecord` or bare samples. An
    all-zero signal yields ``Unknown`` with a diagnostic instead of raising.
    """
    stft_cfg = stft_cfg or StftConfig()
    if hasattr(record, "config"):
        check_digest(profile, record.config, stft_cfg)
    try:
        r = r_pipeline(record, profile.method, stft_cfg)
    except DegenerateSignalError as exc:
        return Decision(outcome=UNKNOWN, r=None, matched=0, diagnostic=str(exc))
    return classify_r(r, profile)
