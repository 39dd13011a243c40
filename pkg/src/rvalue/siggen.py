"""Deterministic synthesis of labelled AM, DSB and SSB test signals.

Randomness comes from a counter-based SplitMix64 stream so that every record
is a pure function of ``(label, seed, config)`` and can be produced in any
order or on any worker.

Per-record stream layout (``u_k`` is the k-th uniform in [0, 1)):

* ``u_0`` picks the message frequency,
* ``u_1`` picks the message phase (``2*pi*u_1``),
* ``u_2, u_3, ...`` are consumed in pairs by Box-Muller for the noise:
  ``r = sqrt(-2 ln(1 - u_a))``, ``z0 = r cos(2 pi u_b)``, ``z1 = r sin(2 pi u_b)``.
"""

import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dsp import hilbert_transform
from .errors import ConfigError, SignalError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class ModulationClass(str, enum.Enum):
    AM = "AM"
    DSB = "DSB"
    SSB = "SSB"

    @property
    def ordinal(self):
        return _ORDINALS[self]


_ORDINALS = {ModulationClass.AM: 0, ModulationClass.DSB: 1, ModulationClass.SSB: 2}
CLASSES = tuple(ModulationClass)


def _mix64(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def splitmix64(x):
    """One SplitMix64 step from state ``x`` (advance by the golden gamma, then finalize)."""
    return _mix64((x + GOLDEN_GAMMA) & MASK64)


def stable_mix(master_seed, class_ordinal, index):
    """Per-record seed derived from the dataset seed, class ordinal and index."""
    h = splitmix64(master_seed & MASK64)
    h = splitmix64(h ^ class_ordinal)
    return splitmix64(h ^ index)


def uniform_stream(seed, count):
    """First ``count`` uniforms in [0, 1) of the SplitMix64 stream for ``seed``.

    Output ``k`` is ``mix64(seed + (k + 1) * gamma)``, top 53 bits scaled by
    ``2**-53``; this is exactly the sequential SplitMix64 generator.
    """
    k = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + k * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def box_muller(uniforms):
    """Standard normals from an even-length array of uniforms in [0, 1)."""
    u = np.asarray(uniforms, dtype=float).reshape(-1, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    return np.column_stack((r * np.cos(theta), r * np.sin(theta))).ravel()


@dataclass(frozen=True)
class GenConfig:
    """Signal generation parameters.

    With ``integer_cycles`` set, message frequencies are drawn from the
    multiples of ``1/duration_s`` inside ``message_freq_range_hz`` so every
    message completes a whole number of periods per record; otherwise they
    are drawn from the continuous range.
    """

    carrier_freq_hz: float = 1000.0
    sample_rate_hz: float = 10000.0
    duration_s: float = 0.020
    noise_power: float = 0.01
    mod_index: float = 1.0
    message_freq_range_hz: tuple = (100.0, 400.0)
    message_amplitude: float = 1.0
    ssb_sideband: str = "upper"
    integer_cycles: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "message_freq_range_hz", tuple(float(v) for v in self.message_freq_range_hz)
        )
        self.validate()

    def validate(self):
        fs = self.sample_rate_hz
        if not (math.isfinite(fs) and fs > 0):
            raise ConfigError("sample_rate_hz", f"must be positive, got {fs}")
        if not (0 < self.carrier_freq_hz < fs / 2):
            raise ConfigError(
                "carrier_freq_hz", f"must lie in (0, {fs / 2}), got {self.carrier_freq_hz}"
            )
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            raise ConfigError("duration_s", f"must be positive, got {self.duration_s}")
        exact = self.duration_s * fs
        if abs(exact - round(exact)) > 1e-6 * max(1.0, exact) or round(exact) < 16:
            raise ConfigError(
                "duration_s",
                f"duration_s * sample_rate_hz must be an integer >= 16, got {exact}",
            )
        if not (math.isfinite(self.noise_power) and self.noise_power >= 0):
            raise ConfigError("noise_power", f"must be nonnegative, got {self.noise_power}")
        if not (0 < self.mod_index <= 1):
            raise ConfigError("mod_index", f"must lie in (0, 1], got {self.mod_index}")
        if len(self.message_freq_range_hz) != 2:
            raise ConfigError("message_freq_range_hz", "must be a (low, high) pair")
        lo, hi = self.message_freq_range_hz
        if not (0 < lo <= hi < self.carrier_freq_hz):
            raise ConfigError(
                "message_freq_range_hz",
                f"need 0 < low <= high < carrier_freq_hz, got ({lo}, {hi})",
            )
        if not (math.isfinite(self.message_amplitude) and self.message_amplitude > 0):
            raise ConfigError(
                "message_amplitude", f"must be positive, got {self.message_amplitude}"
            )
        if self.ssb_sideband not in ("upper", "lower"):
            raise ConfigError("ssb_sideband", f"must be 'upper' or 'lower', got {self.ssb_sideband!r}")
        if self.integer_cycles and self.cycle_choices().size == 0:
            raise ConfigError(
                "message_freq_range_hz",
                f"contains no multiple of 1/duration_s = {1 / self.duration_s} Hz",
            )

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.sample_rate_hz))

    def cycle_choices(self):
        """Whole-cycle counts whose frequency lies in the message range."""
        lo, hi = self.message_freq_range_hz
        n, fs = self.n_samples, self.sample_rate_hz
        k_lo = math.ceil(lo * n / fs - 1e-9)
        k_hi = math.floor(hi * n / fs + 1e-9)
        return np.arange(max(k_lo, 1), k_hi + 1)

    def to_dict(self):
        d = asdict(self)
        d["message_freq_range_hz"] = list(self.message_freq_range_hz)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def digest(self):
        return config_digest(self)


def config_digest(gen_config, stft_config=None):
    """Short content hash binding a profile to the configs it was calibrated under."""
    payload = {"gen": gen_config.to_dict()}
    if stft_config is not None:
        payload["stft"] = stft_config.to_dict()
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SignalRecord:
    label: ModulationClass
    samples: np.ndarray = field(repr=False)
    message_freq_hz: float
    message_phase_rad: float
    seed: int
    config: GenConfig

    def __eq__(self, other):
        if not isinstance(other, SignalRecord):
            return NotImplemented
        return (
            self.label == other.label
            and self.message_freq_hz == other.message_freq_hz
            and self.message_phase_rad == other.message_phase_rad
            and self.seed == other.seed
            and self.config == other.config
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class DatasetSpec:
    counts_per_class: int
    master_seed: int
    config: GenConfig = GenConfig()

    def __post_init__(self):
        if int(self.counts_per_class) != self.counts_per_class or self.counts_per_class < 1:
            raise ConfigError("counts_per_class", f"must be >= 1, got {self.counts_per_class}")
        if not 0 <= self.master_seed <= MASK64:
            raise ConfigError("master_seed", "must be a 64-bit unsigned integer")

    @property
    def total(self):
        return 3 * self.counts_per_class


def generate_message(freq_hz, phase_rad, amplitude, n, sample_rate_hz):
    """``amplitude * cos(2*pi*freq_hz*k/fs + phase)`` for ``k = 0..n-1``."""
    if n < 1:
        raise SignalError(f"message length must be >= 1, got {n}")
    if not (0 < freq_hz < sample_rate_hz / 2):
        raise ConfigError("freq_hz", f"must lie in (0, {sample_rate_hz / 2}), got {freq_hz}")
    k = np.arange(n)
    return amplitude * np.cos(2.0 * np.pi * freq_hz * k / sample_rate_hz + phase_rad)


def modulate(label, message, config):
    """Place a real message on the carrier as AM, DSB or phasing-method SSB."""
    label = ModulationClass(label)
    x = np.asarray(message, dtype=float)
    n = config.n_samples
    if x.shape != (n,):
        raise SignalError(f"message has {x.shape[-1] if x.ndim else 0} samples, config needs {n}")
    wt = 2.0 * np.pi * config.carrier_freq_hz * np.arange(n) / config.sample_rate_hz
    if label is ModulationClass.AM:
        return (1.0 + config.mod_index * x) * np.cos(wt)
    if label is ModulationClass.DSB:
        return x * np.cos(wt)
    xh = hilbert_transform(x)
    sign = -1.0 if config.ssb_sideband == "upper" else 1.0
    return x * np.cos(wt) + sign * xh * np.sin(wt)


def add_awgn(signal, noise_power, rng_stream):
    """Add white Gaussian noise of variance ``noise_power``.

    ``rng_stream`` is either an integer seed (noise drawn by Box-Muller from
    its :func:`uniform_stream`) or an array of standard normal draws at
    least as long as ``signal``.
    """
    s = np.asarray(signal, dtype=float)
    if noise_power < 0:
        raise ConfigError("noise_power", f"must be nonnegative, got {noise_power}")
    if noise_power == 0:
        return s.copy()
    if isinstance(rng_stream, (int, np.integer)):
        n = s.shape[-1]
        z = box_muller(uniform_stream(int(rng_stream), n + n % 2))[:n]
    else:
        z = np.asarray(rng_stream, dtype=float)[: s.shape[-1]]
    return s + math.sqrt(noise_power) * z


def generate_record(label, seed, config=GenConfig()):
    """Build one record; a pure function of ``(label, seed, config)``."""
    label = ModulationClass(label)
    n = config.n_samples
    u = uniform_stream(seed, 2 + n + n % 2)
    if config.integer_cycles:
        choices = config.cycle_choices()
        cycles = int(choices[min(int(u[0] * choices.size), choices.size - 1)])
        freq = cycles * config.sample_rate_hz / n
    else:
        lo, hi = config.message_freq_range_hz
        freq = lo + u[0] * (hi - lo)
    phase = 2.0 * np.pi * u[1]
    x = generate_message(freq, phase, config.message_amplitude, n, config.sample_rate_hz)
    clean = modulate(label, x, config)
    noisy = add_awgn(clean, config.noise_power, box_muller(u[2:])[:n])
    return SignalRecord(
        label=label,
        samples=noisy,
        message_freq_hz=float(freq),
        message_phase_rad=float(phase),
        seed=seed,
        config=config,
    )


def record_seeds(spec):
    """``(label, seed)`` pairs in class-major, index-minor order."""
    return [
        (cls, stable_mix(spec.master_seed, cls.ordinal, i))
        for cls in CLASSES
        for i in range(spec.counts_per_class)
    ]


def generate_dataset(spec, threads=1):
    """All ``3 * counts_per_class`` records of ``spec``, class-major.

    The output does not depend on ``threads``.
    """
    jobs = record_seeds(spec)
    if threads <= 1:
        return [generate_record(label, seed, spec.config) for label, seed in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: generate_record(j[0], j[1], spec.config), jobs))
