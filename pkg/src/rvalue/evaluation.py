"""Experiment harness: calibrate, classify, tabulate, time.

Everything here is deterministic given the dataset specs and configs except
the wall-clock fields of :class:`BenchReport`.
"""

import json
import time
import tracemalloc
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .classifier import OUTCOMES, ThresholdProfile, calibrate, decide_array
from .dsp import StftConfig, hilbert_magnitude, stft_magnitude
from .errors import ConfigError, FormatError, RValueError
from .rstat import batch_r_values
from .siggen import CLASSES, ModulationClass, generate_record, record_seeds

REPORT_FORMAT = "rvalue-eval-report"
REPORT_VERSION = 1
CLASS_NAMES = tuple(c.value for c in CLASSES)
MEMORY_METHOD = "tracemalloc peak over a separate untimed pass"


@dataclass
class ConfusionMatrix:
    """Rows are true classes (AM, DSB, SSB); columns are outcomes (AM, DSB, SSB, Unknown)."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((3, 4), dtype=np.int64))

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (3, 4):
            raise ValueError(f"confusion matrix must be 3x4, got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise ValueError("confusion counts must be nonnegative")

    def add(self, true_label, outcome, n=1):
        self.counts[ModulationClass(true_label).ordinal, OUTCOMES.index(outcome)] += n

    def merge(self, other):
        return ConfusionMatrix(self.counts + other.counts)

    @property
    def total(self):
        return int(self.counts.sum())

    def row_total(self, cls):
        return int(self.counts[ModulationClass(cls).ordinal].sum())

    def to_dict(self):
        return {"rows": list(CLASS_NAMES), "columns": list(OUTCOMES), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d):
        if d.get("rows") != list(CLASS_NAMES) or d.get("columns") != list(OUTCOMES):
            raise FormatError("confusion matrix rows/columns do not match AM, DSB, SSB, Unknown")
        return cls(np.array(d["counts"], dtype=np.int64))


def accuracy(cm, cls):
    """Percentage of ``cls`` records classified as ``cls``; Unknown counts as wrong."""
    i = ModulationClass(cls).ordinal
    row = cm.counts[i]
    if row.sum() < 1:
        raise RValueError(f"no test records for {ModulationClass(cls).value}")
    return 100.0 * row[i] / row.sum()


def overall(cm):
    total = cm.counts.sum()
    if total < 1:
        raise RValueError("confusion matrix is empty")
    return 100.0 * np.trace(cm.counts[:, :3]) / total


@dataclass(frozen=True)
class ClassRange:
    min: float
    max: float
    mean: float
    median: float
    count: int


@dataclass(frozen=True)
class RangeSummary:
    method: str
    classes: dict

    def __getitem__(self, cls):
        return self.classes[ModulationClass(cls).value]

    def to_dict(self):
        return {
            "method": self.method,
            "classes": {k: vars(v).copy() for k, v in self.classes.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            method=d["method"],
            classes={k: ClassRange(**v) for k, v in d["classes"].items()},
        )


def summarize_ranges(r_values, method):
    """Order statistics and mean of R per class."""
    out = {}
    for key, values in r_values.items():
        name = ModulationClass(key).value
        v = np.asarray(values, dtype=float)
        v = v[np.isfinite(v)]
        if v.size < 2:
            raise RValueError(f"{name}: need at least 2 finite R values, got {v.size}")
        out[name] = ClassRange(
            min=float(v.min()),
            max=float(v.max()),
            mean=float(v.mean()),
            median=float(np.median(v)),
            count=int(v.size),
        )
    return RangeSummary(method=method, classes={n: out[n] for n in CLASS_NAMES if n in out})


@dataclass(frozen=True)
class MethodTiming:
    total_s: float
    per_signal_s: float
    count: int
    peak_memory_bytes: Optional[int] = None


@dataclass(frozen=True)
class BenchReport:
    timings: dict
    memory_method: Optional[str] = None

    def to_dict(self):
        return {
            "memory_method": self.memory_method,
            "methods": {k: vars(v).copy() for k, v in self.timings.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            timings={k: MethodTiming(**v) for k, v in d["methods"].items()},
            memory_method=d.get("memory_method"),
        )


@dataclass
class ExperimentResult:
    profile: ThresholdProfile
    confusion: ConfusionMatrix
    ranges: RangeSummary
    bench: BenchReport
    test_ranges: Optional[RangeSummary] = None
    stft_config: Optional[StftConfig] = None


def _chunks(n, size):
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def batch_r(samples, method, stft_cfg=None, threads=1, chunk=2048):
    """R for every row of ``samples``, fanned out over ``threads`` in fixed-size chunks."""
    x = np.asarray(samples, dtype=float)
    spans = _chunks(x.shape[0], chunk)
    work = lambda span: batch_r_values(x[span[0] : span[1]], method, stft_cfg)
    if threads <= 1 or len(spans) == 1:
        parts = [work(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, spans))
    return np.concatenate(parts) if parts else np.empty(0)


def classify_batch(samples, profile, stft_cfg=None, threads=1):
    """Decide every row; returns ``(outcomes, r_values)``. Zero-mean rows become Unknown."""
    r = batch_r(samples, profile.method, stft_cfg, threads)
    outcomes = np.array(OUTCOMES)[decide_array(r, profile)].tolist()
    return outcomes, r


def stack_samples(records):
    return np.stack([rec.samples for rec in records]) if records else np.empty((0, 0))


def _generate(jobs, config, threads):
    if threads <= 1:
        return [generate_record(label, seed, config) for label, seed in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: generate_record(j[0], j[1], config), jobs))


def labelled_r(spec, method, stft_cfg=None, threads=1, chunk=10000):
    """R values per class for a generated dataset, without keeping the records."""
    jobs = record_seeds(spec)
    out = {c.value: [] for c in CLASSES}
    for lo, hi in _chunks(len(jobs), chunk):
        recs = _generate(jobs[lo:hi], spec.config, threads)
        r = batch_r(stack_samples(recs), method, stft_cfg, threads)
        for rec, v in zip(recs, r.tolist()):
            out[rec.label.value].append(v)
    return {k: np.array(v) for k, v in out.items()}


def _peak_memory(fn):
    tracemalloc.start()
    try:
        fn()
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def run_experiment(
    train_spec,
    test_spec,
    method,
    stft_cfg=None,
    margin=0.0,
    threads=1,
    chunk=10000,
    measure_memory=False,
):
    """Calibrate on ``train_spec``, classify ``test_spec``, and time the classification.

    Only envelope extraction, R and the interval decision are inside the
    timer; signal generation is not.
    """
    if train_spec.master_seed == test_spec.master_seed:
        raise ConfigError("master_seed", "train and test datasets must use different seeds")
    if method == "stft":
        stft_cfg = stft_cfg or StftConfig()
    train_r = labelled_r(train_spec, method, stft_cfg, threads, chunk)
    profile = calibrate(train_r, method, margin, train_spec.config, stft_cfg)
    ranges = summarize_ranges(train_r, method)

    cm = ConfusionMatrix()
    test_r = {c.value: [] for c in CLASSES}
    elapsed = 0.0
    peak = None
    jobs = record_seeds(test_spec)
    for lo, hi in _chunks(len(jobs), chunk):
        recs = _generate(jobs[lo:hi], test_spec.config, threads)
        samples = stack_samples(recs)
        t0 = time.perf_counter()
        outcomes, r = classify_batch(samples, profile, stft_cfg, threads)
        elapsed += time.perf_counter() - t0
        if measure_memory and peak is None:
            peak = _peak_memory(lambda: classify_batch(samples, profile, stft_cfg, threads))
        for rec, outcome, v in zip(recs, outcomes, r.tolist()):
            cm.add(rec.label, outcome)
            test_r[rec.label.value].append(v)
    n = len(jobs)
    bench = BenchReport(
        timings={method: MethodTiming(elapsed, elapsed / n, n, peak)},
        memory_method=MEMORY_METHOD if measure_memory else None,
    )
    return ExperimentResult(
        profile=profile,
        confusion=cm,
        ranges=ranges,
        bench=bench,
        test_ranges=summarize_ranges(test_r, method),
        stft_config=stft_cfg if method == "stft" else None,
    )


def bench(spec, methods=("hilbert", "stft"), stft_cfg=None, threads=1, repeats=3, measure_memory=False):
    """Time each pipeline on the same freshly generated dataset.

    Each method's profile is calibrated on the dataset itself outside the
    timer; the timed stage is envelope + R + decision over all records. The
    reported time is the fastest of ``repeats`` full passes.
    """
    stft_cfg = stft_cfg or StftConfig()
    records = _generate(record_seeds(spec), spec.config, threads)
    samples = stack_samples(records)
    labels = [rec.label.value for rec in records]
    timings = {}
    for method in methods:
        r = batch_r(samples, method, stft_cfg, threads)
        per_class = {c: r[[lab == c for lab in labels]] for c in CLASS_NAMES}
        profile = calibrate(per_class, method, 0.0, spec.config, stft_cfg)
        best = float("inf")
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            classify_batch(samples, profile, stft_cfg, threads)
            best = min(best, time.perf_counter() - t0)
        peak = None
        if measure_memory:
            peak = _peak_memory(lambda: classify_batch(samples, profile, stft_cfg, threads))
        timings[method] = MethodTiming(best, best / len(records), len(records), peak)
    return BenchReport(timings=timings, memory_method=MEMORY_METHOD if measure_memory else None)


def build_report(confusion, method=None, profile=None, ranges=None, test_ranges=None, bench=None, stft_config=None):
    acc = {c: accuracy(confusion, c) for c in CLASS_NAMES if confusion.row_total(c) > 0}
    acc["overall"] = overall(confusion)
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "method": method,
        "confusion": confusion.to_dict(),
        "accuracy_percent": acc,
        "profile": profile.to_dict() if profile else None,
        "stft_config": stft_config.to_dict() if stft_config else None,
        "train_ranges": ranges.to_dict() if ranges else None,
        "test_ranges": test_ranges.to_dict() if test_ranges else None,
        "timing": bench.to_dict() if bench else None,
    }


def write_report(report, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc


def export_report(result, path):
    """Write an :class:`ExperimentResult` as a versioned JSON report."""
    report = build_report(
        result.confusion,
        method=result.profile.method,
        profile=result.profile,
        ranges=result.ranges,
        test_ranges=result.test_ranges,
        bench=result.bench,
        stft_config=result.stft_config,
    )
    write_report(report, path)
    return report


def read_report(path):
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if report.get("format") != REPORT_FORMAT or report.get("version") != REPORT_VERSION:
        raise FormatError(f"{path}: not a version {REPORT_VERSION} evaluation report")
    return report


def load_confusion(path):
    return ConfusionMatrix.from_dict(read_report(path)["confusion"])


def envelope_trace(record, method, stft_cfg=None):
    """``(time_s, envelope)`` columns for plotting.

    The STFT trace is always the per-frame magnitude sum, stamped at the
    frame centre, whatever aggregation the classifier uses.
    """
    fs = record.config.sample_rate_hz
    if method == "hilbert":
        env = hilbert_magnitude(record.samples)
        t = np.arange(env.size) / fs
    elif method == "stft":
        cfg = replace(stft_cfg or StftConfig(), aggregate="frame_sum")
        env = stft_magnitude(record.samples, cfg)
        t = (np.arange(env.size) * cfg.hop + cfg.window_len / 2) / fs
    else:
        raise ConfigError("method", f"unknown method {method!r}")
    return np.column_stack((t, env))


def export_envelope_trace(record, method, path, stft_cfg=None):
    data = envelope_trace(record, method, stft_cfg)
    header = f"method={method} label={record.label.value} seed={record.seed} " f"message_freq_hz={record.message_freq_hz!r}"
    if method == "stft":
        cfg = stft_cfg or StftConfig()
        header += f" window_len={cfg.window_len} hop={cfg.hop} window={cfg.window_fn}"
    header += "\ntime_s envelope"
    try:
        np.savetxt(path, data, fmt="%.17g", header=header)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write trace to {path}: {exc.strerror}") from exc
    return data
