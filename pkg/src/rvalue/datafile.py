"""Text file formats for datasets and per-record predictions.

Dataset file::

    #rvalue-dataset v1 {"carrier_freq_hz":1000.0,...}
    AM,250.0,1.2345,1234567890123,0.98,0.71,...

one record per line (``label,message_freq_hz,message_phase_rad,seed,s_0..s_{N-1}``)
with floats written as Python's shortest round-trip repr, so reading and
rewriting a file reproduces it byte for byte.
"""

import json

import numpy as np

from .errors import ConfigError, FormatError
from .siggen import GenConfig, ModulationClass, SignalRecord

DATASET_MAGIC = "#rvalue-dataset"
DATASET_VERSION = "v1"
PREDICTIONS_HEADER = "index,true_label,decision,r_value"


def _fmt(x):
    return repr(float(x))


def dataset_header(config):
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return f"{DATASET_MAGIC} {DATASET_VERSION} {blob}"


def format_record(record):
    head = f"{record.label.value},{_fmt(record.message_freq_hz)},{_fmt(record.message_phase_rad)},{record.seed}"
    return head + "," + ",".join(map(repr, record.samples.tolist()))


def write_dataset(records, path, config=None):
    """Write records to ``path``; returns the number written."""
    records = iter(records)
    first = next(records, None)
    if config is None:
        if first is None:
            raise ValueError("config is required when writing an empty dataset")
        config = first.config
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_header(config) + "\n")
        if first is not None:
            fh.write(format_record(first) + "\n")
            count = 1
        for rec in records:
            fh.write(format_record(rec) + "\n")
            count += 1
    return count


def parse_header(line):
    parts = line.rstrip("\n").split(" ", 2)
    if len(parts) != 3 or parts[0] != DATASET_MAGIC:
        raise FormatError("missing dataset header line")
    if parts[1] != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {parts[1]!r}")
    try:
        return GenConfig.from_dict(json.loads(parts[2]))
    except (json.JSONDecodeError, TypeError) as exc:
        raise FormatError(f"bad config in dataset header: {exc}") from exc
    except ConfigError as exc:
        raise FormatError(f"invalid config in dataset header: {exc}") from exc


def parse_record(line, config, lineno=0):
    fields = line.rstrip("\n").split(",")
    n = config.n_samples
    if len(fields) != 4 + n:
        raise FormatError(f"line {lineno}: expected {4 + n} fields, got {len(fields)}")
    try:
        return SignalRecord(
            label=ModulationClass(fields[0]),
            samples=np.array([float(t) for t in fields[4:]]),
            message_freq_hz=float(fields[1]),
            message_phase_rad=float(fields[2]),
            seed=int(fields[3]),
            config=config,
        )
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from exc


def iter_dataset(path):
    """Yield ``(config, record)`` pairs lazily from a dataset file."""
    with open(path, encoding="utf-8") as fh:
        config = parse_header(fh.readline())
        for lineno, line in enumerate(fh, start=2):
            if line.strip():
                yield config, parse_record(line, config, lineno)


def read_dataset(path):
    """Return ``(config, records)`` from a dataset file."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise FormatError(f"{path}: empty file")
        config = parse_header(header)
        records = [
            parse_record(line, config, lineno)
            for lineno, line in enumerate(fh, start=2)
            if line.strip()
        ]
    return config, records


def write_predictions(rows, path):
    """``rows`` are ``(index, true_label, decision, r_value)``; NaN R is written as ``nan``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PREDICTIONS_HEADER + "\n")
        for index, true_label, decision, r in rows:
            fh.write(f"{index},{true_label},{decision},{_fmt(r)}\n")


def read_predictions(path):
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != PREDICTIONS_HEADER:
            raise FormatError(f"{path}: missing predictions header")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields")
            try:
                rows.append((int(parts[0]), parts[1], parts[2], float(parts[3])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return rows
