"""Command-line entry point: ``rvalue <command> [options]``.

Exit codes: 0 success, 1 usage or invalid configuration, 2 I/O or file
format error, 3 calibration failure.

Settings are resolved as built-in defaults, then ``--config FILE`` (a JSON
object whose keys are the long option names with underscores, plus any
generation field such as ``carrier_freq_hz``), then explicit flags.
"""

import argparse
import json
import logging
import sys
import warnings
from dataclasses import fields

from . import __version__
from .classifier import OUTCOMES, ThresholdProfile, calibrate, check_digest
from .datafile import read_dataset, read_predictions, write_dataset, write_predictions
from .dsp import AGGREGATES, METHODS, WINDOWS, StftConfig
from .errors import CalibrationError, ConfigError, FormatError
from .evaluation import (
    CLASS_NAMES,
    ConfusionMatrix,
    batch_r,
    bench,
    build_report,
    classify_batch,
    export_envelope_trace,
    export_report,
    run_experiment,
    stack_samples,
    write_report,
)
from .siggen import DatasetSpec, GenConfig, ModulationClass, generate_dataset, generate_record, stable_mix

log = logging.getLogger("rvalue")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CALIBRATION = 0, 1, 2, 3

GEN_FIELDS = {f.name for f in fields(GenConfig)}
DEFAULTS = {
    "count": 100,
    "seed": 42,
    "method": "hilbert",
    "margin": 0.0,
    "window_len": StftConfig.window_len,
    "hop": StftConfig.hop,
    "window": StftConfig.window_fn,
    "aggregate": StftConfig.aggregate,
    "threads": 1,
    **{f.name: f.default for f in fields(GenConfig)},
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _add_gen_flags(p):
    g = p.add_argument_group("signal generation")
    g.add_argument("--noise-power", type=float, help=f"AWGN variance (default: {DEFAULTS['noise_power']})")
    g.add_argument("--mod-index", type=float, help=f"AM modulation index in (0, 1] (default: {DEFAULTS['mod_index']})")
    g.add_argument("--seed", type=int, help=f"master seed, 64-bit unsigned (default: {DEFAULTS['seed']})")


def _add_stft_flags(p):
    g = p.add_argument_group("STFT pipeline")
    g.add_argument("--window-len", type=int, help=f"STFT window length in samples (default: {DEFAULTS['window_len']})")
    g.add_argument("--hop", type=int, help=f"STFT hop in samples (default: {DEFAULTS['hop']})")
    g.add_argument("--window", choices=WINDOWS, help=f"STFT window (default: {DEFAULTS['window']})")
    g.add_argument(
        "--aggregate",
        choices=AGGREGATES,
        help=f"how |X(f,t)| becomes the R input (default: {DEFAULTS['aggregate']})",
    )


def _add_common(p, out_default):
    p.add_argument("--config", metavar="FILE", help="JSON settings file; flags override it (default: none)")
    p.add_argument("--threads", type=int, help=f"worker threads (default: {DEFAULTS['threads']})")
    p.add_argument("--out", default=out_default, help=f"output path (default: {out_default})")


def build_parser():
    parser = Parser(prog="rvalue", description="R-value modulation classification toolchain.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("generate", help="write a seeded AM/DSB/SSB dataset")
    p.add_argument("--count", type=int, help=f"signals per class (default: {DEFAULTS['count']})")
    _add_gen_flags(p)
    _add_common(p, "dataset.ds")

    p = sub.add_parser("calibrate", help="fit per-class R intervals from a labelled dataset")
    p.add_argument("--data", default="train.ds", help="dataset file (default: train.ds)")
    p.add_argument("--method", choices=METHODS, help=f"envelope pipeline (default: {DEFAULTS['method']})")
    p.add_argument("--margin", type=float, help=f"fractional interval widening (default: {DEFAULTS['margin']})")
    _add_stft_flags(p)
    _add_common(p, "profile.json")

    p = sub.add_parser("classify", help="classify every record of a dataset")
    p.add_argument("--data", default="test.ds", help="dataset file (default: test.ds)")
    p.add_argument("--profile", default="profile.json", help="threshold profile (default: profile.json)")
    _add_stft_flags(p)
    _add_common(p, "predictions.csv")

    p = sub.add_parser("evaluate", help="accuracy and confusion matrix for predictions")
    p.add_argument("--predictions", help="predictions file from 'classify' (default: none)")
    p.add_argument("--data", help="dataset file, used with --profile instead of --predictions (default: none)")
    p.add_argument("--profile", help="threshold profile, used with --data (default: none)")
    _add_stft_flags(p)
    _add_common(p, "report.json")

    p = sub.add_parser("experiment", help="generate, calibrate, classify and report in one run")
    p.add_argument("--count", type=int, help=f"training signals per class (default: {DEFAULTS['count']})")
    p.add_argument("--test-count", type=_positive_int, default=1000, help="test signals per class (default: 1000)")
    p.add_argument("--test-seed", type=int, default=4242, help="test master seed (default: 4242)")
    p.add_argument("--method", choices=METHODS, help=f"envelope pipeline (default: {DEFAULTS['method']})")
    p.add_argument("--margin", type=float, help=f"fractional interval widening (default: {DEFAULTS['margin']})")
    p.add_argument("--memory", action="store_true", help="also record peak traced memory")
    _add_gen_flags(p)
    _add_stft_flags(p)
    _add_common(p, "report.json")

    p = sub.add_parser("bench", help="time the Hilbert and STFT pipelines on a fresh dataset")
    p.add_argument("--count", type=int, help="signals per class (default: 10000)")
    p.add_argument(
        "--methods",
        default="hilbert,stft",
        help="comma-separated pipelines to time (default: hilbert,stft)",
    )
    p.add_argument("--repeats", type=_positive_int, default=3, help="timed passes, fastest kept (default: 3)")
    p.add_argument("--memory", action="store_true", help="also record peak traced memory")
    _add_gen_flags(p)
    _add_stft_flags(p)
    _add_common(p, "bench.json")

    p = sub.add_parser("trace", help="write envelope traces for one record per class")
    p.add_argument(
        "--class",
        dest="classes",
        default="AM,DSB,SSB",
        help="comma-separated classes to trace (default: AM,DSB,SSB)",
    )
    p.add_argument("--method", choices=METHODS, help=f"envelope pipeline (default: {DEFAULTS['method']})")
    _add_gen_flags(p)
    _add_stft_flags(p)
    _add_common(p, "trace_{label}_{method}.txt")
    return parser


def _check_type(key, value):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, tuple):
        ok = (
            isinstance(value, list)
            and len(value) == len(default)
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        )
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(key, f"expected a value like {default!r}, got {value!r}")
    return value


def resolve(args):
    """Merge defaults, the optional config file and explicit flags."""
    settings = dict(DEFAULTS)
    if args.command == "bench":
        settings["count"] = 10000
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.config}: not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config", "config file must hold a JSON object")
        for key, value in loaded.items():
            if key not in DEFAULTS:
                raise ConfigError(key, "unknown setting in config file")
            settings[key] = _check_type(key, value)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def gen_config(s):
    return GenConfig(**{k: s[k] for k in GEN_FIELDS})


def stft_config(s):
    return StftConfig(window_len=s["window_len"], hop=s["hop"], window_fn=s["window"], aggregate=s["aggregate"])


def _counts(s, field="count"):
    n = s[field]
    if not isinstance(n, int) or n < 1:
        raise ConfigError(field, f"must be a positive integer, got {n!r}")
    return n


def _threads(s):
    n = s["threads"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError("threads", f"must be a positive integer, got {n!r}")
    return n


def _print_intervals(profile):
    for iv in profile.intervals:
        print(f"{iv.cls.value:<4} [{iv.lo!r}, {iv.hi!r}]")


def _print_accuracy(report):
    for name, value in report["accuracy_percent"].items():
        print(f"{name:<8} {value:.2f}%")


def cmd_generate(args, s):
    config = gen_config(s)
    spec = DatasetSpec(_counts(s), s["seed"], config)
    records = generate_dataset(spec, threads=_threads(s))
    n = write_dataset(records, args.out, config)
    print(f"wrote {n} records to {args.out} (config digest {config.digest()})")


def _load_dataset(path):
    config, records = read_dataset(path)
    log.info("read %d records from %s", len(records), path)
    return config, records


def cmd_calibrate(args, s):
    config, records = _load_dataset(args.data)
    cfg = stft_config(s)
    r = batch_r(stack_samples(records), s["method"], cfg, _threads(s))
    per_class = {c: [] for c in CLASS_NAMES}
    for rec, v in zip(records, r.tolist()):
        per_class[rec.label.value].append(v)
    missing = [c for c, v in per_class.items() if not v]
    if missing:
        raise CalibrationError(f"dataset has no records for {', '.join(missing)}")
    profile = calibrate(per_class, s["method"], float(s["margin"]), config, cfg)
    profile.save(args.out)
    print(f"method {profile.method}, margin {profile.margin}")
    _print_intervals(profile)


def _classify_dataset(data_path, profile, s):
    config, records = _load_dataset(data_path)
    cfg = stft_config(s)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        check_digest(profile, config, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    outcomes, r = classify_batch(stack_samples(records), profile, cfg, _threads(s))
    return [(i, rec.label.value, o, v) for i, (rec, o, v) in enumerate(zip(records, outcomes, r.tolist()))]


def cmd_classify(args, s):
    profile = ThresholdProfile.load(args.profile)
    rows = _classify_dataset(args.data, profile, s)
    write_predictions(rows, args.out)
    print(f"wrote {len(rows)} predictions to {args.out}")


def _confusion(rows):
    cm = ConfusionMatrix()
    for index, true_label, decision, _ in rows:
        if decision not in OUTCOMES or true_label not in CLASS_NAMES:
            raise FormatError(f"record {index}: unknown label or decision ({true_label!r}, {decision!r})")
        cm.add(true_label, decision)
    return cm


def _print_confusion(cm):
    print("true\\pred " + " ".join(f"{c:>8}" for c in OUTCOMES))
    for name, row in zip(CLASS_NAMES, cm.counts.tolist()):
        print(f"{name:<9} " + " ".join(f"{v:>8}" for v in row))


def cmd_evaluate(args, s):
    profile = None
    if args.predictions:
        rows = read_predictions(args.predictions)
    elif args.data and args.profile:
        profile = ThresholdProfile.load(args.profile)
        rows = _classify_dataset(args.data, profile, s)
    else:
        raise UsageError("give --predictions, or both --data and --profile")
    cm = _confusion(rows)
    report = build_report(cm, method=profile.method if profile else None, profile=profile)
    write_report(report, args.out)
    _print_confusion(cm)
    _print_accuracy(report)


def cmd_experiment(args, s):
    config = gen_config(s)
    train = DatasetSpec(_counts(s), s["seed"], config)
    test = DatasetSpec(args.test_count, args.test_seed, config)
    result = run_experiment(
        train, test, s["method"], stft_config(s), float(s["margin"]), _threads(s), measure_memory=args.memory
    )
    report = export_report(result, args.out)
    _print_intervals(result.profile)
    _print_confusion(result.confusion)
    _print_accuracy(report)
    t = result.bench.timings[s["method"]]
    print(f"classification time {t.total_s:.3f} s ({t.per_signal_s * 1e6:.2f} us/signal)")


def cmd_bench(args, s):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ConfigError("methods", f"unknown method {m!r}")
    spec = DatasetSpec(_counts(s), s["seed"], gen_config(s))
    report = bench(spec, methods, stft_config(s), _threads(s), args.repeats, args.memory)
    write_report({"format": "rvalue-bench-report", "version": 1, **report.to_dict()}, args.out)
    for name, t in report.timings.items():
        mem = f", peak {t.peak_memory_bytes / 1e6:.1f} MB" if t.peak_memory_bytes is not None else ""
        print(f"{name:<8} {t.count} signals  {t.total_s:.3f} s  {t.per_signal_s * 1e6:.2f} us/signal{mem}")


def cmd_trace(args, s):
    config = gen_config(s)
    method = s["method"]
    for name in [c.strip() for c in args.classes.split(",") if c.strip()]:
        try:
            cls = ModulationClass(name)
        except ValueError:
            raise ConfigError("class", f"unknown class {name!r}") from None
        record = generate_record(cls, stable_mix(s["seed"], cls.ordinal, 0), config)
        path = args.out.format(label=cls.value, method=method)
        data = export_envelope_trace(record, method, path, stft_config(s))
        print(f"wrote {data.shape[0]} rows to {path}")


COMMANDS = {
    "generate": cmd_generate,
    "calibrate": cmd_calibrate,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "bench": cmd_bench,
    "trace": cmd_trace,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        settings = resolve(args)
        COMMANDS[args.command](args, settings)
    except (ConfigError, UsageError) as exc:
        print(f"rvalue {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"rvalue {args.command}: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (OSError, FormatError) as exc:
        print(f"rvalue {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
