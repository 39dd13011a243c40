import math

import numpy as np
import pytest

from rvalue import GenConfig, ModulationClass, generate_message, modulate

ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail=""):
    """``passed=None`` marks a criterion that was not run (opt-in)."""
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def brute_r(values):
    """R by explicit loops, independent of numpy reductions."""
    vals = [float(v) for v in values]
    n = len(vals)
    mu = math.fsum(vals) / n
    var = math.fsum((v - mu) ** 2 for v in vals) / n
    return var / mu**2


@pytest.fixture
def clean_config():
    return GenConfig(noise_power=0.0)


def clean_signal(label, config=None, freq=250.0, phase=0.0):
    config = config or GenConfig(noise_power=0.0)
    x = generate_message(freq, phase, config.message_amplitude, config.n_samples, config.sample_rate_hz)
    return x, modulate(ModulationClass(label), x, config)


@pytest.fixture
def sample_times():
    return np.arange(200) / 10000.0
