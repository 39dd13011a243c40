import math

import numpy as np
import pytest

from rvalue import DatasetSpec, FormatError, GenConfig, generate_dataset
from rvalue.datafile import (
    iter_dataset,
    read_dataset,
    read_predictions,
    write_dataset,
    write_predictions,
)


@pytest.fixture
def small_dataset():
    return generate_dataset(DatasetSpec(4, 21))


def test_round_trip_is_exact(tmp_path, small_dataset):
    path = tmp_path / "d.txt"
    assert write_dataset(small_dataset, path) == 12
    config, records = read_dataset(path)
    assert config == GenConfig()
    assert records == small_dataset
    for a, b in zip(records, small_dataset):
        assert a.samples.tobytes() == b.samples.tobytes()
    again = tmp_path / "again.txt"
    write_dataset(records, again)
    assert again.read_bytes() == path.read_bytes()


def test_iter_matches_read(tmp_path, small_dataset):
    path = tmp_path / "d.txt"
    write_dataset(small_dataset, path)
    assert [rec for _, rec in iter_dataset(path)] == read_dataset(path)[1]


def test_header_carries_config(tmp_path):
    cfg = GenConfig(noise_power=0.05, mod_index=0.5)
    data = generate_dataset(DatasetSpec(1, 3, cfg))
    path = tmp_path / "d.txt"
    write_dataset(data, path)
    assert read_dataset(path)[0] == cfg
    assert path.read_text().startswith("#rvalue-dataset v1 {")


def test_empty_dataset_needs_config(tmp_path):
    with pytest.raises(ValueError):
        write_dataset([], tmp_path / "e.txt")
    write_dataset([], tmp_path / "e.txt", GenConfig())
    assert read_dataset(tmp_path / "e.txt") == (GenConfig(), [])


@pytest.mark.parametrize(
    "mutate",
    [
        lambda lines: [],
        lambda lines: ["#other v1 {}"] + lines[1:],
        lambda lines: [lines[0].replace(" v1 ", " v7 ")] + lines[1:],
        lambda lines: ["#rvalue-dataset v1 {not json"] + lines[1:],
        lambda lines: lines[:1] + [lines[1].rsplit(",", 1)[0]],
        lambda lines: lines[:1] + ["QAM" + lines[1][2:]],
        lambda lines: lines[:1] + [lines[1].replace(",", ",x", 1)],
    ],
)
def test_malformed_files(tmp_path, small_dataset, mutate):
    path = tmp_path / "d.txt"
    write_dataset(small_dataset[:2], path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(mutate(lines)) + "\n")
    with pytest.raises(FormatError):
        read_dataset(path)


def test_predictions_round_trip(tmp_path):
    rows = [(0, "AM", "AM", 0.4512), (1, "DSB", "Unknown", 0.1), (2, "SSB", "Unknown", float("nan"))]
    path = tmp_path / "p.csv"
    write_predictions(rows, path)
    back = read_predictions(path)
    assert back[:2] == rows[:2]
    assert back[2][:3] == rows[2][:3] and math.isnan(back[2][3])


def test_predictions_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("a,b\n")
    with pytest.raises(FormatError):
        read_predictions(path)
    path.write_text("index,true_label,decision,r_value\n1,AM,AM\n")
    with pytest.raises(FormatError):
        read_predictions(path)


def test_full_precision(tmp_path):
    data = generate_dataset(DatasetSpec(1, 99))
    path = tmp_path / "d.txt"
    write_dataset(data, path)
    back = read_dataset(path)[1]
    assert all(np.array_equal(a.samples, b.samples) for a, b in zip(data, back))
