import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkr.core import ObservableSeries, ValidationError, make_gaussian_packet, translate
from qkr.io import (
    csv_text,
    format_float,
    load_raw,
    load_snapshot,
    read_csv,
    save_raw,
    save_snapshot,
    state_from_dict,
    state_to_dict,
    write_manifest,
    write_series_csv,
)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert float(format_float(x)) == x


def test_csv_text():
    assert csv_text(["a", "b"], [(1, 0.5), (2, True)]) == "a,b\n1,0.5\n2,True\n"


def test_series_csv(tmp_path):
    s = ObservableSeries(np.arange(3), np.array([0.1, 1 / 3, math.pi]), np.zeros(3), np.ones(3))
    path = write_series_csv(tmp_path / "s.csv", s)
    header, rows = read_csv(path)
    assert header == ["t", "p_mean", "e_mean", "norm"]
    assert [float(r[1]) for r in rows] == list(s.p_mean)


def test_snapshot_round_trip(tmp_path):
    s = translate(make_gaussian_packet(0.4, 0.1, 0.2, 64), 1.25)
    back = load_snapshot(save_snapshot(tmp_path / "s.json", s))
    assert np.array_equal(back.samples, s.samples)
    assert back.beta == s.beta and back.drift_offset == s.drift_offset


def test_snapshot_unknown_keys():
    d = state_to_dict(make_gaussian_packet(0.4, 0.1, 0.2, 64))
    d["extra"] = 1
    with pytest.raises(ValidationError):
        state_from_dict(d)


def test_raw_round_trip(tmp_path):
    s = make_gaussian_packet(0.4, 0.1, -0.2, 64)
    back = load_raw(save_raw(tmp_path / "s.bin", s), s.beta)
    assert np.array_equal(back.samples, s.samples)
    assert (tmp_path / "s.bin").stat().st_size == 64 * 16


def test_manifest(tmp_path):
    path = write_manifest(tmp_path / "m.json", "evolve", {"K": np.float64(2.0)}, ["a.csv"], {"wall": 0.1}, 7)
    data = json.loads(path.read_text())
    assert data["params"] == {"K": 2.0}
    assert data["seed"] == 7
    assert set(data["versions"]) >= {"qkr", "numpy", "python"}
