"""CSV series, JSON state snapshots and run manifests."""

from __future__ import annotations

import io
import json
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import BlochWaveState, ObservableSeries, ValidationError

OUTPUT_DIR_ENV = "QKR_OUTPUT_DIR"
FLOAT_FMT = "%.17g"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def format_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % float(x)
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_float(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(header, rows))
    return path


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


def series_rows(series: ObservableSeries, columns=("t", "p_mean", "e_mean", "norm")):
    data = {"t": series.times, "p_mean": series.p_mean, "e_mean": series.e_mean, "norm": series.norm}
    return [tuple(data[c][i] for c in columns) for i in range(len(series))]


def write_series_csv(path, series: ObservableSeries, columns=("t", "p_mean", "e_mean", "norm"),
                     names=None) -> Path:
    return write_csv(path, list(names or columns), series_rows(series, columns))


# --- snapshots ----------------------------------------------------------------

def state_to_dict(state: BlochWaveState) -> dict:
    return {
        "n_grid": state.n_grid,
        "beta": state.beta,
        "drift_offset": state.drift_offset,
        "samples": [[float(z.real), float(z.imag)] for z in state.samples],
    }


def state_from_dict(data: dict) -> BlochWaveState:
    expected = {"n_grid", "beta", "drift_offset", "samples"}
    if set(data) != expected:
        raise ValidationError(f"snapshot keys must be {sorted(expected)}, got {sorted(data)}")
    arr = np.asarray(data["samples"], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("samples must be a list of [re, im] pairs")
    return BlochWaveState(int(data["n_grid"]), float(data["beta"]), arr[:, 0] + 1j * arr[:, 1],
                          float(data["drift_offset"]))


def save_snapshot(path, state: BlochWaveState, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = state_to_dict(state)
    with open(path, "w") as fh:
        json.dump(data if extra is None else {**data, **extra}, fh)
    return path


def load_snapshot(path) -> BlochWaveState:
    with open(path) as fh:
        data = json.load(fh)
    return state_from_dict({k: data[k] for k in ("n_grid", "beta", "drift_offset", "samples")})


def save_raw(path, state: BlochWaveState) -> Path:
    """Little-endian complex128 dump of the samples (metadata not included)."""
    path = Path(path)
    state.samples.astype("<c16").tofile(path)
    return path


def load_raw(path, beta: float, drift_offset: float = 0.0) -> BlochWaveState:
    samples = np.fromfile(path, dtype="<c16")
    return BlochWaveState(samples.shape[0], beta, samples, drift_offset)


# --- manifests ------------------------------------------------------------------

def environment_info() -> dict:
    return {
        "qkr": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
    }


def write_manifest(path, command: str, params: dict, outputs, timings: dict | None = None,
                   seed=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "params": params,
        "seed": seed,
        "outputs": [str(o) for o in outputs],
        "versions": environment_info(),
        "timings": timings or {},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
