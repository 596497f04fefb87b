"""Deterministic parallel parameter sweeps.

A sweep is a task name, a dict of base parameters and a dict of axes.  Points
are the Cartesian product of the axes in the order given (last axis fastest),
evaluated with a process pool and written back in point order, so the merged
CSV is byte-identical for any number of workers.  Per-point results are
cached under ``points/`` keyed by a hash of the task and parameters, so a
rerun (even on a reshaped grid) recomputes only points not seen before.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import KickedRotorParams, ValidationError, make_gaussian_packet
from .io import csv_text

# --- tasks --------------------------------------------------------------------


def _task_hqr_slope(p):
    from .hqr import hqr_slope

    kappa = float(p["kappa"])
    return {"D": float(hqr_slope(float(p["x0"]), kappa * math.pi, kappa))}


def _task_hqr_rate(p):
    from .hqr import HqrRegime, ballistic_rate

    return {"rate": ballistic_rate(float(p["x0"]), HqrRegime(float(p["beta"]), float(p["kappa"])))}


def _task_sqr(p):
    from .sqr import classification_report

    params = KickedRotorParams(float(p["K"]), 2 * math.pi * int(p["ell"]))
    psi0 = make_gaussian_packet(float(p["x0"]), float(p["sigma"]), float(p["beta"]), int(p["n_grid"]))
    rep = classification_report(psi0, params)
    return {"v": rep["v"], "class": rep["class"], "q": rep["q"], "D": rep["D"]}


def _task_evolve(p):
    from .propagator import evolve

    params = KickedRotorParams(float(p["K"]), float(p["hbar"]))
    psi0 = make_gaussian_packet(float(p["x0"]), float(p["sigma"]), float(p["beta"]), int(p["n_grid"]))
    _, series, _ = evolve(psi0, params, int(p["kicks"]))
    slope = float(np.polyfit(series.times, series.p_mean, 1)[0]) if len(series) > 1 else 0.0
    return {"p_final": series.p_mean[-1], "e_final": series.e_mean[-1], "p_slope": slope,
            "norm_final": series.norm[-1]}


def _task_average(p):
    from .averaging import average_over_beta
    from .core import grid, wrapped_gaussian

    params = KickedRotorParams(float(p["K"]), float(p["hbar"]))
    env = wrapped_gaussian(grid(int(p["n_grid"])), float(p["x0"]), float(p["sigma"]))
    res = average_over_beta(env, params, int(p["kicks"]), int(p["n_beta"]), p.get("mode", "closed_form"))
    s = res.series
    return {"e_slope": res.energy_slope(), "p_drift": float(np.max(np.abs(s.p_mean - s.p_mean[0])))}


TASKS = {
    "hqr_slope": (_task_hqr_slope, ("x0", "kappa")),
    "hqr_rate": (_task_hqr_rate, ("x0", "kappa", "beta")),
    "sqr": (_task_sqr, ("ell", "beta", "K", "x0", "sigma", "n_grid")),
    "evolve": (_task_evolve, ("hbar", "K", "beta", "x0", "sigma", "n_grid", "kicks")),
    "average": (_task_average, ("hbar", "K", "x0", "sigma", "n_grid", "n_beta", "kicks")),
}
OPTIONAL = {"average": ("mode",)}


def _run_point(args):
    task, params = args
    return TASKS[task][0](params)


# --- grid spec ----------------------------------------------------------------


def parse_axis(text: str) -> list:
    """``a:b:n`` (inclusive linspace) or a comma list."""
    text = text.strip()
    if text.count(":") == 2:
        a, b, n = text.split(":")
        return [float(v) for v in np.linspace(parse_number(a), parse_number(b), int(n))]
    return [parse_number(v) for v in text.split(",") if v.strip()]


def parse_number(s) -> float | int:
    """Integer, float, or a multiple of pi such as ``pi/4``, ``3*pi/8``, ``2pi``."""
    if not isinstance(s, str):
        return s
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        pass
    low = s.lower().replace(" ", "")
    if "pi" in low:
        # forms like pi, 2pi, pi/4, 3*pi/8
        head, _, tail = low.partition("pi")
        head = head.rstrip("*")
        num = {"": 1.0, "+": 1.0, "-": -1.0}.get(head)
        num = float(head) if num is None else num
        den = float(tail.lstrip("/")) if tail else 1.0
        return num * math.pi / den
    return float(s)


def parse_grid(text: str) -> dict:
    """``"x0=0:pi:33;kappa=0.5,1,2"`` -> ordered dict of axes."""
    axes = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        key, _, values = part.partition("=")
        if not values:
            raise ValidationError(f"bad grid axis {part!r}")
        axes[key.strip()] = parse_axis(values)
    return axes


def expand(base: dict, axes: dict) -> list[dict]:
    keys = list(axes)
    return [{**base, **dict(zip(keys, combo))} for combo in itertools.product(*(axes[k] for k in keys))]


def validate(task: str, points: list[dict]):
    if task not in TASKS:
        raise ValidationError(f"unknown sweep task {task!r}; choose from {sorted(TASKS)}")
    required = set(TASKS[task][1])
    allowed = required | set(OPTIONAL.get(task, ()))
    for p in points:
        missing = required - set(p)
        unknown = set(p) - allowed
        if missing:
            raise ValidationError(f"sweep point lacks {sorted(missing)}")
        if unknown:
            raise ValidationError(f"unknown sweep keys {sorted(unknown)}")


# --- runner -------------------------------------------------------------------


def point_key(task: str, params: dict) -> str:
    blob = json.dumps({"task": task, "params": params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def run_sweep(task: str, base: dict, axes: dict, out_dir, jobs: int = 1, resume: bool = True):
    """Evaluate every grid point and write ``sweep.csv``; returns (csv path, n computed)."""
    points = expand(base, axes)
    validate(task, points)
    out_dir = Path(out_dir)
    cache = out_dir / "points"
    cache.mkdir(parents=True, exist_ok=True)

    results: list = [None] * len(points)
    todo = []
    for i, p in enumerate(points):
        f = cache / f"{point_key(task, p)}.json"
        if resume and f.exists():
            with open(f) as fh:
                stored = json.load(fh)
            if stored.get("task") == task and stored.get("params") == p:
                results[i] = stored["result"]
                continue
        todo.append(i)

    if todo:
        args = [(task, points[i]) for i in todo]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                computed = list(pool.map(_run_point, args))
        else:
            computed = [_run_point(a) for a in args]
        for i, res in zip(todo, computed):
            res = {k: (v.item() if isinstance(v, np.generic) else v) for k, v in res.items()}
            results[i] = res
            with open(cache / f"{point_key(task, points[i])}.json", "w") as fh:
                json.dump({"task": task, "params": points[i], "result": res}, fh, sort_keys=True)

    keys = list(axes)
    out_keys = list(results[0]) if results else []
    header = ["index"] + keys + out_keys
    rows = [[i] + [p[k] for k in keys] + [r[k] for k in out_keys] for i, (p, r) in enumerate(zip(points, results))]
    path = out_dir / "sweep.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(header, rows))
    with open(out_dir / "sweep_points.json", "w") as fh:
        json.dump({"task": task, "base": base, "axes": axes, "n_points": len(points)}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    return path, len(todo)
