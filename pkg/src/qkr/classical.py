"""Chirikov's standard map with unfolded position."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ObservableSeries, ValidationError

MIN_ENSEMBLE = 1000


@dataclass(frozen=True)
class ClassicalState:
    X: float
    P: float

    def __post_init__(self):
        if not (np.isfinite(self.X) and np.isfinite(self.P)):
            raise ValidationError("classical state must be finite")


def standard_map_step(s: ClassicalState, K: float) -> ClassicalState:
    x = s.X + s.P
    return ClassicalState(x, s.P + K * np.sin(x))


def trajectory(x0: float, p0: float, K: float, steps: int):
    """Arrays X_t, P_t for t = 0..steps (same arithmetic as ``standard_map_step``)."""
    xs = np.empty(steps + 1)
    ps = np.empty(steps + 1)
    xs[0], ps[0] = x0, p0
    for t in range(1, steps + 1):
        xs[t] = xs[t - 1] + ps[t - 1]
        ps[t] = ps[t - 1] + K * np.sin(xs[t])
    return xs, ps


def jacobian(s: ClassicalState, K: float) -> np.ndarray:
    """d(X', P') / d(X, P) of one step."""
    c = K * np.cos(s.X + s.P)
    return np.array([[1.0, 1.0], [c, 1.0 + c]])


def ensemble_energy_series(n_particles: int, K: float, t_max: int, seed: int,
                           chunk: int = 1 << 16) -> ObservableSeries:
    """<P^2/2>(t) for particles started uniformly in [-pi, pi)^2.

    Particles are drawn from one PCG64 stream as (X, P) pairs, so the i-th
    particle is the same whatever ``chunk`` is; only the summation order
    changes with it.
    """
    if n_particles < MIN_ENSEMBLE:
        raise ValidationError(f"n_particles must be >= {MIN_ENSEMBLE}")
    rng = np.random.Generator(np.random.PCG64(seed))
    total = np.zeros(t_max + 1)
    done = 0
    while done < n_particles:
        m = min(chunk, n_particles - done)
        xp = rng.uniform(-np.pi, np.pi, (m, 2))
        x = xp[:, 0].copy()
        p = xp[:, 1].copy()
        total[0] += np.sum(0.5 * p * p)
        for t in range(1, t_max + 1):
            x += p
            p += K * np.sin(x)
            total[t] += np.sum(0.5 * p * p)
        done += m
    e = total / n_particles
    return ObservableSeries(np.arange(t_max + 1), np.zeros_like(e), e)


def fitted_slope(series: ObservableSeries, t_min: int = 0) -> float:
    mask = series.times >= t_min
    return float(np.polyfit(series.times[mask], series.e_mean[mask], 1)[0])
