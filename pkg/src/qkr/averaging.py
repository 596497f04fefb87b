"""Observables averaged over quasimomentum.

An ensemble of Bloch waves sharing one spatial envelope is sampled at the
midpoints of ``n_beta`` equal cells of [-1/2, 1/2); the averaged <P>(t) and
<E>(t) are the plain means of the per-beta series.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BlochWaveState, KickedRotorParams, ObservableSeries, ValidationError, from_envelope
from .propagator import evolve
from .sqr import SqrRegime, resonance_order, sqr_series

MODES = ("closed_form", "propagator")
ENVELOPE_RTOL = 1e-12


def beta_midpoints(n_beta: int) -> np.ndarray:
    if n_beta < 1:
        raise ValidationError("n_beta must be >= 1")
    return -0.5 + (np.arange(n_beta) + 0.5) / n_beta


@dataclass(frozen=True)
class AverageResult:
    series: ObservableSeries
    betas: np.ndarray
    mode: str

    def energy_slope(self) -> float:
        t = self.series.times
        return float(np.polyfit(t, self.series.e_mean - self.series.e_mean[0], 1)[0])


def _run_one(args):
    state, params, t_max, mode = args
    if mode == "closed_form":
        return sqr_series(state, params, t_max)
    _, series, _ = evolve(state, params, t_max)
    return series


def average_over_beta(initial, params: KickedRotorParams, t_max: int, n_beta: int = 256,
                      mode: str = "closed_form", jobs: int = 1,
                      min_n_beta: int = 32) -> AverageResult:
    """Quasimomentum average of <P>(t) and <E>(t).

    ``initial`` is either an envelope array (used as psi_beta(X, 0) for every
    beta) or a callable ``beta -> BlochWaveState``; callables must produce the
    same |psi|^2 for every beta.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if n_beta < min_n_beta:
        raise ValidationError(f"n_beta must be >= {min_n_beta}")
    if mode == "closed_form":
        resonance_order(params.hbar_eff)
    betas = beta_midpoints(n_beta)
    make: Callable[[float], BlochWaveState]
    if callable(initial):
        make = initial
    else:
        envelope = np.asarray(initial)
        make = lambda b: from_envelope(envelope, b)  # noqa: E731
    states = [make(b) for b in betas]
    ref = states[0].density()
    for s in states[1:]:
        if s.n_grid != states[0].n_grid or not np.allclose(s.density(), ref, rtol=0,
                                                            atol=ENVELOPE_RTOL * ref.max()):
            raise ValidationError("initial states do not share one spatial envelope")

    tasks = [(s, params, t_max, mode) for s in states]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_one(task) for task in tasks]

    # ordered reduction keeps the sum independent of the worker count
    p = np.zeros(t_max + 1)
    e = np.zeros(t_max + 1)
    nrm = np.zeros(t_max + 1)
    for r in results:
        p += r.p_mean
        e += r.e_mean
        nrm += r.norm
    series = ObservableSeries(np.arange(t_max + 1), p / n_beta, e / n_beta, nrm / n_beta)
    return AverageResult(series, betas, mode)


@dataclass(frozen=True)
class EnergySlope:
    analytic: float
    quadrature: float

    @property
    def relative_error(self) -> float:
        if self.analytic == 0:
            return abs(self.quadrature)
        return abs(self.quadrature - self.analytic) / self.analytic


def averaged_energy_slope_sqr(envelope, K: float, ell: int, t_max: int,
                              n_beta: int = 256) -> EnergySlope:
    """K^2/4 next to the slope of the beta-averaged closed-form energy."""
    params = KickedRotorParams(K, 2 * np.pi * ell)
    res = average_over_beta(envelope, params, t_max, n_beta, mode="closed_form")
    return EnergySlope(K * K / 4.0, res.energy_slope())


def sqr_regimes(ell: int, n_beta: int) -> list[SqrRegime]:
    return [SqrRegime.create(ell, b) for b in beta_midpoints(n_beta)]
