"""Closed forms for the simple resonances hbar = 2 pi l.

At these values one free flight is a rigid translation of the Bloch wave by
``v = hbar (beta + 1/2)`` (times a known scalar phase), so ``t`` kicks give

    psi(X, t) = g^t exp(-i kappa Phi(X, t)) psi(X - v t, 0),
    Phi(X, t) = sum_{s=0}^{t-1} cos(X - v s),  g = exp(i hbar beta (beta + 1) / 2).

Every observable then reduces to Dirichlet sums times a few trigonometric
moments of the initial state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    TWO_PI,
    BlochWaveState,
    KickedRotorParams,
    ObservableSeries,
    ValidationError,
    canonical_beta,
    ladder_moments,
    probability_current,
    to_momentum,
    translate,
)

DIRICHLET_EPS = 1e-8
RATIONAL_TOL = 1e-12
MAX_DENOMINATOR = 64


class SqrClass(enum.Enum):
    RESONANT = "Resonant"
    ANTI_RESONANT = "AntiResonant"
    DRIFTING = "Drifting"


def drift_velocity(ell: int, beta: float) -> float:
    if ell < 1 or int(ell) != ell:
        raise ValidationError(f"ell must be a positive integer, got {ell}")
    return TWO_PI * ell * (beta + 0.5)


def resonance_order(hbar: float, rtol: float = 1e-12) -> int:
    """l such that hbar = 2 pi l; raises if hbar is not a simple resonance."""
    ell = round(hbar / TWO_PI)
    if ell < 1 or abs(hbar - TWO_PI * ell) > rtol * hbar:
        raise ValidationError(f"hbar = {hbar} is not of the form 2 pi l")
    return ell


@dataclass(frozen=True)
class SqrRegime:
    ell: int
    beta: float
    v: float
    classification: SqrClass
    p: int | None
    q: int | None

    @classmethod
    def create(cls, ell: int, beta: float) -> "SqrRegime":
        beta = canonical_beta(beta)
        v = drift_velocity(ell, beta)
        # v / 2 pi = l (beta + 1/2); exact when beta is a dyadic or simple float
        ratio = ell * (beta + 0.5)
        frac = Fraction(ratio).limit_denominator(MAX_DENOMINATOR)
        if abs(float(frac) - ratio) <= RATIONAL_TOL:
            p, q = frac.numerator, frac.denominator
            kind = SqrClass.RESONANT if q == 1 else SqrClass.ANTI_RESONANT
            return cls(ell, beta, v, kind, p, q)
        return cls(ell, beta, v, SqrClass.DRIFTING, None, None)

    @classmethod
    def from_params(cls, params: KickedRotorParams, beta: float) -> "SqrRegime":
        return cls.create(resonance_order(params.hbar_eff), beta)

    @property
    def hbar(self) -> float:
        return TWO_PI * self.ell

    @property
    def recurrence_time(self) -> int | None:
        return self.q

    def global_phase(self) -> complex:
        return complex(np.exp(0.5j * self.hbar * self.beta * (self.beta + 1.0)))


def dirichlet_sum(v: float, t, start: int = 1):
    """sum_{n=start}^{start+t-1} exp(i n v), vectorized over t >= 0."""
    t = np.asarray(t)
    half = math.sin(v / 2.0)
    if abs(half) > DIRICHLET_EPS:
        return np.exp(1j * v * (start + (t - 1) / 2.0)) * np.sin(t * v / 2.0) / half
    tmax = int(np.max(t)) if t.size else 0
    terms = np.exp(1j * v * np.arange(start, start + tmax))
    csum = np.concatenate([[0.0], np.cumsum(terms)])
    return csum[t]


def accumulated_phase(x, v: float, t: int):
    """Phi(X, t) = sum_{s=0}^{t-1} cos(X - v s)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    if t == 0:
        return np.zeros_like(x)
    d = dirichlet_sum(-v, t, start=0)
    return np.real(np.exp(1j * x) * d)


def closed_form_state(psi0: BlochWaveState, params: KickedRotorParams, t: int,
                      regime: SqrRegime | None = None, with_phase: bool = True) -> BlochWaveState:
    """State after ``t`` kicks from the translation-plus-phase closed form."""
    if regime is None:
        regime = SqrRegime.from_params(params, psi0.beta)
    elif abs(regime.hbar - params.hbar_eff) > 1e-12 * params.hbar_eff:
        raise ValidationError("regime and params disagree on hbar")
    if regime.beta != psi0.beta:
        raise ValidationError("regime and state carry different quasimomenta")
    if t == 0:
        return psi0
    shifted = translate(psi0, regime.v * t)
    phase = np.exp(-1j * params.kappa * accumulated_phase(psi0.x, regime.v, t))
    if with_phase:
        phase = phase * regime.global_phase() ** t
    return shifted.replace(samples=shifted.samples * phase)


@dataclass(frozen=True)
class InitialMoments:
    """Trigonometric moments of |psi0|^2 and of the current J(X, 0)."""

    p0: float
    e0: float
    sin: float
    cos: float
    sin2: float
    sincos: float
    cos2: float
    j_sin: float
    j_cos: float

    @classmethod
    def of(cls, psi0: BlochWaveState, hbar: float) -> "InitialMoments":
        x, dx = psi0.x, psi0.dx
        rho = psi0.density() * dx
        j = probability_current(psi0, hbar) * dx
        _, p0, e0 = ladder_moments(to_momentum(psi0).coefficients, psi0.beta, hbar)
        s, c = np.sin(x), np.cos(x)
        return cls(p0, e0, float(s @ rho), float(c @ rho), float((s * s) @ rho),
                   float((s * c) @ rho), float((c * c) @ rho), float(s @ j), float(c @ j))


def _kick_sums(regime: SqrRegime, times: np.ndarray) -> np.ndarray:
    if regime.classification is SqrClass.RESONANT:
        return times.astype(complex)
    return dirichlet_sum(regime.v, times)


def sqr_series(psi0: BlochWaveState, params: KickedRotorParams, t_max: int,
               regime: SqrRegime | None = None) -> ObservableSeries:
    """<P>(t) and <E>(t) for t = 0..t_max from the closed forms.

    With ``S(X, t) = sum_{n=1}^t sin(X + n v) = a_t sin X + b_t cos X``:
    ``<P> = <P>_0 + K <S>`` and
    ``<E> = <E>_0 + (K^2/2) <S^2> + K int S J(X, 0) dX``.
    """
    if regime is None:
        regime = SqrRegime.from_params(params, psi0.beta)
    mom = InitialMoments.of(psi0, params.hbar_eff)
    times = np.arange(t_max + 1)
    d = _kick_sums(regime, times)
    a, b = d.real, d.imag
    K = params.K
    p = mom.p0 + K * (a * mom.sin + b * mom.cos)
    quad = a * a * mom.sin2 + 2 * a * b * mom.sincos + b * b * mom.cos2
    e = mom.e0 + 0.5 * K * K * quad + K * (a * mom.j_sin + b * mom.j_cos)
    return ObservableSeries(times, p, e, np.full(t_max + 1, psi0.norm2()))


def momentum_series_sqr(psi0, params, t_max, regime=None) -> np.ndarray:
    return sqr_series(psi0, params, t_max, regime).p_mean


def energy_series_sqr(psi0, params, t_max, regime=None) -> np.ndarray:
    return sqr_series(psi0, params, t_max, regime).e_mean


def resonant_slope(psi0: BlochWaveState, K: float) -> float:
    """D = K int sin X |psi0|^2 dX."""
    return K * float(np.sin(psi0.x) @ (psi0.density() * psi0.dx))


def resonant_energy_coefficients(psi0: BlochWaveState, params: KickedRotorParams):
    """(quadratic, linear) coefficients of <E>(t) - <E>(0) on resonance."""
    mom = InitialMoments.of(psi0, params.hbar_eff)
    return 0.5 * params.K**2 * mom.sin2, params.K * mom.j_sin


def mean_value_map(x0: float, p0: float, K: float, v: float, t: int):
    """Point-packet map X_t = X_{t-1} + v, P_t = P_{t-1} + K sin X_t for 0..t."""
    n = np.arange(t + 1)
    x = x0 + v * n
    incr = np.concatenate([[0.0], K * np.sin(x[1:])])
    return x, p0 + np.cumsum(incr)


def classification_report(psi0: BlochWaveState, params: KickedRotorParams) -> dict:
    regime = SqrRegime.from_params(params, psi0.beta)
    resonant = regime.classification is SqrClass.RESONANT
    return {
        "ell": regime.ell,
        "beta": regime.beta,
        "v": regime.v,
        "class": regime.classification.value,
        "q": regime.q,
        "D": resonant_slope(psi0, params.K) if resonant else 0.0,
    }
