"""The hbar = pi high-order resonance as a pointwise two-level problem.

After one free flight at hbar = pi a Bloch wave splits into two copies of
itself half a period apart.  In the frame drifting with ``w = pi * beta``

    psi(X + w t, t) = c1(X, t) psi0(X) + c2(X, t) psi0(X - pi)

and the vector ``(c1(X, t), c2(X - pi, t))`` is advanced pointwise by a 2x2
unitary.  The recursion is exact for any beta and any initial state; only
the single-point momentum formula needs the two copies to be well separated.

``c2`` arrays are always stored aligned with ``c1``: element ``j`` holds
``c2(X_j - pi)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    BlochWaveState,
    ObservableSeries,
    ValidationError,
    canonical_beta,
    grid,
    translate,
)

HBAR_PI = np.pi
_EIGHTH = np.exp(-0.25j * np.pi)
OVERLAP_WARN = 1e-6
PERIOD_TOL = 1e-12
PERIOD_CAP = 128


class SubpacketOverlapWarning(UserWarning):
    """The two half-period copies of the initial packet overlap."""


@dataclass(frozen=True)
class HqrRegime:
    beta: float
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "beta", canonical_beta(self.beta))
        if not math.isfinite(self.kappa):
            raise ValidationError("kappa must be finite")

    @property
    def w(self) -> float:
        """Stroboscopic drift per kick, hbar * beta with hbar = pi."""
        return HBAR_PI * self.beta

    @property
    def K(self) -> float:
        return self.kappa * HBAR_PI

    def global_phase(self) -> complex:
        """Per-kick scalar exp(i pi beta^2 / 2) left out of the transfer matrix."""
        return complex(np.exp(0.5j * np.pi * self.beta**2))


def local_phase(x, t, regime: HqrRegime):
    return regime.kappa * np.cos(np.asarray(x, dtype=float) + regime.w * t)


def _matrix_from_phase(phi, beta: float) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    em, ep = np.exp(-1j * phi), np.exp(1j * phi)
    b = np.exp(1j * np.pi * beta)
    m = np.empty(phi.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = em
    m[..., 0, 1] = 1j * em / b
    m[..., 1, 0] = 1j * ep * b
    m[..., 1, 1] = ep
    return m * (_EIGHTH / math.sqrt(2.0))


def transfer_matrix(x, t, regime: HqrRegime) -> np.ndarray:
    """M_t at position(s) ``x``; shape ``x.shape + (2, 2)``."""
    return _matrix_from_phase(local_phase(x, t, regime), regime.beta)


def eigenphase_theta(phi):
    """Theta in [pi/4, 3pi/4] with cos(Theta) = cos(phi) / sqrt(2)."""
    return np.arccos(np.cos(phi) / math.sqrt(2.0))


def closed_form_amplitudes_beta0(x, t, kappa):
    """(c1(X, t), c2(X - pi, t)) for beta = 0, starting from (1, 0)."""
    phi = kappa * np.cos(np.asarray(x, dtype=float))
    theta = eigenphase_theta(phi)
    t = np.asarray(t)
    s = np.sin(t * theta) / np.sin(theta)
    glob = np.exp(-0.25j * np.pi * t)
    c1 = glob * (np.cos(t * theta) - 1j * (math.sqrt(2.0) / 2) * np.sin(phi) * s)
    c2 = 1j * (math.sqrt(2.0) / 2) * np.exp(1j * phi) * glob * s
    return c1, c2


@dataclass(frozen=True)
class TwoLevelAmplitudes:
    c1: np.ndarray
    c2: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, n_points: int) -> "TwoLevelAmplitudes":
        return cls(np.ones(n_points, dtype=np.complex128),
                   np.zeros(n_points, dtype=np.complex128), 0)

    def populations(self) -> np.ndarray:
        return np.abs(self.c1) ** 2 + np.abs(self.c2) ** 2


def recurrence_period(regime: HqrRegime, x=None, cap: int = PERIOD_CAP,
                      tol: float = PERIOD_TOL) -> int | None:
    """Smallest t_r <= cap with M_{t + t_r} = M_t, else None.

    Compared over a full window t = 0..t_r on the sample points (default: a
    64-point grid); a single point can repeat a phase before the true period.
    """
    x = grid(64) if x is None else np.asarray(x, dtype=float)
    mats = transfer_matrix(x[None, :], np.arange(2 * cap + 1)[:, None], regime)
    for tr in range(1, cap + 1):
        if np.max(np.abs(mats[tr: 2 * tr + 1] - mats[: tr + 1])) < tol:
            return tr
    return None


def step_amplitudes(amps: TwoLevelAmplitudes, regime: HqrRegime, x=None) -> TwoLevelAmplitudes:
    """Advance by one kick with M_{t+1}.

    ``x`` defaults to the uniform grid matching the array length; pass explicit
    positions to follow a handful of points.
    """
    x = grid(amps.c1.shape[0]) if x is None else np.asarray(x, dtype=float)
    m = transfer_matrix(x, amps.t + 1, regime)
    c1 = m[..., 0, 0] * amps.c1 + m[..., 0, 1] * amps.c2
    c2 = m[..., 1, 0] * amps.c1 + m[..., 1, 1] * amps.c2
    return TwoLevelAmplitudes(c1, c2, amps.t + 1)


def evolve_amplitudes(regime: HqrRegime, t: int, x=None, n_points: int | None = None) -> TwoLevelAmplitudes:
    if x is None:
        amps = TwoLevelAmplitudes.initial(n_points)
    else:
        amps = TwoLevelAmplitudes.initial(np.size(x))
        x = np.reshape(np.asarray(x, dtype=float), -1)
    for _ in range(t):
        amps = step_amplitudes(amps, regime, x)
    return amps


def subpacket_overlap(psi0: BlochWaveState) -> float:
    """Integral of |psi0(X) psi0(X - pi)| over one period."""
    a = np.abs(psi0.samples)
    return float(np.sum(a * np.roll(a, psi0.n_grid // 2)) * psi0.dx)


def _warn_overlap(psi0: BlochWaveState):
    ov = subpacket_overlap(psi0)
    if ov > OVERLAP_WARN:
        warnings.warn(f"subpacket overlap {ov:.2e} exceeds {OVERLAP_WARN:g}; "
                      "two-level momentum formulas are approximate",
                      SubpacketOverlapWarning, stacklevel=3)


def _shift_half(values: np.ndarray, beta: float | None = None) -> np.ndarray:
    """f(X_j - pi) from samples of f; Bloch-aware when ``beta`` is given."""
    n = values.shape[0]
    out = np.roll(values, n // 2)
    if beta is not None:
        # indices j < N/2 wrap from X_j + pi back across the cell edge
        out[: n // 2] *= np.exp(-2j * np.pi * beta)
    return out


def reconstruct_state(amps: TwoLevelAmplitudes, psi0: BlochWaveState,
                      regime: HqrRegime | None = None, with_phase: bool = True) -> BlochWaveState:
    """psi(X, t) from the amplitudes and the initial Bloch wave.

    Builds ``c1 psi0(X) + c2(X) psi0(X - pi)`` in the drifting frame, then
    translates by ``w t``.  The per-kick scalar phase is included unless
    ``with_phase`` is false.
    """
    if regime is None:
        regime = HqrRegime(psi0.beta, 0.0)
    if regime.beta != psi0.beta:
        raise ValidationError("regime and state carry different quasimomenta")
    if amps.c1.shape[0] != psi0.n_grid:
        raise ValidationError("amplitudes must live on the state grid")
    _warn_overlap(psi0)
    c2_here = np.roll(amps.c2, -(psi0.n_grid // 2))  # c2(X_j) = stored value at X_j + pi
    moving = amps.c1 * psi0.samples + c2_here * _shift_half(psi0.samples, psi0.beta)
    if with_phase:
        moving = moving * regime.global_phase() ** amps.t
    frame = psi0.replace(samples=moving, drift_offset=psi0.drift_offset)
    return translate(frame, regime.w * amps.t)


def hqr_slope(x0, K, kappa):
    """Long-time <P> slope of a point-like packet at beta = 0."""
    phi = kappa * np.cos(x0)
    s2 = np.sin(phi) ** 2
    return K * np.sin(x0) * s2 / (1.0 + s2)


def slope_table(x0s, kappas, hbar: float = HBAR_PI):
    """Rows (x0, kappa, D) with K = kappa * hbar."""
    rows = []
    for kappa in kappas:
        for x0 in x0s:
            rows.append((float(x0), float(kappa), float(hqr_slope(x0, kappa * hbar, kappa))))
    return rows


def momentum_increment_beta0(x0, K, kappa, t):
    """K sin(x0) (1 - sin^2(t Theta) / sin^2 Theta)."""
    theta = eigenphase_theta(kappa * np.cos(x0))
    return K * np.sin(x0) * (1.0 - np.sin(t * theta) ** 2 / np.sin(theta) ** 2)


def momentum_split_beta0(x0, K, kappa, t):
    """(ballistic, oscillatory) parts of <P>(t) - <P>(0) at beta = 0."""
    phi = kappa * np.cos(x0)
    theta = eigenphase_theta(phi)
    s2 = np.sin(phi) ** 2
    t = np.asarray(t, dtype=float)
    amp = K * np.sin(x0)
    ballistic = amp * s2 / (1 + s2) * t
    osc = amp / (1 + s2) * (np.sin((2 * t + 1) * theta) / (2 * np.sin(theta)) - 0.5)
    return ballistic, osc


@dataclass
class HqrMomentumSeries:
    series: ObservableSeries
    ballistic: np.ndarray | None = None
    oscillatory: np.ndarray | None = None


def momentum_series_hqr(x0: float, regime: HqrRegime, t_max: int, p0: float = 0.0) -> HqrMomentumSeries:
    """<P>(t) of a point-like packet at ``x0`` from the two-level recursion.

    Each kick adds ``K sin(x0 + w t) (1 - 2 |c2(x0 - pi, t)|^2)``; amplitudes
    come from stepping the transfer matrices, so any beta is handled.  At
    beta = 0 the ballistic/oscillatory split of the iterated closed form is
    attached as well.
    """
    K = regime.K
    amps = TwoLevelAmplitudes.initial(1)
    xs = np.array([float(x0)])
    p = np.empty(t_max + 1)
    p[0] = p0
    for t in range(1, t_max + 1):
        amps = step_amplitudes(amps, regime, xs)
        p[t] = p[t - 1] + K * math.sin(x0 + regime.w * t) * (1.0 - 2.0 * abs(amps.c2[0]) ** 2)
    times = np.arange(t_max + 1)
    out = HqrMomentumSeries(ObservableSeries(times, p, np.full_like(p, np.nan)))
    if regime.beta == 0.0:
        out.ballistic, out.oscillatory = momentum_split_beta0(x0, K, regime.kappa, times)
    return out


def packet_momentum_series_hqr(psi0: BlochWaveState, regime: HqrRegime, t_max: int) -> ObservableSeries:
    """<P>(t) weighting the per-point increments by |psi0|^2 (separated copies)."""
    if regime.beta != psi0.beta:
        raise ValidationError("regime and state carry different quasimomenta")
    _warn_overlap(psi0)
    from .core import mean_momentum_beta  # noqa: PLC0415

    x = psi0.x
    rho = psi0.density() * psi0.dx
    amps = TwoLevelAmplitudes.initial(psi0.n_grid)
    p = np.empty(t_max + 1)
    p[0] = mean_momentum_beta(psi0, HBAR_PI)
    for t in range(1, t_max + 1):
        amps = step_amplitudes(amps, regime)
        weight = np.abs(amps.c1) ** 2 - np.abs(amps.c2) ** 2
        p[t] = p[t - 1] + regime.K * float(np.sum(np.sin(x + regime.w * t) * weight * rho))
    return ObservableSeries(np.arange(t_max + 1), p, np.full_like(p, np.nan))


def composite_matrix(x, regime: HqrRegime, period: int, start: int = 1) -> np.ndarray:
    """M_{start+period-1} ... M_{start+1} M_start at ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.broadcast_to(np.eye(2, dtype=np.complex128), x.shape + (2, 2)).copy()
    for t in range(start, start + period):
        out = transfer_matrix(x, t, regime) @ out
    return out


def period4_composite(x, kappa: float, beta: float = 0.5) -> np.ndarray:
    """M_4 M_3 M_2 M_1 at beta = +-1/2, where M_t has period 4."""
    regime = HqrRegime(beta, kappa)
    if abs(regime.beta) != 0.5:
        raise ValidationError("period-4 composite is defined for beta = +-1/2")
    return composite_matrix(x, regime, 4)


def ballistic_rate(x0: float, regime: HqrRegime) -> float:
    """Long-time mean <P> gain per kick of a point-like packet at ``x0``.

    Uses the eigenvectors of the composite over one recurrence period: the
    time average of |c2|^2 at each phase of the period is the incoherent sum
    over eigencomponents (assumes non-degenerate eigenphases).
    """
    tr = recurrence_period(regime)
    if tr is None:
        raise ValidationError("no recurrence period within the cap; beta is not resonant enough")
    m = composite_matrix(np.array([x0]), regime, tr)[0]
    _, vecs = np.linalg.eig(m)
    weights = np.abs(np.linalg.solve(vecs, np.array([1.0, 0.0]))) ** 2
    partial = np.eye(2, dtype=np.complex128)
    total = 0.0
    for j in range(1, tr + 1):
        partial = transfer_matrix(np.array([x0]), j, regime)[0] @ partial
        mean_c2 = float(np.sum(weights * np.abs((partial @ vecs)[1]) ** 2))
        total += math.sin(x0 + regime.w * j) * (1.0 - 2.0 * mean_c2)
    return regime.K * total / tr
