"""Parameters, Bloch-wave states on a periodic grid, and common observables.

A Bloch wave ``psi_beta(X) = exp(i beta X) u(X)`` is stored by its samples on
the uniform grid ``X_j = -pi + 2 pi j / N``.  The Bloch phase is kept in the
samples; all Fourier work is done on the periodic part ``u``, so the momentum
ladder ``P = (m + beta) hbar`` has integer indices ``m in [-N/2, N/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
SQRT_TWO_PI = math.sqrt(TWO_PI)


class ValidationError(ValueError):
    """Invalid parameter or state."""


class NumericalGuardError(RuntimeError):
    """A numerical safeguard tripped (norm drift, unresolved grid)."""


class AliasingWarning(RuntimeWarning):
    """Momentum ladder occupancy reaches the edge of the grid."""


@dataclass(frozen=True)
class KickedRotorParams:
    K: float
    hbar_eff: float

    def __post_init__(self):
        if not (math.isfinite(self.K) and math.isfinite(self.hbar_eff)):
            raise ValidationError("K and hbar_eff must be finite")
        if self.K < 0:
            raise ValidationError(f"K must be >= 0, got {self.K}")
        if self.hbar_eff <= 0:
            raise ValidationError(f"hbar_eff must be > 0, got {self.hbar_eff}")

    @property
    def kappa(self) -> float:
        return self.K / self.hbar_eff

    @classmethod
    def from_kappa(cls, kappa: float, hbar_eff: float) -> "KickedRotorParams":
        return cls(K=kappa * hbar_eff, hbar_eff=hbar_eff)


def canonical_beta(beta: float) -> float:
    """Map a quasimomentum to the half-open zone [-1/2, 1/2).

    Only the closed interval is accepted; the upper edge +1/2 becomes -1/2.
    """
    beta = float(beta)
    if not math.isfinite(beta) or beta < -0.5 or beta > 0.5:
        raise ValidationError(f"beta must lie in [-1/2, 1/2], got {beta}")
    if beta == 0.5:
        return -0.5
    return beta


def check_grid_size(n_grid: int) -> int:
    n = int(n_grid)
    if n != n_grid or n < 32 or n & (n - 1):
        raise ValidationError(f"n_grid must be a power of two >= 32, got {n_grid}")
    return n


def grid(n_grid: int) -> np.ndarray:
    """Uniform grid on [-pi, pi)."""
    return -np.pi + TWO_PI * np.arange(n_grid) / n_grid


def mode_indices(n_grid: int) -> np.ndarray:
    """Integer ladder indices m = -N/2, ..., N/2 - 1."""
    return np.arange(-(n_grid // 2), n_grid // 2)


@dataclass(frozen=True)
class BlochWaveState:
    n_grid: int
    beta: float
    samples: np.ndarray
    drift_offset: float = 0.0

    def __post_init__(self):
        n = check_grid_size(self.n_grid)
        object.__setattr__(self, "n_grid", n)
        object.__setattr__(self, "beta", canonical_beta(self.beta))
        samples = np.ascontiguousarray(self.samples, dtype=np.complex128)
        if samples.shape != (n,):
            raise ValidationError(f"samples must have shape ({n},), got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain non-finite values")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "drift_offset", float(self.drift_offset))

    @property
    def x(self) -> np.ndarray:
        return grid(self.n_grid)

    @property
    def dx(self) -> float:
        return TWO_PI / self.n_grid

    def periodic_part(self) -> np.ndarray:
        """u(X) = psi(X) exp(-i beta X) on the grid."""
        return self.samples * np.exp(-1j * self.beta * self.x)

    def density(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dx)

    def replace(self, samples=None, drift_offset=None) -> "BlochWaveState":
        return BlochWaveState(
            self.n_grid,
            self.beta,
            self.samples if samples is None else samples,
            self.drift_offset if drift_offset is None else drift_offset,
        )


@dataclass(frozen=True)
class MomentumLadder:
    beta: float
    coefficients: np.ndarray

    @property
    def n_grid(self) -> int:
        return self.coefficients.shape[0]

    @property
    def modes(self) -> np.ndarray:
        return mode_indices(self.n_grid)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))


@dataclass
class ObservableSeries:
    times: np.ndarray
    p_mean: np.ndarray
    e_mean: np.ndarray
    norm: np.ndarray = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.p_mean = np.asarray(self.p_mean, dtype=float)
        self.e_mean = np.asarray(self.e_mean, dtype=float)
        if self.norm is None:
            self.norm = np.ones_like(self.p_mean)
        self.norm = np.asarray(self.norm, dtype=float)
        n = len(self.times)
        if not (len(self.p_mean) == len(self.e_mean) == len(self.norm) == n):
            raise ValidationError("series arrays must have equal length")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValidationError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)


# --- transforms -------------------------------------------------------------

def _sign_alternation(n_grid: int) -> np.ndarray:
    # (-1)^m from X_0 = -pi
    return np.where(mode_indices(n_grid) % 2 == 0, 1.0, -1.0)


def u_to_ladder(u: np.ndarray) -> np.ndarray:
    """Ladder coefficients (ordered m = -N/2..N/2-1) of a periodic part."""
    n = u.shape[-1]
    return np.fft.fftshift(np.fft.fft(u)) * (_sign_alternation(n) * (SQRT_TWO_PI / n))


def ladder_to_u(coefficients: np.ndarray) -> np.ndarray:
    n = coefficients.shape[-1]
    c = coefficients * (_sign_alternation(n) * (n / SQRT_TWO_PI))
    return np.fft.ifft(np.fft.ifftshift(c))


def to_momentum(state: BlochWaveState) -> MomentumLadder:
    return MomentumLadder(state.beta, u_to_ladder(state.periodic_part()))


def to_position(ladder: MomentumLadder, n_grid: int | None = None,
                drift_offset: float = 0.0) -> BlochWaveState:
    n = ladder.n_grid if n_grid is None else check_grid_size(n_grid)
    if n != ladder.n_grid:
        raise ValidationError("ladder length does not match n_grid")
    u = ladder_to_u(ladder.coefficients)
    x = grid(n)
    return BlochWaveState(n, ladder.beta, u * np.exp(1j * ladder.beta * x), drift_offset)


def translate(state: BlochWaveState, shift: float) -> BlochWaveState:
    """Exact spectral translation psi(X) -> psi(X - shift).

    The unfolded bookkeeping ``drift_offset`` advances by ``shift``.
    """
    c = u_to_ladder(state.periodic_part())
    c = c * np.exp(-1j * (mode_indices(state.n_grid) + state.beta) * shift)
    u = ladder_to_u(c)
    return BlochWaveState(state.n_grid, state.beta, u * np.exp(1j * state.beta * state.x),
                          state.drift_offset + shift)


# --- initial states ---------------------------------------------------------

def wrapped_gaussian(x: np.ndarray, x0: float, sigma: float) -> np.ndarray:
    """Periodic sum of exp(-(X - x0 + 2 pi k)^2 / (4 sigma^2)), unnormalized."""
    kmax = math.ceil(8 * sigma / TWO_PI) + 2
    # reduce x0 so the image window is centred on the packet
    x0 = math.remainder(x0, TWO_PI)
    out = np.zeros_like(x, dtype=float)
    for k in range(-kmax, kmax + 1):
        out += np.exp(-((x - x0 + TWO_PI * k) ** 2) / (4.0 * sigma**2))
    return out


def make_gaussian_packet(x0: float, sigma: float, beta: float, n_grid: int) -> BlochWaveState:
    """Normalized wrapped Gaussian Bloch wave centred at ``x0``.

    ``psi(X) ~ exp(i beta X) sum_k exp(-(X - x0 + 2 pi k)^2 / (4 sigma^2))``,
    so ``|psi|^2`` has standard deviation ``sigma``.  ``beta = 1/2`` is accepted
    and relabelled -1/2 without changing the samples.
    """
    if not (0.0 < sigma < np.pi / 4):
        raise ValidationError(f"sigma must lie in (0, pi/4), got {sigma}")
    n = check_grid_size(n_grid)
    b = float(beta)
    canonical_beta(b)
    x = grid(n)
    psi = np.exp(1j * b * x) * wrapped_gaussian(x, x0, sigma)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * TWO_PI / n)
    return BlochWaveState(n, b, psi)


def from_envelope(envelope: np.ndarray, beta: float) -> BlochWaveState:
    """State whose samples on [-pi, pi) equal ``envelope`` for quasimomentum ``beta``.

    This is the single-well convention psi_beta(X, 0) = phi(X): it is a proper
    Bloch wave only when the envelope vanishes at the cell edges.
    """
    env = np.asarray(envelope, dtype=np.complex128)
    n = check_grid_size(env.shape[0])
    env = env / math.sqrt(np.sum(np.abs(env) ** 2) * TWO_PI / n)
    return BlochWaveState(n, beta, env)


# --- observables ------------------------------------------------------------

def ladder_moments(coefficients: np.ndarray, beta: float, hbar: float) -> tuple[float, float, float]:
    """(norm^2, <P>, <E>) from ladder coefficients."""
    w = np.abs(coefficients) ** 2
    k = mode_indices(coefficients.shape[-1]) + beta
    return float(w.sum()), float(hbar * np.dot(k, w)), float(0.5 * hbar**2 * np.dot(k * k, w))


def mean_momentum_beta(state: BlochWaveState, hbar: float) -> float:
    """<P>_beta = hbar sum_m (m + beta) |psi~(m)|^2."""
    return ladder_moments(to_momentum(state).coefficients, state.beta, hbar)[1]


def kinetic_energy_beta(state: BlochWaveState, hbar: float) -> float:
    """<E>_beta = (hbar^2 / 2) sum_m (m + beta)^2 |psi~(m)|^2."""
    return ladder_moments(to_momentum(state).coefficients, state.beta, hbar)[2]


def spectral_derivative(state: BlochWaveState) -> np.ndarray:
    """d psi / dX on the grid, exact for band-limited u."""
    c = u_to_ladder(state.periodic_part())
    du = ladder_to_u(1j * (mode_indices(state.n_grid) + state.beta) * c)
    return du * np.exp(1j * state.beta * state.x)


def probability_current(state: BlochWaveState, hbar: float, atol: float = 1e-12) -> np.ndarray:
    """J(X) = i (hbar/2) (psi d psi* - c.c.) = hbar Im(psi* d psi)."""
    psi = state.samples
    dpsi = spectral_derivative(state)
    j = 0.5j * hbar * (psi * np.conj(dpsi) - np.conj(psi) * dpsi)
    scale = max(1.0, float(np.max(np.abs(j.real))))
    if np.max(np.abs(j.imag)) > atol * scale:
        raise NumericalGuardError("current has a non-negligible imaginary part")
    return j.real


def expectation(state: BlochWaveState, f: np.ndarray) -> float:
    """Grid quadrature of f(X) |psi(X)|^2 over one period."""
    return float(np.sum(f * np.abs(state.samples) ** 2) * state.dx)


def fourier_moment(state: BlochWaveState) -> complex:
    """A = integral exp(iX) |psi(X)|^2 dX."""
    return complex(np.sum(np.exp(1j * state.x) * np.abs(state.samples) ** 2) * state.dx)


def circular_mean_position(state: BlochWaveState) -> float:
    """Angle of the first trigonometric moment of |psi|^2, in [-pi, pi)."""
    a = fourier_moment(state)
    return math.remainder(math.atan2(a.imag, a.real), TWO_PI)


def unfolded_mean_position(state: BlochWaveState, reference: float = 0.0) -> float:
    """Circular mean lifted to the branch nearest ``reference + drift_offset``."""
    target = reference + state.drift_offset
    c = circular_mean_position(state)
    return c + TWO_PI * round((target - c) / TWO_PI)


def overlap(a: BlochWaveState, b: BlochWaveState) -> complex:
    """<a|b> over one period."""
    if a.n_grid != b.n_grid:
        raise ValidationError("grid sizes differ")
    return complex(np.vdot(a.samples, b.samples) * a.dx)


def fidelity(a: BlochWaveState, b: BlochWaveState) -> float:
    return abs(overlap(a, b)) ** 2 / (a.norm2() * b.norm2())
