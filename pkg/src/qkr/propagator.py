"""Split-operator Floquet evolution: free flight in the momentum ladder, kick on the grid.

One period maps the state just after kick ``t - 1`` to the state just after
kick ``t``: free propagation first, then the kick.
"""

from __future__ import annotations

import warnings

import numpy as np

from .core import (
    AliasingWarning,
    BlochWaveState,
    KickedRotorParams,
    NumericalGuardError,
    ObservableSeries,
    ValidationError,
    grid,
    ladder_moments,
    ladder_to_u,
    mode_indices,
    u_to_ladder,
)

EDGE_MARGIN = 4
EDGE_THRESHOLD = 1e-10
NORM_ABORT = 1e-8


def free_phase(n_grid: int, beta: float, hbar: float, tau: float = 1.0) -> np.ndarray:
    k = mode_indices(n_grid) + beta
    return np.exp(-0.5j * hbar * tau * k * k)


def kick_phase(n_grid: int, kappa: float) -> np.ndarray:
    return np.exp(-1j * kappa * np.cos(grid(n_grid)))


def edge_occupancy(coefficients: np.ndarray, margin: int = EDGE_MARGIN) -> float:
    """Probability carried by the ``margin`` outermost modes on each side."""
    w = np.abs(coefficients) ** 2
    return float(w[:margin].sum() + w[-margin:].sum())


def _check_edge(coefficients: np.ndarray) -> bool:
    occ = edge_occupancy(coefficients)
    if occ > EDGE_THRESHOLD:
        warnings.warn(
            f"ladder occupancy {occ:.3e} within {EDGE_MARGIN} modes of the grid edge; "
            "increase n_grid",
            AliasingWarning,
            stacklevel=3,
        )
        return False
    return True


def free_evolve(state: BlochWaveState, params: KickedRotorParams, tau: float = 1.0) -> BlochWaveState:
    """Free flight over a fraction ``tau`` of the kick period (unitary)."""
    if not (0.0 <= tau <= 1.0):
        raise ValidationError(f"tau must lie in [0, 1], got {tau}")
    c = u_to_ladder(state.periodic_part())
    c *= free_phase(state.n_grid, state.beta, params.hbar_eff, tau)
    u = ladder_to_u(c)
    return state.replace(samples=u * np.exp(1j * state.beta * state.x))


def kick(state: BlochWaveState, params: KickedRotorParams) -> BlochWaveState:
    out = state.replace(samples=state.samples * kick_phase(state.n_grid, params.kappa))
    _check_edge(u_to_ladder(out.periodic_part()))
    return out


def floquet_step(state: BlochWaveState, params: KickedRotorParams) -> BlochWaveState:
    return kick(free_evolve(state, params, 1.0), params)


def evolve(state: BlochWaveState, params: KickedRotorParams, t_kicks: int,
           record: bool = True, snapshots=()):
    """Apply ``t_kicks`` Floquet periods.

    Returns ``(final_state, series, snaps)`` where ``series`` holds ``<P>``,
    ``<E>`` and the norm at t = 0..t_kicks (``None`` when ``record`` is false)
    and ``snaps`` maps each requested kick index to its state.
    """
    if t_kicks < 0:
        raise ValidationError("t_kicks must be >= 0")
    n, beta, hbar = state.n_grid, state.beta, params.hbar_eff
    x = grid(n)
    bloch = np.exp(1j * beta * x)
    fp = free_phase(n, beta, hbar)
    kp = kick_phase(n, params.kappa)
    wanted = set(int(s) for s in snapshots)
    snaps = {}

    c = u_to_ladder(state.periodic_part())
    norm0 = float(np.sum(np.abs(c) ** 2))
    rows = [ladder_moments(c, beta, hbar)] if record else None
    if 0 in wanted:
        snaps[0] = state
    warned = False
    for t in range(1, t_kicks + 1):
        u = ladder_to_u(c * fp) * kp
        c = u_to_ladder(u)
        if not warned:
            warned = not _check_edge(c)
        nrm, p, e = ladder_moments(c, beta, hbar)
        if abs(nrm - norm0) > NORM_ABORT:
            raise NumericalGuardError(f"norm drift {nrm - norm0:.3e} at kick {t}")
        if record:
            rows.append((nrm, p, e))
        if t in wanted:
            snaps[t] = state.replace(samples=ladder_to_u(c) * bloch)

    final = state if t_kicks == 0 else state.replace(samples=ladder_to_u(c) * bloch)
    series = None
    if record:
        arr = np.array(rows)
        series = ObservableSeries(np.arange(t_kicks + 1), arr[:, 1], arr[:, 2], arr[:, 0])
    return final, series, snaps
