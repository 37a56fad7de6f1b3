"""Direct solver for the HS equation at omega = 1.

The state is ``m = -u_xx``, advanced in the transport form::

    m_t + u m_x + 2 u_x (m + 1) = 0

with ``u_x = int_x^L m`` and ``u = -int_x^L u_x`` recovered after every
stage, so both vanish at the right end. ``q = sqrt(m + 1)`` obeys
``q_t + (u q)_x = 0``; since ``u(L) = 0`` the domain integral of ``q - 1``
changes only through the left-boundary flux ``u(-L) q(-L)``, which is
integrated alongside ``m`` with the same stage weights.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .field import SpatialGrid, coordinate_map, profile_on_grid

CFL = 0.5
U_FLOOR = 1e-3
# |i y| <= 2.8 is inside the RK4 stability region on the imaginary axis
_RK4_IMAG = 2.8


class BlowUpError(RuntimeError):
    """``min(m + 1)`` reached zero.

    Attributes
    ----------
    t : float
        Time at which the guard fired.
    """

    def __init__(self, msg, t):
        super().__init__(msg)
        self.t = t


class StepSizeError(ValueError):
    """Time step violates the transport CFL bound or the dispersive bound."""


class ConservationFault(RuntimeError):
    """Flux-corrected shift drifted beyond tolerance."""


class DecayWarning(UserWarning):
    """Recovered ``u`` or ``u_x`` is not small at the left end."""


def quad4(f, h):
    """End-corrected trapezoid rule, fourth order on a closed uniform grid."""
    w = np.ones_like(f)
    w[[0, -1]] = 3.0 / 8.0
    w[[1, -2]] = 7.0 / 6.0
    w[[2, -3]] = 23.0 / 24.0
    return h * float(np.dot(w, f))


def shift_integral(m, h):
    """``int (sqrt(m + 1) - 1) dx`` over the grid."""
    return quad4(np.sqrt(m + 1.0) - 1.0, h)


def recover_u(m, h, warn_tol=1e-3):
    """Double antiderivative of ``-m`` anchored at the right end.

    Returns
    -------
    u, u_x : ndarray
    health : dict
        ``|u(-L)|`` and ``|u_x(-L)|``.
    """
    m = np.asarray(m, dtype=np.float64)
    ux = _kernels.cum_right(m, h)
    u = -_kernels.cum_right(ux, h)
    health = {"u_left": abs(float(u[0])), "ux_left": abs(float(ux[0]))}
    if max(health.values()) > warn_tol:
        warnings.warn(f"left-boundary residual {max(health.values()):.3g} exceeds {warn_tol:g}",
                      DecayWarning, stacklevel=2)
    return u, ux, health


@dataclass(frozen=True)
class EvolverState:
    """Immutable snapshot.

    Attributes
    ----------
    grid : SpatialGrid
        Closed grid (both ends are nodes).
    t : float
    m, u, ux : ndarray
    c_initial : float
        Shift integral at ``t = 0``.
    flux : float
        ``int_0^t u(-L) q(-L) dt``, the amount of ``q - 1`` that left the domain.
    epsilon0 : float
    steps : int
    """

    grid: SpatialGrid
    t: float
    m: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    c_initial: float
    flux: float = 0.0
    epsilon0: float = 1e-3
    steps: int = 0

    @property
    def x(self):
        return self.grid.x

    @property
    def h(self):
        return self.grid.h

    @property
    def c_domain(self):
        return shift_integral(self.m, self.h)

    @property
    def conservation_drift(self):
        """Flux-corrected ``c(t) - c(0)``."""
        return self.c_domain - self.flux - self.c_initial

    @property
    def raw_drift(self):
        """Uncorrected domain drift (includes what radiated out on the left)."""
        return self.c_domain - self.c_initial

    @property
    def min_m1(self):
        return float(np.min(self.m) + 1.0)


def evolution_half_width(profile_L, xi_max=0.0, T=0.0, factor=4.0):
    """Domain half-width ``max(factor L, 1.2 |xi| T + L)``."""
    return max(factor * profile_L, 1.2 * abs(xi_max) * T + profile_L)


def init_state(profile, L=None, N=4096):
    """State at ``t = 0`` on a closed grid of half-width ``L``.

    Parameters
    ----------
    profile : InitialProfile
    L : float, optional
        Evolution half-width; defaults to four times the profile's.
    N : int
    """
    L = float(L) if L is not None else evolution_half_width(profile.grid.L)
    grid = SpatialGrid(L, int(N), periodic=False)
    prof = profile_on_grid(profile, grid)
    m = np.array(prof.m0, dtype=np.float64)
    if np.min(m) + 1.0 <= 0.0:
        raise BlowUpError("initial data violates m + 1 > 0", 0.0)
    u, ux, _ = recover_u(m, grid.h)
    return EvolverState(grid=grid, t=0.0, m=m, u=u, ux=ux,
                        c_initial=shift_integral(m, grid.h), epsilon0=prof.epsilon0)


def max_stable_dt(state, cfl=CFL, u_floor=U_FLOOR):
    """Largest admissible ``dt``.

    Two limits apply: the transport bound ``cfl h / max(|u|, u_floor)`` and
    the dispersive bound from the linear part, whose eigenvalues
    ``-2i/kappa`` reach ``|lambda| = D/pi`` on a domain of length ``D``.
    """
    transport = cfl * state.h / max(float(np.max(np.abs(state.u))), u_floor)
    D = 2.0 * state.grid.L
    dispersive = _RK4_IMAG * math.pi / D
    return min(transport, dispersive)


def default_dt(state):
    """Fixed step used by runs that do not set one: ``min(0.02, 0.7 max_stable_dt)``."""
    return min(0.02, 0.7 * max_stable_dt(state))


def _stage(m, h):
    r, u, ux = _kernels.hs_rhs(m, h)
    return r, u[0] * math.sqrt(max(m[0] + 1.0, 0.0))


def step(state, dt, check=True):
    """One classical RK4 step; ``dt`` may be negative.

    Raises
    ------
    StepSizeError
        If ``|dt|`` exceeds :func:`max_stable_dt` (when ``check``).
    BlowUpError
        If ``min(m + 1) <= 0`` after the step.
    """
    h = state.h
    if check and abs(dt) > max_stable_dt(state) * (1.0 + 1e-12):
        raise StepSizeError(f"|dt| = {abs(dt):.3g} exceeds the stable bound {max_stable_dt(state):.3g}")
    m = state.m
    k1, f1 = _stage(m, h)
    k2, f2 = _stage(m + 0.5 * dt * k1, h)
    k3, f3 = _stage(m + 0.5 * dt * k2, h)
    k4, f4 = _stage(m + dt * k3, h)
    mn = m + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    flux = state.flux + dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
    t = state.t + dt
    if not np.all(np.isfinite(mn)) or np.min(mn) + 1.0 <= 0.0:
        raise BlowUpError(f"min(m + 1) <= 0 at t = {t:.6g}", t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DecayWarning)
        u, ux, _ = recover_u(mn, h)
    return replace(state, t=t, m=mn, u=u, ux=ux, flux=flux, steps=state.steps + 1)


def evolve_to(state, T, dt=None, check_every=50, conservation_tol=None, log=None):
    """Advance to time ``T`` with a fixed step.

    Parameters
    ----------
    state : EvolverState
    T : float
        Target time, ``T >= state.t``.
    dt : float, optional
        Requested step; the number of steps is ``ceil((T - t)/dt)`` and the
        step actually used divides the interval evenly.
    check_every : int
        Steps between conservation checks.
    conservation_tol : float, optional
        Defaults to ``1e-6 max(|c0|, 1)``.
    log : list, optional
        Receives ``(t, c_domain, flux, drift, min(m+1))`` at each check.

    Raises
    ------
    ConservationFault, BlowUpError, StepSizeError
    """
    if T < state.t - 1e-12:
        raise ValueError("target time is behind the state")
    if T - state.t <= 1e-12:
        return state
    dt = default_dt(state) if dt is None else float(dt)
    n = max(1, math.ceil((T - state.t) / dt - 1e-9))
    dt_eff = (T - state.t) / n
    tol = conservation_tol if conservation_tol is not None else 1e-6 * max(abs(state.c_initial), 1.0)
    t0 = state.t
    for i in range(n):
        state = step(state, dt_eff, check=(i % check_every == 0))
        if (i + 1) % check_every == 0 or i == n - 1:
            if i == n - 1:
                state = replace(state, t=T)
            drift = state.conservation_drift
            if log is not None:
                log.append((state.t, state.c_domain, state.flux, drift, state.min_m1))
            if abs(drift) > tol:
                raise ConservationFault(f"shift drift {drift:.3g} exceeds {tol:.3g} at t = {state.t:.6g}")
    # guard against accumulated rounding in t
    if abs(state.t - T) > 1e-9 * max(1.0, T - t0):
        state = replace(state, t=T)
    return state


def sample_u(state, xq, margin=0.0):
    """Cubic interpolation of ``u`` at ``xq`` (node-aligned queries are exact)."""
    xq = np.asarray(xq, dtype=np.float64)
    lo = state.x[0] + margin
    hi = state.x[-1] - margin
    if np.any(xq < lo) or np.any(xq > hi):
        raise ValueError(f"query outside [{lo:g}, {hi:g}]")
    return CubicSpline(state.x, state.u)(xq)


def coordinates(state):
    """Coordinate map ``x <-> y`` of the evolved state."""
    return coordinate_map(state.m, state.grid)
