"""Initial data, grids and the x <-> y coordinate map.

A profile carries ``u0`` and its derivatives at the nodes together with
``m0 = -u0''`` and ``m0'`` at the interval midpoints, which the fourth-order
Jost stepper needs. Every accepted profile satisfies ``min(m0 + 1) >= eps0``.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from ._kernels import cum_right


class HypothesisViolation(ValueError):
    """``m0 + 1`` is not bounded below by the positive margin."""


class TruncationError(ValueError):
    """Profile tails do not decay inside the grid."""


class CoordinateFault(RuntimeError):
    """The y(x) table is not strictly increasing."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on ``[-L, L]``.

    With ``periodic=True`` the nodes are ``-L + h i`` with ``h = 2L/N`` (the
    right end is omitted); otherwise ``h = 2L/(N-1)`` and both ends are nodes.
    """

    L: float
    N: int
    periodic: bool = True

    def __post_init__(self):
        if not (self.L > 0):
            raise ValueError("grid half-width must be positive")
        if self.N < 256:
            raise ValueError("grid needs at least 256 nodes")

    @property
    def h(self):
        return 2.0 * self.L / (self.N if self.periodic else self.N - 1)

    @property
    def x(self):
        return -self.L + self.h * np.arange(self.N)

    @property
    def x_mid(self):
        return self.x[:-1] + 0.5 * self.h

    @property
    def right(self):
        """Right end of the represented interval (``L`` in both layouts)."""
        return self.L

    def index_of(self, x0):
        """Index of the node nearest ``x0``."""
        return int(np.clip(np.rint((x0 + self.L) / self.h), 0, self.N - 1))


@dataclass(frozen=True)
class InitialProfile:
    """Sampled initial data with derived ``m0`` and hypothesis margins.

    Attributes
    ----------
    grid : SpatialGrid
    u0, u0_x, u0_xx : ndarray
        Samples of ``u0`` and its first two derivatives at the nodes.
    m0, m0_x : ndarray
        ``-u0''`` and its derivative at the nodes.
    m0_mid, m0_x_mid : ndarray
        The same at interval midpoints.
    epsilon0 : float
        Required lower margin for ``m0 + 1``.
    descriptor : dict
        Family description used to rebuild the profile on another grid.
    method : str
        How derivatives were obtained (``analytic``, ``spectral``, ``fd4``).
    """

    grid: SpatialGrid
    u0: np.ndarray
    u0_x: np.ndarray
    u0_xx: np.ndarray
    m0: np.ndarray
    m0_x: np.ndarray
    m0_mid: np.ndarray
    m0_x_mid: np.ndarray
    epsilon0: float = 1e-3
    descriptor: dict = field(default_factory=dict)
    method: str = "analytic"

    @property
    def x(self):
        return self.grid.x

    @property
    def margin(self):
        """``min(m0 + 1)`` over nodes and midpoints."""
        return float(min(np.min(self.m0), np.min(self.m0_mid)) + 1.0)


@dataclass(frozen=True)
class CoordinateMap:
    """``y(x) = x - int_x^L (sqrt(m+1) - 1)`` and its inverse."""

    grid: SpatialGrid
    x: np.ndarray
    y: np.ndarray
    _inv: object = field(repr=False, compare=False, default=None)

    def y_of_x(self, xq):
        return np.interp(xq, self.x, self.y)

    def x_of_y(self, yq):
        return self._inv(yq)


# ---------------------------------------------------------------------------
# analytic families
# ---------------------------------------------------------------------------


def _gauss_terms(xs, A, sigma, x0):
    # u, u', u'', u''' of A exp(-(x-x0)^2/sigma^2)
    s = (xs - x0) / sigma
    e = A * np.exp(-s * s)
    u = e
    u1 = e * (-2.0 * s) / sigma
    u2 = e * (4.0 * s * s - 2.0) / sigma**2
    u3 = e * (-8.0 * s**3 + 12.0 * s) / sigma**3
    return u, u1, u2, u3


def _components(desc):
    kind = desc["kind"]
    if kind == "zero":
        return []
    if kind == "gaussian":
        return [(float(desc.get("A", 0.1)), float(desc.get("sigma", 1.0)), float(desc.get("x0", 0.0)))]
    if kind == "gaussians":
        return [tuple(float(v) for v in c) for c in desc["components"]]
    raise ValueError(f"not an analytic family: {kind!r}")


def _analytic_samples(desc, xs):
    u = np.zeros_like(xs)
    u1 = np.zeros_like(xs)
    u2 = np.zeros_like(xs)
    u3 = np.zeros_like(xs)
    for A, sigma, x0 in _components(desc):
        if sigma <= 0:
            raise ValueError("gaussian width must be positive")
        a, b, c, d = _gauss_terms(xs, A, sigma, x0)
        u += a
        u1 += b
        u2 += c
        u3 += d
    return u, u1, u2, u3


def _check(profile, tail_tol):
    margin = profile.margin
    if not margin >= profile.epsilon0:
        raise HypothesisViolation(
            f"min(m0 + 1) = {margin:.6g} is below epsilon0 = {profile.epsilon0:g}"
        )
    n = profile.grid.N
    edge = max(2, int(math.ceil(0.01 * n)))
    for name in ("u0", "u0_x", "u0_xx"):
        arr = getattr(profile, name)
        tail = max(np.max(np.abs(arr[:edge])), np.max(np.abs(arr[-edge:])))
        if tail >= tail_tol:
            raise TruncationError(f"|{name}| = {tail:.3g} at the grid edge exceeds tail_tol = {tail_tol:g}")
    return profile


def build_profile(desc, grid, epsilon0=1e-3, tail_tol=1e-10):
    """Build and validate a profile.

    Parameters
    ----------
    desc : dict
        ``{"kind": "zero"}``, ``{"kind": "gaussian", "A", "sigma", "x0"}``,
        ``{"kind": "gaussians", "components": [(A, sigma, x0), ...]}`` or
        ``{"kind": "file", "path": ...}``.
    grid : SpatialGrid
        Target grid; ignored for file input, whose own nodes are used.
    epsilon0 : float
        Required lower bound of ``m0 + 1``.
    tail_tol : float
        Bound on ``|u0|, |u0'|, |u0''|`` over the outer 1% of nodes.

    Returns
    -------
    InitialProfile

    Raises
    ------
    HypothesisViolation, TruncationError
    """
    desc = dict(desc)
    if desc["kind"] == "file":
        return _check(load_profile_file(desc["path"], epsilon0), tail_tol)
    xs = grid.x
    u, u1, u2, u3 = _analytic_samples(desc, xs)
    _, _, u2m, u3m = _analytic_samples(desc, grid.x_mid)
    prof = InitialProfile(
        grid=grid, u0=u, u0_x=u1, u0_xx=u2, m0=-u2, m0_x=-u3,
        m0_mid=-u2m, m0_x_mid=-u3m, epsilon0=float(epsilon0),
        descriptor=desc, method="analytic",
    )
    return _check(prof, tail_tol)


def profile_on_grid(profile, grid, tail_tol=1e-10):
    """Rebuild ``profile`` on another grid (zero extension for sampled data)."""
    if profile.descriptor.get("kind") in ("zero", "gaussian", "gaussians"):
        return build_profile(profile.descriptor, grid, profile.epsilon0, tail_tol)
    spl = CubicSpline(profile.x, profile.u0)
    xs = grid.x
    inside = (xs >= profile.x[0]) & (xs <= profile.x[-1])
    u = np.where(inside, spl(np.clip(xs, profile.x[0], profile.x[-1])), 0.0)
    return profile_from_samples(grid, u, profile.epsilon0, method="fd4",
                                descriptor=profile.descriptor, tail_tol=tail_tol)


# ---------------------------------------------------------------------------
# sampled data
# ---------------------------------------------------------------------------


def _spectral_derivs(u, h, orders):
    n = u.shape[0]
    kk = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    U = np.fft.rfft(u)
    out = []
    for p in orders:
        D = (1j * kk) ** p
        if n % 2 == 0 and p % 2 == 1:
            D[-1] = 0.0
        out.append(np.fft.irfft(U * D, n))
    return out


def _spectral_shift(f, h, shift):
    n = f.shape[0]
    kk = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    F = np.fft.rfft(f) * np.exp(1j * kk * shift)
    if n % 2 == 0:
        F[-1] = F[-1].real * np.cos(kk[-1] * shift)
    return np.fft.irfft(F, n)


def _fd4(f, h, order):
    # fourth-order central differences, one-sided 6-point closures at the ends
    d = np.empty_like(f)
    if order == 1:
        d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
        d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
        d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
        d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
        d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    elif order == 2:
        d[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
        c0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / (12 * h * h)
        c1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / (12 * h * h)
        d[0] = c0 @ f[:6]
        d[1] = c1 @ f[:6]
        d[-1] = c0 @ f[::-1][:6]
        d[-2] = c1 @ f[::-1][:6]
    else:
        raise ValueError("fd4 supports first and second derivatives")
    return d


def _midpoints_cubic(f):
    # four-point Lagrange interpolation to interval midpoints
    m = np.empty(f.shape[0] - 1)
    m[1:-1] = (-f[:-3] + 9 * f[1:-2] + 9 * f[2:-1] - f[3:]) / 16.0
    m[0] = (5 * f[0] + 15 * f[1] - 5 * f[2] + f[3]) / 16.0
    m[-1] = (5 * f[-1] + 15 * f[-2] - 5 * f[-3] + f[-4]) / 16.0
    return m


def derive_m(u, grid, method="spectral", tail_tol=1e-6):
    """Return ``m = -u''`` from samples.

    Parameters
    ----------
    u : ndarray
        Samples on ``grid``; must decay at both ends.
    method : {"spectral", "fd4"}
        FFT differentiation on the periodic embedding, or fourth-order
        central differences.
    tail_tol : float
        Edge magnitude above which the input is flagged as non-decaying.

    Raises
    ------
    TruncationError
        If ``u`` does not decay at the grid ends.
    """
    u = np.asarray(u, dtype=np.float64)
    edge = max(np.abs(u[0]), np.abs(u[-1]))
    if edge > tail_tol:
        raise TruncationError(f"input does not decay at the grid ends (|u| = {edge:.3g})")
    if method == "spectral":
        (u2,) = _spectral_derivs(u, grid.h, (2,))
    elif method == "fd4":
        u2 = _fd4(u, grid.h, 2)
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    return -u2


def profile_from_samples(grid, u, epsilon0=1e-3, method="spectral", descriptor=None,
                         tail_tol=1e-10):
    """Profile from ``u0`` samples with derivatives by ``method``."""
    u = np.asarray(u, dtype=np.float64)
    h = grid.h
    if method == "spectral":
        u1, u2, u3 = _spectral_derivs(u, h, (1, 2, 3))
        m_mid = -_spectral_shift(u2, h, 0.5 * h)[:-1]
        mx_mid = -_spectral_shift(u3, h, 0.5 * h)[:-1]
    elif method == "fd4":
        u1 = _fd4(u, h, 1)
        u2 = _fd4(u, h, 2)
        u3 = _fd4(u2, h, 1)
        m_mid = -_midpoints_cubic(u2)
        mx_mid = -_midpoints_cubic(u3)
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    prof = InitialProfile(
        grid=grid, u0=u, u0_x=u1, u0_xx=u2, m0=-u2, m0_x=-u3,
        m0_mid=m_mid, m0_x_mid=mx_mid, epsilon0=float(epsilon0),
        descriptor=dict(descriptor or {"kind": "samples"}), method=method,
    )
    return _check(prof, tail_tol)


def profile_from_m(grid, m, epsilon0=1e-3):
    """Scattering-ready profile from ``m`` samples alone.

    ``u`` is recovered by the anchored double antiderivative; ``m'`` and the
    midpoint values come from fourth-order differences and interpolation.
    """
    m = np.asarray(m, dtype=np.float64)
    h = grid.h
    ux = cum_right(m, h)
    u = -cum_right(ux, h)
    prof = InitialProfile(
        grid=grid, u0=u, u0_x=ux, u0_xx=-m, m0=m, m0_x=_fd4(m, h, 1),
        m0_mid=_midpoints_cubic(m), m0_x_mid=_midpoints_cubic(_fd4(m, h, 1)),
        epsilon0=float(epsilon0), descriptor={"kind": "m-samples"}, method="fd4",
    )
    if prof.margin < prof.epsilon0:
        raise HypothesisViolation(f"min(m + 1) = {prof.margin:.6g} is below epsilon0")
    return prof


def load_profile_file(path, epsilon0=1e-3):
    """Read a ``x,u0`` CSV and build a profile with fourth-order differences.

    The nodes must be strictly increasing, uniformly spaced to 1e-9 relative
    and symmetric about the origin (closed or periodic layout).
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "u0"]:
        raise ValueError(f"{path}: header must be exactly 'x,u0'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:] if a.strip()], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if data.shape[0] < 256:
        raise ValueError(f"{path}: need at least 256 samples")
    xs, u = data[:, 0], data[:, 1]
    dx = np.diff(xs)
    if np.any(dx <= 0):
        raise ValueError(f"{path}: x must be strictly increasing")
    h = float(np.mean(dx))
    if np.max(np.abs(dx - h)) > 1e-9 * h:
        raise ValueError(f"{path}: x spacing is not uniform to 1e-9 relative")
    n = xs.shape[0]
    if abs(xs[0] + xs[-1]) <= 1e-9 * h * n:
        grid = SpatialGrid(L=float(xs[-1]), N=n, periodic=False)
    elif abs(xs[0] + xs[-1] + h) <= 1e-9 * h * n:
        grid = SpatialGrid(L=float(-xs[0]), N=n, periodic=True)
    else:
        raise ValueError(f"{path}: grid must be symmetric about x = 0")
    return profile_from_samples(grid, u, epsilon0, method="fd4",
                                descriptor={"kind": "file", "path": str(path)}, tail_tol=np.inf)


# ---------------------------------------------------------------------------
# scaling and the y coordinate
# ---------------------------------------------------------------------------


def scale_omega(profile, omega, tail_tol=1e-10):
    """Map a profile for ``omega`` to the unit-omega profile.

    ``u~(x~) = omega^3 u(omega^-2 x~)`` on the grid stretched by ``omega^2``.
    """
    omega = float(omega)
    if not omega > 0:
        raise ValueError("omega must be positive")
    if omega == 1.0:
        return profile
    w2 = omega * omega
    g = profile.grid
    grid = SpatialGrid(L=g.L * w2, N=g.N, periodic=g.periodic)
    desc = dict(profile.descriptor)
    desc["omega_scaled"] = desc.get("omega_scaled", 1.0) * omega
    prof = replace(
        profile, grid=grid,
        u0=omega**3 * profile.u0, u0_x=omega * profile.u0_x, u0_xx=profile.u0_xx / omega,
        m0=profile.m0 / omega, m0_x=profile.m0_x / omega**3,
        m0_mid=profile.m0_mid / omega, m0_x_mid=profile.m0_x_mid / omega**3,
        descriptor=desc,
    )
    return _check(prof, tail_tol)


def _tail_q(m_nodes, m_mid, h):
    # int_{x_i}^{x_end} (sqrt(m+1) - 1) by Simpson per interval
    f = np.sqrt(m_nodes + 1.0) - 1.0
    fm = np.sqrt(m_mid + 1.0) - 1.0
    seg = h / 6.0 * (f[:-1] + 4.0 * fm + f[1:])
    out = np.zeros_like(f)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def coordinate_map(m, grid, m_mid=None):
    """Build ``y(x)`` and its monotone inverse.

    Parameters
    ----------
    m : ndarray
        Samples of ``m`` on ``grid``; ``m + 1 > 0`` required.
    m_mid : ndarray, optional
        Midpoint samples; when given, Simpson's rule is used per interval,
        otherwise the fourth-order tail integral of the evolver.
    """
    m = np.asarray(m, dtype=np.float64)
    if not np.min(m) + 1.0 > 0:
        raise HypothesisViolation("coordinate map needs m + 1 > 0")
    xs = grid.x
    if m_mid is not None:
        tail = _tail_q(m, np.asarray(m_mid), grid.h)
    else:
        tail = cum_right(np.sqrt(m + 1.0) - 1.0, grid.h)
    y = xs - tail
    if np.any(np.diff(y) <= 0):
        raise CoordinateFault("y(x) is not strictly increasing")
    return CoordinateMap(grid=grid, x=xs, y=y, _inv=PchipInterpolator(y, xs, extrapolate=False))


def profile_coordinate_map(profile):
    """Coordinate map of a profile using its midpoint tables."""
    return coordinate_map(profile.m0, profile.grid, profile.m0_mid)
