"""The scalar function delta, its expansion at k = 0 and endpoint constants.

``delta(k) = exp(i int_G nu(s)/(s-k) ds)`` on ``G = (-inf, -rho] U [rho, inf)``
with ``nu = -log(1 - |r|^2)/(2 pi)``.

Near the endpoints the natural local forms are::

    delta(k) = (k - k1)^{ i nu(k1)} exp(i beta1(k)),   k1 = -rho
    delta(k) = (k2 - k)^{-i nu(k2)} exp(i beta2(k)),   k2 = +rho

with principal logarithms; both ``beta_j`` are continuous at ``k_j`` and
their endpoint values are real.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .special import nu_of_modulus

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class NuDomainError(ValueError):
    """``1 - |r|^2`` is not bounded away from zero on the table."""


@dataclass(frozen=True)
class NuSpectrum:
    """Interpolant of ``nu`` over the whole scattering grid."""

    k: np.ndarray
    nu: np.ndarray
    spline: object = field(repr=False, compare=False)

    def __call__(self, s):
        return self.spline(s)

    @property
    def kmax(self):
        return float(self.k[-1])


@dataclass(frozen=True)
class NuTable:
    """``nu`` restricted to the two half-lines outside ``(-rho, rho)``.

    Attributes
    ----------
    rho : float
        Stationary radius.
    spectrum : NuSpectrum
    evenness_residual : float
        ``max |nu(s) - nu(-s)|`` over the table nodes.
    edge_value : float
        Largest ``nu`` at the outermost nodes (tail truncation bound).
    """

    rho: float
    spectrum: NuSpectrum
    evenness_residual: float = 0.0
    edge_value: float = 0.0

    def nu(self, s):
        s = np.asarray(s, dtype=np.float64)
        out = self.spectrum(s)
        return np.where(np.abs(s) >= self.rho, np.maximum(out, 0.0), 0.0)

    @property
    def kmax(self):
        return self.spectrum.kmax

    def panels(self, extra=()):
        """Panel break points covering both half-lines."""
        ks = self.spectrum.k
        right = ks[(ks > self.rho) & (ks < self.kmax)]
        pts = np.concatenate(([self.rho], right, [self.kmax]))
        brk = [np.concatenate((-pts[::-1], )), pts]
        out = []
        for b in brk:
            e = [v for v in extra if b[0] < v < b[-1]]
            if e:
                b = np.unique(np.concatenate((b, e)))
            out.append(b)
        return out


def nu_spectrum(data, gap_min=0.0):
    """``nu`` on the scattering grid with a cubic interpolant.

    Raises
    ------
    NuDomainError
        If ``1 - |r|^2 <= gap_min`` anywhere.
    """
    r2 = np.abs(data.r) ** 2
    if np.any(1.0 - r2 <= gap_min):
        raise NuDomainError(f"1 - |r|^2 drops to {np.min(1.0 - r2):.3g}")
    nu = nu_of_modulus(r2)
    return NuSpectrum(k=np.asarray(data.k), nu=nu, spline=CubicSpline(data.k, nu))


def nu_table(data, rho, gap_min=0.0):
    """Restrict ``nu`` to the contour for the stationary radius ``rho``.

    ``data`` may be a ScatteringData or an already built NuSpectrum.
    """
    spectrum_ = data if isinstance(data, NuSpectrum) else nu_spectrum(data, gap_min)
    rho = float(rho)
    if not rho > 0:
        raise ValueError("stationary radius must be positive")
    if rho >= spectrum_.kmax:
        raise ValueError("stationary radius lies beyond the scattering grid")
    even = float(np.max(np.abs(spectrum_.nu - spectrum_.nu[::-1])))
    edge = float(max(spectrum_.nu[0], spectrum_.nu[-1]))
    return NuTable(rho=rho, spectrum=spectrum_, evenness_residual=even, edge_value=edge)


def table_from_function(nu_fn, rho, kmax=8.0, n=4097):
    """Build a table from a callable ``nu(s)``; used for closed-form checks."""
    k = np.linspace(-kmax, kmax, n)
    vals = np.asarray(nu_fn(k), dtype=np.float64)
    spectrum_ = NuSpectrum(k=k, nu=vals, spline=_PiecewiseExact(nu_fn))
    return NuTable(rho=float(rho), spectrum=spectrum_,
                   evenness_residual=float(np.max(np.abs(vals - vals[::-1]))),
                   edge_value=float(max(vals[0], vals[-1])))


class _PiecewiseExact:
    # adapter so a plain callable can stand in for the spline
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, s):
        return np.asarray(self.fn(np.asarray(s, dtype=np.float64)), dtype=np.float64)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _nodes(breaks):
    a = breaks[:-1, None]
    b = breaks[1:, None]
    half = 0.5 * (b - a)
    s = (a + half * (1.0 + _GL_X[None, :])).ravel()
    w = (half * _GL_W[None, :]).ravel()
    return s, w


def _cauchy(table, k):
    # int_G nu(s)/(s-k) ds for k off G, singularity subtracted at the
    # nearest contour point
    k = complex(k)
    rho = table.rho
    kr = k.real
    if abs(kr) >= rho:
        c = kr
    else:
        c = -rho if kr < 0 else rho
    if abs(c) > table.kmax:
        c = math.copysign(table.kmax, c)
    nu_c = float(table.nu(c)) if abs(c) >= rho else 0.0
    total = 0.0 + 0.0j
    for br in table.panels(extra=(c,)):
        s, w = _nodes(br)
        f = (table.nu(s) - nu_c) / (s - k)
        total += np.dot(w, f)
    if nu_c != 0.0:
        # nu_c times int_G ds/(s-k), principal logs are continuous along s
        R = table.kmax
        lg = (np.log(-rho - k) - np.log(-R - k)) + (np.log(R - k) - np.log(rho - k))
        total += nu_c * lg
    return total


def delta_eval(table, k, side=None, eps=(1e-5, 1e-6)):
    """``delta(k)`` off the contour, or a boundary value on it.

    Parameters
    ----------
    table : NuTable
    k : complex
    side : {None, "+", "-"}
        For real ``k`` on the contour, the boundary value from the upper
        (``"+"``) or lower (``"-"``) half plane, obtained at ``k +- i eps``
        and extrapolated linearly to ``eps = 0``.
    """
    k = complex(k)
    if side is None:
        if k.imag == 0.0 and abs(k.real) >= table.rho:
            raise ValueError("k lies on the contour; pass side='+' or '-'")
        return complex(np.exp(1j * _cauchy(table, k)))
    sgn = 1.0 if side == "+" else -1.0
    e1, e2 = eps
    v1 = np.exp(1j * _cauchy(table, k.real + 1j * sgn * e1))
    v2 = np.exp(1j * _cauchy(table, k.real + 1j * sgn * e2))
    return complex(v2 + (v2 - v1) * e2 / (e1 - e2))


def jump_residual(table, s):
    """``|delta+(s)/delta-(s) - (1 - |r(s)|^2)|`` for real ``s`` on the contour."""
    dp = delta_eval(table, s, "+")
    dm = delta_eval(table, s, "-")
    target = math.exp(-2.0 * math.pi * float(table.nu(s)))
    return abs(dp / dm - target)


@dataclass(frozen=True)
class DeltaExpansion:
    """Coefficient of the linear term ``delta(k) = 1 + i delta1 k + O(k^2)``."""

    delta1: float
    imag_part: float
    tail_bound: float


def delta1(table):
    """``delta1 = int_G nu(s)/s^2 ds``.

    The integral is accumulated in complex arithmetic so that the imaginary
    part of the computed value is reported, not assumed.
    """
    if not table.rho > 0:
        raise ValueError("stationary radius must be positive")
    total = 0.0 + 0.0j
    for br in table.panels():
        s, w = _nodes(br)
        total += np.dot(w, table.nu(s) / (s.astype(np.complex128) ** 2))
    tail = 2.0 * table.edge_value / table.kmax
    return DeltaExpansion(delta1=float(total.real), imag_part=float(total.imag), tail_bound=tail)


def _split_integral(table, j, R):
    # regularized endpoint value with near piece [k_j - R, k_j] (j=1) or
    # [k_j, k_j + R] (j=2), clipped to the grid
    rho = table.rho
    kj = -rho if j == 1 else rho
    nu_j = float(table.nu(kj))
    R = min(float(R), table.kmax - rho)
    total = 0.0
    for br in table.panels(extra=(kj - R, kj + R)):
        s, w = _nodes(br)
        near = (s >= kj - R) & (s <= kj) if j == 1 else (s >= kj) & (s <= kj + R)
        f = np.where(near, table.nu(s) - nu_j, table.nu(s)) / (s - kj)
        total += float(np.dot(w, f))
    # the subtracted log: B_1 = -log R, B_2 = +log R
    B = -math.log(R) if j == 1 else math.log(R)
    return total + nu_j * B, nu_j, B


def beta_at_stationary(table, j, radius=1.0):
    """Regularized endpoint value ``beta_j(k_j)``.

    Returns
    -------
    dict
        ``value`` (complex, real up to rounding), ``nu`` (``nu(k_j)``),
        ``B`` (branch constant), ``radius`` (after clipping).
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    val, nu_j, B = _split_integral(table, j, radius)
    return {"value": complex(val), "nu": nu_j, "B": B, "radius": min(radius, table.kmax - table.rho)}


def beta_of_k(table, j, k, radius=1.0):
    """``beta_j(k)`` off the contour near ``k_j``.

    Evaluated with the singularity subtracted at ``k_j`` (not at the nearest
    contour point as in :func:`delta_eval`), so comparing the local form with
    ``delta_eval`` is a genuine two-route check of the branch constants.
    """
    k = complex(k)
    rho = table.rho
    kj = -rho if j == 1 else rho
    nu_j = float(table.nu(kj))
    R = min(float(radius), table.kmax - rho)
    lo, hi = (kj - R, kj) if j == 1 else (kj, kj + R)
    total = 0.0 + 0.0j
    for br in table.panels(extra=(kj - R, kj + R)):
        s, w = _nodes(br)
        near = (s >= lo) & (s <= hi)
        total += np.dot(w, np.where(near, table.nu(s) - nu_j, table.nu(s)) / (s - k))
    # nu_j times the near-piece integral of 1/(s-k), then the local log
    total += nu_j * (np.log(hi - k) - np.log(lo - k))
    if j == 1:
        return total - nu_j * np.log(k - kj)
    return total + nu_j * np.log(kj - k)


def local_form(table, j, k, beta):
    """``(k - k1)^{i nu1} e^{i beta}`` for j=1, ``(k2 - k)^{-i nu2} e^{i beta}`` for j=2."""
    k = complex(k)
    kj = -table.rho if j == 1 else table.rho
    nu_j = float(table.nu(kj))
    if j == 1:
        return complex(np.exp(1j * nu_j * np.log(k - kj) + 1j * beta))
    return complex(np.exp(-1j * nu_j * np.log(kj - k) + 1j * beta))


def representation_residual(table, j, k):
    """``|delta(k) / local_form(k) - 1|`` with ``beta_j(k)`` from :func:`beta_of_k`."""
    return float(abs(delta_eval(table, k) / local_form(table, j, k, beta_of_k(table, j, k)) - 1.0))


def representation_probes(table, fractions=(0.01, 0.05)):
    """Probe points at distance ``f rho`` from each ``k_j``: gap side and both half planes."""
    rho = table.rho
    out = []
    for j, kj in ((1, -rho), (2, rho)):
        inward = 1.0 if j == 1 else -1.0
        for f in fractions:
            d = f * rho
            for k in (kj + inward * d, kj + 1j * d, kj - 1j * d):
                out.append((j, complex(k)))
    return out


def holder_constant(table, j, fractions=(0.001, 0.003, 0.01, 0.03, 0.1)):
    """Fitted ``C`` in ``|beta_j(k) - beta_j(k_j)| <= C |k - k_j|^{1/2}`` on gap probes."""
    rho = table.rho
    kj = -rho if j == 1 else rho
    inward = 1.0 if j == 1 else -1.0
    b0 = beta_at_stationary(table, j)["value"]
    ratios = []
    for f in fractions:
        d = f * rho
        ratios.append(abs(beta_of_k(table, j, kj + inward * d) - b0) / math.sqrt(d))
    return float(max(ratios))


def delta_diagnostics(table, n=64):
    """Rows ``(s, nu, jump_residual)`` on interior contour probes."""
    lo = table.rho
    hi = table.kmax
    pts = np.linspace(lo, hi, n + 2)[1:-1]
    pts = np.concatenate((-pts[::-1], pts))
    return [(float(s), float(table.nu(s)), jump_residual(table, s)) for s in pts]
