"""Leading-order long-time asymptotics from the parabolic-cylinder local model.

Two conventions are available.

``"corrected"`` (default)
    Local variable ``zeta = sqrt(-2t/k_j^3) (k - k_j)``, endpoint forms
    ``(k - k1)^{i nu1}`` and ``(k2 - k)^{-i nu2}``, and the reconstruction
    ``u = f_hat t^{-1/2}`` with
    ``f_hat = i rho^{3/2}/(2 sqrt 2) sum_j (beta12^j - beta21^j)/k_j^3`` and
    ``x = y - delta1 + rho^{3/2}/sqrt 2 sum_j beta21^j/k_j^2 t^{-1/2}``.
    This is the convention validated against the PDE solver.

``"printed"``
    Scale ``-4t/k_j^3``, the second-point coefficient with the prefactor
    ``e^{3 pi nu/2} e^{3 i pi/4}``, the f-matrix algebra and
    ``x = y - delta1/2 + (rho^{3/2}/2) Re f11 t^{-1/2}``. Kept for
    diagnostics: its second-point coefficient cannot satisfy the modulus
    identity ``|beta12|^2 = nu`` on any branch.
"""

import cmath
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.interpolate import CubicSpline

from . import singular
from .special import log_gamma, nu_of_modulus

XI_MIN = 0.02
PIN_TOL = 1e-8
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_BRANCHES = (-1, 0, 1)


class TransitionRegionError(ValueError):
    """``|xi|`` is inside the excluded band around zero."""


class BranchPinningError(RuntimeError):
    """No unique branch satisfies the modulus identity.

    Attributes
    ----------
    diagnostics : list of dict
        One entry per candidate ``(m, n)`` with the modulus deviation.
    """

    def __init__(self, msg, diagnostics):
        super().__init__(msg)
        self.diagnostics = diagnostics


class CurveFault(RuntimeError):
    """The asymptotic x(y) table is not monotone."""


@dataclass(frozen=True)
class StationaryData:
    xi: float
    k1: float
    k2: float
    rho: float


def stationary_points(xi):
    """Saddle points ``k = -+sqrt(-1/(2 xi))`` of ``theta`` for ``xi < 0``."""
    xi = float(xi)
    if not xi < 0:
        raise ValueError("stationary points exist only for xi < 0")
    rho = math.sqrt(-1.0 / (2.0 * xi))
    return StationaryData(xi=xi, k1=-rho, k2=rho, rho=rho)


def phase_theta(xi, k):
    """``theta(xi, k) = k xi - 1/(2k)``; complex ``k`` allowed."""
    if k == 0:
        raise ValueError("theta is singular at k = 0")
    return k * xi - 1.0 / (2.0 * k)


# ---------------------------------------------------------------------------
# local model coefficients
# ---------------------------------------------------------------------------


def _scale_log(j, t, k_j, convention, n):
    if convention == "corrected":
        # -2t/k^3 is positive for j=1 and negative for j=2; the j=2 local
        # variable is taken with the opposite orientation so both are real
        return math.log(2.0 * t / abs(k_j) ** 3) + 2j * math.pi * n
    arg = -4.0 * t / k_j ** 3
    return cmath.log(arg) + 2j * math.pi * n


def _candidate(j, r_kj, nu_j, beta_j, t, k_j, convention, m, n):
    beta = beta_j + 1j * math.pi * m * nu_j
    L = _scale_log(j, t, k_j, convention, n)
    ph = -2j * (beta + t / k_j)
    if convention == "corrected":
        sgn = 1.0 if j == 1 else -1.0
        rt = r_kj * cmath.exp(ph + sgn * 1j * nu_j * L)
        if j == 1:
            lg = log_gamma(complex(0.0, -nu_j))
            b12 = _SQRT_2PI * cmath.exp(1j * math.pi / 4 - math.pi * nu_j / 2 - lg) / rt
        else:
            lg = log_gamma(complex(0.0, nu_j))
            b12 = _SQRT_2PI * cmath.exp(-1j * math.pi / 4 - math.pi * nu_j / 2 - lg) / rt
    else:
        rt = r_kj * cmath.exp(ph + 1j * nu_j * L)
        if j == 1:
            lg = log_gamma(complex(0.0, -nu_j))
            b12 = _SQRT_2PI * cmath.exp(1j * math.pi / 4 - math.pi * nu_j / 2 - lg) / rt
        else:
            lg = log_gamma(complex(0.0, nu_j))
            b12 = _SQRT_2PI * cmath.exp(3j * math.pi / 4 + 1.5 * math.pi * nu_j - lg) / rt
    return rt, b12, nu_j / b12


def pc_coefficients(j, r_kj, nu_j, beta_j, t, k_j, convention="corrected", strict=True,
                    m=0, tol=PIN_TOL):
    """Local-model coefficients ``(r_tilde, beta12, beta21)`` at ``k_j``.

    Parameters
    ----------
    j : {1, 2}
    r_kj : complex
        Reflection coefficient at the stationary point.
    nu_j : float
    beta_j : complex
        Regularized endpoint value from :func:`singular.beta_at_stationary`.
    t : float
    k_j : float
    convention : {"corrected", "printed"}
    strict : bool
        Raise :class:`BranchPinningError` when no unique log branch
        satisfies ``|beta12|^2 = nu_j`` to relative tolerance ``tol``.
        Otherwise the closest candidate is returned.
    m : int
        Multiple of ``i pi`` added to the endpoint branch constant; fixed
        beforehand by :func:`pin_endpoint_branch`.

    Returns
    -------
    r_tilde, beta12, beta21 : complex
    branch : dict
        Chosen ``(m, n)``, modulus deviation and candidate list.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    if not t > 0:
        raise ValueError("t must be positive")
    if abs(r_kj) < 1e-12 or nu_j <= 0.0:
        return 0j, 0j, 0j, {"m": m, "n": 0, "deviation": 0.0, "degenerate": True, "candidates": []}
    cands = []
    for n in _BRANCHES:
        rt, b12, b21 = _candidate(j, complex(r_kj), float(nu_j), complex(beta_j), float(t),
                                  float(k_j), convention, m, n)
        dev = abs(abs(b12) ** 2 / nu_j - 1.0)
        cands.append({"m": m, "n": n, "deviation": dev, "values": (rt, b12, b21)})
    ok = [c for c in cands if c["deviation"] <= tol]
    diag = [{"m": c["m"], "n": c["n"], "deviation": c["deviation"]} for c in cands]
    if len(ok) == 1:
        best = ok[0]
    elif strict:
        what = "no" if not ok else "more than one"
        raise BranchPinningError(f"{what} branch satisfies |beta12|^2 = nu at j={j} ({convention})", diag)
    else:
        best = min(cands, key=lambda c: c["deviation"])
    rt, b12, b21 = best["values"]
    return rt, b12, b21, {"m": m, "n": best["n"], "deviation": best["deviation"],
                          "degenerate": False, "candidates": diag, "unique": len(ok) == 1}


def pin_endpoint_branch(table, j, beta_value, probe=1e-9):
    """Multiple ``m`` of ``i pi`` in the endpoint constant.

    Chosen so that ``beta_j(k_j) + i pi m nu_j`` continues ``beta_j(k)``
    approached from the gap.

    Returns
    -------
    m : int
    mismatch : list of float
        ``|beta_j(k_j) + i pi m nu_j - beta_j(k_j -+ probe rho)|`` per candidate.
    """
    rho = table.rho
    kj = -rho if j == 1 else rho
    inward = 1.0 if j == 1 else -1.0
    nu_j = float(table.nu(kj))
    lim = singular.beta_of_k(table, j, kj + inward * probe * rho)
    mis = [abs(beta_value + 1j * math.pi * mm * nu_j - lim) for mm in _BRANCHES]
    return _BRANCHES[int(np.argmin(mis))], mis


def f_coefficients(delta1, stat, b21, b12):
    """f-matrix algebra of the reconstruction at order ``t^{-1/2}``.

    Parameters
    ----------
    delta1 : float
    stat : StationaryData
    b21, b12 : pair of complex
        ``(beta21^1, beta21^2)`` and ``(beta12^1, beta12^2)``.

    Returns
    -------
    f11, f12, f21, f22, f_hat : complex
    """
    ks = (stat.k1, stat.k2)
    d = delta1
    s21 = [sum(b / k ** p for b, k in zip(b21, ks)) for p in (1, 2, 3)]
    s12 = [sum(b / k ** p for b, k in zip(b12, ks)) for p in (1, 2, 3)]
    f11 = d * s21[0] + 1j * s21[1]
    f12 = d * s12[0] - 1j * s12[1]
    f21 = 0.5j * d * d * s21[0] - d * s21[1] - 1j * s21[2]
    f22 = 0.5j * d * d * s12[0] - d * s12[1] + 1j * s12[2]
    fh = -(stat.rho ** 1.5 / 2.0) * (1j * d * (f12 - f11) + f21 + f22)
    return f11, f12, f21, f22, fh


@dataclass
class SlowRegionCoefficients:
    """All scalars of the slow-region asymptotics for one ``(xi, t)``."""

    xi: float
    t: float
    convention: str
    k1: float
    k2: float
    rho: float
    nu1: float
    nu2: float
    delta1: float
    delta1_imag: float
    beta1: complex
    beta2: complex
    r1: complex
    r2: complex
    r_tilde1: complex
    r_tilde2: complex
    beta12_1: complex
    beta21_1: complex
    beta12_2: complex
    beta21_2: complex
    f11: complex
    f12: complex
    f21: complex
    f22: complex
    f_hat: complex
    x_coeff: complex
    x_shift: float
    branches: dict = field(default_factory=dict)

    @property
    def amplitude(self):
        """Envelope ``sqrt(2 nu1) rho^{-3/2}`` of ``|f_hat|`` over the phase."""
        return math.sqrt(2.0 * self.nu1) * self.rho ** -1.5

    def u(self):
        return self.f_hat.real / math.sqrt(self.t)

    def to_json(self):
        out = {}
        for key, val in asdict(self).items():
            if isinstance(val, complex):
                out[key] = [val.real, val.imag]
            elif key == "branches":
                out[key] = {str(j): {kk: vv for kk, vv in b.items() if kk != "candidates"}
                            for j, b in val.items()}
            else:
                out[key] = val
        out["amplitude"] = self.amplitude
        return out


class AsymptoticModel:
    """Spectral ingredients prepared once from scattering data.

    Parameters
    ----------
    data : ScatteringData
    convention : {"corrected", "printed"}
    strict : bool
        Propagate branch-pinning failures.
    """

    def __init__(self, data, convention="corrected", strict=True):
        if convention not in ("corrected", "printed"):
            raise ValueError(f"unknown convention {convention!r}")
        self.data = data
        self.convention = convention
        self.strict = strict
        self.spectrum = singular.nu_spectrum(data)
        k = np.asarray(data.k)
        self._rre = CubicSpline(k, np.real(data.r))
        self._rim = CubicSpline(k, np.imag(data.r))
        self._tables = {}
        self._endpoints = {}

    def r(self, k):
        return complex(self._rre(k), self._rim(k))

    def table(self, rho):
        key = round(float(rho), 15)
        if key not in self._tables:
            self._tables[key] = singular.nu_table(self.spectrum, rho)
        return self._tables[key]

    def endpoint(self, xi):
        """Time-independent pieces for one ``xi``: table, delta1, pinned betas (cached)."""
        key = float(xi)
        if key not in self._endpoints:
            self._endpoints[key] = self._endpoint(key)
        return self._endpoints[key]

    def _endpoint(self, xi):
        st = stationary_points(xi)
        tab = self.table(st.rho)
        d1 = singular.delta1(tab)
        ends = {}
        for j, kj in ((1, st.k1), (2, st.k2)):
            b = singular.beta_at_stationary(tab, j)
            m, mis = pin_endpoint_branch(tab, j, b["value"])
            rj = self.r(kj)
            # nu_j from the same interpolated r(k_j) that enters r_tilde, so the
            # modulus identity is not polluted by spline disagreement
            ends[j] = {"k": kj, "nu": nu_of_modulus(abs(rj) ** 2), "nu_table": b["nu"],
                       "beta": b["value"] + 1j * math.pi * m * b["nu"],
                       "m": m, "continuity": min(mis), "r": rj}
        return st, tab, d1, ends

    def coefficients(self, xi, t):
        """:class:`SlowRegionCoefficients` at ``(xi, t)``."""
        st, tab, d1, ends = self.endpoint(xi)
        out = {}
        branches = {}
        for j in (1, 2):
            e = ends[j]
            rt, b12, b21, br = pc_coefficients(j, e["r"], e["nu"], e["beta"], t, e["k"],
                                               self.convention, self.strict, m=0)
            br["m"] = e["m"]
            br["continuity"] = e["continuity"]
            out[j] = (rt, b12, b21)
            branches[j] = br
        b12 = (out[1][1], out[2][1])
        b21 = (out[1][2], out[2][2])
        rho = st.rho
        if self.convention == "corrected":
            f11, f12, f21, f22, _ = f_coefficients(0.0, st, b21, b12)
            ks = (st.k1, st.k2)
            fh = 1j * rho ** 1.5 / (2.0 * math.sqrt(2.0)) * sum(
                (p - q) / k ** 3 for p, q, k in zip(b12, b21, ks))
            xc = rho ** 1.5 / math.sqrt(2.0) * sum(q / k ** 2 for q, k in zip(b21, ks))
            shift = d1.delta1
        else:
            f11, f12, f21, f22, fh = f_coefficients(d1.delta1, st, b21, b12)
            xc = rho ** 1.5 / 2.0 * f11
            shift = 0.5 * d1.delta1
        return SlowRegionCoefficients(
            xi=float(xi), t=float(t), convention=self.convention, k1=st.k1, k2=st.k2, rho=rho,
            nu1=ends[1]["nu"], nu2=ends[2]["nu"], delta1=d1.delta1, delta1_imag=d1.imag_part,
            beta1=ends[1]["beta"], beta2=ends[2]["beta"], r1=ends[1]["r"], r2=ends[2]["r"],
            r_tilde1=out[1][0], r_tilde2=out[2][0], beta12_1=out[1][1], beta21_1=out[1][2],
            beta12_2=out[2][1], beta21_2=out[2][2], f11=f11, f12=f12, f21=f21, f22=f22,
            f_hat=complex(fh), x_coeff=complex(xc), x_shift=float(shift), branches=branches,
        )


@dataclass(frozen=True)
class AsymptoticSample:
    y: float
    t: float
    xi: float
    u_leading: float
    x_of_y: float
    error_scale: float
    envelope: float = 0.0
    coefficients: object = None


def leading_order(model, y, t, p=3.0, xi_min=XI_MIN):
    """Leading-order ``u`` and ``x`` at ``(y, t)``.

    Parameters
    ----------
    model : AsymptoticModel or ScatteringData
    y, t : float
    p : float
        Exponent in the reported error scale ``t^{-1 + 1/(2p)}`` (``p > 2``).

    Raises
    ------
    TransitionRegionError
        If ``|y/t| < xi_min``.
    """
    if not isinstance(model, AsymptoticModel):
        model = AsymptoticModel(model)
    t = float(t)
    y = float(y)
    if not t > 0:
        raise ValueError("t must be positive")
    if not p > 2:
        raise ValueError("p must exceed 2")
    xi = y / t
    if abs(xi) < xi_min:
        raise TransitionRegionError(f"|xi| = {abs(xi):.3g} < {xi_min}: transition region unsupported")
    if xi > 0:
        return AsymptoticSample(y=y, t=t, xi=xi, u_leading=0.0, x_of_y=y, error_scale=t ** -0.5)
    c = model.coefficients(xi, t)
    st = math.sqrt(t)
    return AsymptoticSample(
        y=y, t=t, xi=xi, u_leading=c.f_hat.real / st,
        x_of_y=y - c.x_shift + c.x_coeff.real / st,
        error_scale=t ** (-1.0 + 1.0 / (2.0 * p)), envelope=c.amplitude / st, coefficients=c,
    )


def asymptotic_curve(model, t, y_grid, p=3.0, xi_min=XI_MIN):
    """Leading-order samples along ``y_grid`` at fixed ``t``.

    Points in the transition band are skipped. Raises :class:`CurveFault`
    if the resulting ``x`` values are not strictly increasing.
    """
    if not isinstance(model, AsymptoticModel):
        model = AsymptoticModel(model)
    ys = np.asarray(y_grid, dtype=np.float64)
    if np.any(np.diff(ys) <= 0):
        raise ValueError("y_grid must be strictly increasing")
    rows = []
    for y in ys:
        if abs(y / t) < xi_min:
            continue
        rows.append(leading_order(model, y, t, p, xi_min))
    xs = np.array([r.x_of_y for r in rows])
    if xs.size > 1 and np.any(np.diff(xs) <= 0):
        raise CurveFault("asymptotic x(y) is not monotone")
    return rows


def invert_curve(rows, x):
    """Interpolate ``(y, u_leading)`` at physical ``x`` by monotone inversion."""
    xs = np.array([r.x_of_y for r in rows])
    ys = np.array([r.y for r in rows])
    us = np.array([r.u_leading for r in rows])
    return np.interp(x, xs, ys), np.interp(x, xs, us)
