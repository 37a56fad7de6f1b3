"""Jost solutions of the x-part at t = 0 and the scattering data.

Column one of ``Phi`` solves ``p11' = g p21``, ``p21' = 2ik q p21 + g p11``
with ``q = sqrt(m+1)`` and ``g = m_x / (4(m+1))``. Column two follows from
the real-k symmetry ``p12 = conj(p21)``, ``p22 = conj(p11)``.

With ``y(x) = x - int_x^L (q - 1)`` the data are evaluated at a node ``x0``::

    a = p11- conj(p11+) - p21- conj(p21+)
    b = exp(2ik y(x0)) conj(p11- p21+ - p21- p11+)
    r = -conj(b) / a

Both are independent of ``x0``; at ``x0 = 0``, ``y(0) = -c0``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class ScatteringFault(RuntimeError):
    """A per-k computation produced unusable data."""

    def __init__(self, msg, k=None):
        super().__init__(msg)
        self.k = k


@dataclass(frozen=True)
class PhaseTables:
    """Node and midpoint tables shared by every k."""

    x: np.ndarray
    h: float
    q: np.ndarray
    P: np.ndarray
    Pm: np.ndarray
    g: np.ndarray
    gm: np.ndarray
    H: np.ndarray
    i0: int
    _right: float = 0.0


def _tables(profile, x_eval=0.0):
    grid = profile.grid
    h = grid.h
    xs = grid.x
    m, mm = profile.m0, profile.m0_mid
    q = np.sqrt(m + 1.0)
    qm = np.sqrt(mm + 1.0)
    g = profile.m0_x / (4.0 * (m + 1.0))
    gm = profile.m0_x_mid / (4.0 * (mm + 1.0))
    seg = h / 6.0 * (q[:-1] + 4.0 * qm + q[1:])
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    i0 = grid.index_of(x_eval)
    P = cum - cum[i0]
    Pm = P[:-1] + 0.5 * h * (5.0 * q[:-1] + 8.0 * qm - q[1:]) / 12.0
    # H(x_i) = int_{x_i}^{L} q, the stretch beyond the last node has q = 1
    H = (cum[-1] - cum) + (grid.right - xs[-1])
    return PhaseTables(x=xs, h=h, q=q, P=P, Pm=Pm, g=g, gm=gm, H=H, i0=i0, _right=grid.right)


def phase_primitive(profile):
    """Table ``H(x_i) = int_{x_i}^{L} sqrt(m0 + 1) ds``."""
    return _tables(profile).H


def y_of_nodes(profile):
    """``y(x_i) = L - H(x_i)``, the Simpson version of the coordinate map."""
    return profile.grid.right - phase_primitive(profile)


def shifts(profile):
    """Total shift ``c`` and half-line shift ``c0``.

    ``c = int (q - 1)`` over the line and ``c0 = int_0^L (q - 1)``.
    """
    t = _tables(profile)
    L = profile.grid.right
    c = t.H[0] - (L - t.x[0])
    c0 = t.H[t.i0] - (L - t.x[t.i0])
    return float(c), float(c0)


def _sweep(t, ks, side, nodes):
    # returns (phi11, phi21) at the requested node indices for every k
    n = t.x.shape[0]
    nodes = np.asarray(nodes, dtype=np.int64)
    slot = -np.ones(n, dtype=np.int64)
    slot[nodes] = np.arange(nodes.shape[0])
    if side == "left":
        return _kernels.jost_sweep(ks, t.P, t.Pm, t.g, t.gm, t.h, slot, nodes.shape[0])
    return _kernels.jost_sweep(ks, t.P[::-1], t.Pm[::-1], t.g[::-1], t.gm[::-1], -t.h,
                               slot[::-1], nodes.shape[0])


def _parallel(fn, ks, threads):
    ks = np.asarray(ks, dtype=np.float64)
    if _kernels.BACKEND == "numba" or threads is None or threads <= 1 or ks.size < 64:
        return fn(ks)
    parts = np.array_split(ks, threads)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        res = list(ex.map(fn, parts))
    return tuple(np.concatenate([r[i] for r in res], axis=-1) for i in range(len(res[0])))


@dataclass(frozen=True)
class JostTrajectory:
    """Full 2x2 Jost matrix at every node for one k and one side."""

    k: float
    side: str
    x: np.ndarray
    values: np.ndarray  # shape (N, 2, 2)

    @property
    def det(self):
        v = self.values
        return v[:, 0, 0] * v[:, 1, 1] - v[:, 0, 1] * v[:, 1, 0]


def _matrix(p11, p21):
    out = np.empty(p11.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = p11
    out[..., 1, 0] = p21
    out[..., 0, 1] = np.conj(p21)
    out[..., 1, 1] = np.conj(p11)
    return out


def jost_solve(profile, k, side):
    """Integrate the x-part from one end with ``Phi = I`` there.

    Parameters
    ----------
    profile : InitialProfile
    k : float
        Real spectral parameter.
    side : {"from_left", "from_right"}

    Returns
    -------
    JostTrajectory

    Raises
    ------
    ScatteringFault
        If the determinant drifts from one by more than 1e-6.
    """
    if side not in ("from_left", "from_right"):
        raise ValueError("side must be 'from_left' or 'from_right'")
    t = _tables(profile)
    n = t.x.shape[0]
    p11, p21 = _sweep(t, np.array([float(k)]), "left" if side == "from_left" else "right", np.arange(n))
    traj = JostTrajectory(k=float(k), side=side, x=t.x, values=_matrix(p11[:, 0], p21[:, 0]))
    drift = float(np.max(np.abs(traj.det - 1.0)))
    if drift > 1e-6:
        raise ScatteringFault(f"determinant drift {drift:.3g} at k = {k}", k=k)
    return traj


def jost_residual(profile, traj):
    """Sup-norm of the central-difference derivative minus the ODE right side.

    Evaluated on interior nodes; this is an O(h^2) quantity for a correct
    trajectory.
    """
    t = _tables(profile)
    P = traj.values
    h = t.h
    k = traj.k
    dP = (P[2:] - P[:-2]) / (2.0 * h)
    q = t.q[1:-1, None, None]
    g = t.g[1:-1, None, None]
    Pi = P[1:-1]
    s3 = np.array([[1.0, 0.0], [0.0, -1.0]])
    s1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    comm = s3 @ Pi - Pi @ s3
    rhs = -1j * k * q * comm + g * (s1 @ Pi)
    return float(np.max(np.abs(dP - rhs)))


def _core(t, ks, nodes, threads=None):
    def fn(kk):
        l11, l21 = _sweep(t, kk, "left", nodes)
        r11, r21 = _sweep(t, kk, "right", nodes)
        return l11, l21, r11, r21

    return _parallel(fn, ks, threads)


def _ab_at(t, ks, row, node, l11, l21, r11, r21):
    y0 = t._right - t.H[node]
    a = l11[row] * np.conj(r11[row]) - l21[row] * np.conj(r21[row])
    W = l11[row] * r21[row] - l21[row] * r11[row]
    b = np.exp(2j * ks * y0) * np.conj(W)
    return a, b


def _wronskian_ab(t, ks, row, node, l11, l21, r11, r21):
    # determinant form with full matrices: a = |Phi-^(1) Phi+^(2)|,
    # b = exp(2ik y) |Phi+^(2) Phi-^(2)|
    Lm = _matrix(l11[row], l21[row])
    Rm = _matrix(r11[row], r21[row])
    a = Lm[:, 0, 0] * Rm[:, 1, 1] - Lm[:, 1, 0] * Rm[:, 0, 1]
    dt = Rm[:, 0, 1] * Lm[:, 1, 1] - Rm[:, 1, 1] * Lm[:, 0, 1]
    y = t._right - t.H[node]
    return a, np.exp(2j * ks * y) * dt


@dataclass(frozen=True)
class ScatteringData:
    """Sampled ``a, b, r`` with the shift constants.

    Attributes
    ----------
    k : ndarray
        Symmetric real grid.
    a, b, r : ndarray of complex
    c, c0 : float
        ``int (q-1)`` over the line and over ``[0, L]``.
    H : ndarray
        Phase primitive ``int_x^L q`` on the profile nodes.
    cross_residual : float
        Max deviation of ``a, b`` evaluated at ``x = 0.5`` in determinant form.
    det_drift : float
        Max ``| |p11|^2 - |p21|^2 - 1 |`` at the evaluation nodes.
    """

    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    r: np.ndarray
    c: float
    c0: float
    H: np.ndarray
    cross_residual: float = 0.0
    det_drift: float = 0.0
    meta: dict = field(default_factory=dict)


def scattering_at(profile, k, x_eval=0.0, cross_x=0.5):
    """``(a, b, r)`` at one or several real k.

    Returns arrays when ``k`` is an array. The determinant form at
    ``cross_x`` is checked against the product form at ``x_eval``.

    Raises
    ------
    ScatteringFault
        If ``|a| < 1e-8`` or the cross-check deviates by more than 1e-8.
    """
    scalar = np.ndim(k) == 0
    ks = np.atleast_1d(np.asarray(k, dtype=np.float64))
    a, b, r, cross, _ = _evaluate(profile, ks, x_eval, cross_x)
    if cross > 1e-8:
        raise ScatteringFault(f"determinant-form cross-check deviates by {cross:.3g}")
    if scalar:
        return complex(a[0]), complex(b[0]), complex(r[0])
    return a, b, r


def _evaluate(profile, ks, x_eval=0.0, cross_x=0.5, threads=None):
    t = _tables(profile, x_eval)
    j = profile.grid.index_of(cross_x)
    nodes = np.array(sorted({t.i0, j}))
    l11, l21, r11, r21 = _core(t, ks, nodes, threads)
    row0 = int(np.searchsorted(nodes, t.i0))
    row1 = int(np.searchsorted(nodes, j))
    a, b = _ab_at(t, ks, row0, t.i0, l11, l21, r11, r21)
    aw, bw = _wronskian_ab(t, ks, row1, j, l11, l21, r11, r21)
    cross = float(max(np.max(np.abs(aw - a)), np.max(np.abs(bw - b)))) if ks.size else 0.0
    det = np.concatenate([np.abs(l11) ** 2 - np.abs(l21) ** 2, np.abs(r11) ** 2 - np.abs(r21) ** 2])
    drift = float(np.max(np.abs(det - 1.0))) if ks.size else 0.0
    small = np.abs(a) < 1e-8
    if np.any(small):
        kbad = float(ks[np.argmax(small)])
        raise ScatteringFault(f"|a| < 1e-8 at k = {kbad}", k=kbad)
    bad = ~(np.isfinite(a) & np.isfinite(b))
    if np.any(bad):
        kbad = float(ks[np.argmax(bad)])
        raise ScatteringFault(f"non-finite scattering data at k = {kbad}", k=kbad)
    r = -np.conj(b) / a
    return a, b, r, cross, drift


def default_k_grid(n=1024, kmax=8.0, refine_at=(), refine_factor=4, refine_halfwidth=0.25):
    """Symmetric grid on ``[-kmax, kmax]`` with optional local refinement.

    Refinement inserts ``refine_factor`` times denser nodes within
    ``refine_halfwidth`` of each ``+-k`` in ``refine_at``.
    """
    base = np.linspace(-kmax, kmax, n)
    extra = []
    dk = 2.0 * kmax / (n - 1)
    for k0 in refine_at:
        k0 = abs(float(k0))
        if k0 <= 0 or k0 >= kmax:
            continue
        m = int(round(2 * refine_halfwidth / dk * refine_factor))
        pts = np.linspace(k0 - refine_halfwidth, k0 + refine_halfwidth, m + 1)
        extra.append(pts)
        extra.append(-pts)
    if extra:
        base = np.concatenate([base] + extra)
        base = np.unique(np.round(base, 14))
        base = np.unique(np.concatenate([base, -base]))
    return base


def scattering_table(profile, k_grid, threads=None):
    """Scattering data on a symmetric grid.

    Parameters
    ----------
    profile : InitialProfile
    k_grid : array_like
        Must satisfy ``k_grid == -k_grid[::-1]``.
    threads : int, optional
        Worker count for the numpy path (numba uses its own pool).

    Raises
    ------
    ValueError
        If the grid is not symmetric.
    ScatteringFault
        On any per-k fault, naming the offending k.
    """
    ks = np.asarray(k_grid, dtype=np.float64)
    if ks.ndim != 1 or ks.size == 0 or np.any(np.diff(ks) <= 0):
        raise ValueError("k grid must be one-dimensional and strictly increasing")
    if np.max(np.abs(ks + ks[::-1])) > 1e-12 * max(1.0, np.max(np.abs(ks))):
        raise ValueError("k grid must be symmetric about 0")
    a, b, r, cross, drift = _evaluate(profile, ks, threads=threads)
    c, c0 = shifts(profile)
    return ScatteringData(
        k=ks, a=a, b=b, r=r, c=c, c0=c0, H=phase_primitive(profile),
        cross_residual=cross, det_drift=drift,
        meta={"L": profile.grid.L, "N": profile.grid.N, "backend": _kernels.BACKEND},
    )


def validate_scattering(data, unitarity_tol=1e-8, symmetry_tol=1e-9, slope_min=2.7,
                        gap_min=0.0, kfit=(0.01, 0.2)):
    """Check the table invariants.

    Returns
    -------
    dict
        ``unitarity_residual``, ``symmetry_residual``, ``cubic_slope``,
        ``a0_residual``, ``c_fit``, ``c_fit_residual``, ``max_abs_r``,
        ``gap`` (``1 - max|r|^2``), ``cross_residual`` and a ``pass``
        flag per check plus ``ok`` for all of them.
    """
    k, a, b, r = data.k, data.a, data.b, data.r
    uni = float(np.max(np.abs(np.abs(a) ** 2 - 1.0 - np.abs(b) ** 2)))
    sym = float(max(np.max(np.abs(a[::-1] - np.conj(a))), np.max(np.abs(np.abs(r[::-1]) - np.abs(r)))))
    maxr = float(np.max(np.abs(r)))
    rep = {
        "unitarity_residual": uni,
        "symmetry_residual": sym,
        "max_abs_r": maxr,
        "gap": 1.0 - maxr**2,
        "cross_residual": float(data.cross_residual),
        "det_drift": float(data.det_drift),
    }
    # small-k law
    c = data.c
    ak = np.abs(k)
    sel = (ak >= kfit[0]) & (ak <= kfit[1])
    if np.count_nonzero(sel) >= 4 and np.any(np.abs(b) > 0):
        rem = np.abs(a[sel] - (1.0 + 1j * k[sel] * c + (1j * k[sel]) ** 2 * c * c / 2.0))
        ok = rem > 0
        if np.count_nonzero(ok) >= 4:
            slope = float(np.polyfit(np.log(ak[sel][ok]), np.log(rem[ok]), 1)[0])
        else:
            slope = float("nan")
    else:
        slope = float("nan")
    rep["cubic_slope"] = slope
    # a(0) and Im a'(0) from the two smallest positive k (Richardson in k^2)
    pos = np.where(k > 0)[0]
    izero = np.where(k == 0)[0]
    if izero.size:
        rep["a0_residual"] = float(abs(a[izero[0]] - 1.0))
    if pos.size >= 2:
        i1, i2 = pos[0], pos[1]
        k1, k2 = k[i1], k[i2]
        # Re a(k) = 1 - c^2 k^2/2 + O(k^4); Im a(k) = c k + O(k^3)
        s1 = a[i1].imag / k1
        s2 = a[i2].imag / k2
        c_fit = (k2**2 * s1 - k1**2 * s2) / (k2**2 - k1**2)
        re0 = (k2**2 * a[i1].real - k1**2 * a[i2].real) / (k2**2 - k1**2)
        if not izero.size:
            rep["a0_residual"] = float(abs(re0 - 1.0))
        rep["c_fit"] = float(c_fit)
        rep["c_fit_residual"] = float(abs(c_fit - c))
    flags = {
        "unitarity": uni <= unitarity_tol,
        "symmetry": sym <= symmetry_tol,
        "gap": rep["gap"] > gap_min,
        "cubic_slope": (not np.any(np.abs(b) > 0)) or (np.isfinite(slope) and slope >= slope_min),
    }
    rep["pass"] = flags
    rep["ok"] = bool(all(flags.values()))
    return rep


def richardson_check(profile, k):
    """Estimated step error of ``(a, b)`` at one k from a doubled step.

    The coarse solve uses every other node with the skipped node as the
    midpoint; the estimate is ``|fine - coarse| / 15``.
    """
    t = _tables(profile)
    ks = np.array([float(k)])
    n = t.x.shape[0]
    if t.i0 % 2:
        raise ValueError("evaluation node must have an even index")
    fine = _core(t, ks, np.array([t.i0]))
    a_f, b_f = _ab_at(t, ks, 0, t.i0, *fine)
    nn = n if n % 2 else n - 1
    sub = _coarse_tables(t, nn)
    coarse = _core(sub, ks, np.array([t.i0 // 2]))
    a_c, b_c = _ab_at(sub, ks, 0, t.i0 // 2, *coarse)
    return float(max(abs(a_f[0] - a_c[0]), abs(b_f[0] - b_c[0])) / 15.0)


def _coarse_tables(t, nn):
    # coarse tables on even nodes 0, 2, ..., nn-1 with odd nodes as midpoints
    return PhaseTables(
        x=t.x[:nn:2], h=2.0 * t.h, q=t.q[:nn:2], P=t.P[:nn:2], Pm=t.P[1:nn:2],
        g=t.g[:nn:2], gm=t.g[1:nn:2], H=t.H[:nn:2], i0=t.i0 // 2, _right=t._right,
    )


def born_b(profile, ks):
    """First Volterra iterate of ``b``.

    ``b1(k) = -exp(-2ik c0) int g(x) exp(2ik P(x)) dx`` with
    ``P(x) = int_0^x q``; Simpson's rule on nodes and midpoints.
    """
    t = _tables(profile)
    _, c0 = shifts(profile)
    ks = np.atleast_1d(np.asarray(ks, dtype=np.float64))[:, None]
    f0 = t.g[None, :] * np.exp(2j * ks * t.P[None, :])
    fm = t.gm[None, :] * np.exp(2j * ks * t.Pm[None, :])
    integral = t.h / 6.0 * np.sum(f0[:, :-1] + 4.0 * fm + f0[:, 1:], axis=1)
    return -np.exp(-2j * ks[:, 0] * c0) * integral
