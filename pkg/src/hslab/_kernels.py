"""Hot loops with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Setting ``HSLAB_NO_NUMBA=1`` (or
running without numba installed) selects the numpy implementations. Tests
and the benchmark can switch at runtime with :func:`set_backend`.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is often too old; OpenMP avoids the probe warning
        numba.config.THREADING_LAYER = "omp"
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_FLAG = os.environ.get("HSLAB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")
BACKEND = "numba" if (HAVE_NUMBA and not _FLAG) else "numpy"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    BACKEND = name


def set_threads(n):
    """Set the numba worker count (no-op on the numpy path)."""
    if HAVE_NUMBA and n is not None and n > 0:
        numba.set_num_threads(min(int(n), numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# Jost sweep
#
# Column one of the x-part solves  p11' = g p21,  p21' = 2ik q p21 + g p11.
# Writing p21 = v exp(2ik P) with P' = q removes the stiff-free but
# oscillatory diagonal and leaves  p11' = g e v,  v' = g conj(e) p11.
# Classical RK4 with the half-step values taken from the midpoint tables.
# ---------------------------------------------------------------------------


def _jost_numpy(ks, P, Pm, g, gm, step, slot, nslot):
    nk = ks.shape[0]
    n = P.shape[0]
    out11 = np.zeros((nslot, nk), dtype=np.complex128)
    out21 = np.zeros((nslot, nk), dtype=np.complex128)
    a = np.ones(nk, dtype=np.complex128)
    v = np.zeros(nk, dtype=np.complex128)
    w = 2j * ks
    e0 = np.exp(w * P[0])
    if slot[0] >= 0:
        out11[slot[0]] = a
        out21[slot[0]] = v * e0
    half = 0.5 * step
    for i in range(n - 1):
        em = np.exp(w * Pm[i])
        e1 = np.exp(w * P[i + 1])
        g0, gmid, g1 = g[i], gm[i], g[i + 1]
        k1a = g0 * e0 * v
        k1v = g0 * np.conj(e0) * a
        a2 = a + half * k1a
        v2 = v + half * k1v
        k2a = gmid * em * v2
        k2v = gmid * np.conj(em) * a2
        a3 = a + half * k2a
        v3 = v + half * k2v
        k3a = gmid * em * v3
        k3v = gmid * np.conj(em) * a3
        a4 = a + step * k3a
        v4 = v + step * k3v
        k4a = g1 * e1 * v4
        k4v = g1 * np.conj(e1) * a4
        a = a + step / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        v = v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        e0 = e1
        s = slot[i + 1]
        if s >= 0:
            out11[s] = a
            out21[s] = v * e1
    return out11, out21


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _jost_numba(ks, P, Pm, g, gm, step, slot, nslot):
        nk = ks.shape[0]
        n = P.shape[0]
        out11 = np.zeros((nslot, nk), dtype=np.complex128)
        out21 = np.zeros((nslot, nk), dtype=np.complex128)
        half = 0.5 * step
        for j in prange(nk):
            w = 2j * ks[j]
            a = 1.0 + 0.0j
            v = 0.0 + 0.0j
            e0 = np.exp(w * P[0])
            if slot[0] >= 0:
                out11[slot[0], j] = a
                out21[slot[0], j] = v * e0
            for i in range(n - 1):
                em = np.exp(w * Pm[i])
                e1 = np.exp(w * P[i + 1])
                g0 = g[i]
                gmid = gm[i]
                g1 = g[i + 1]
                k1a = g0 * e0 * v
                k1v = g0 * np.conj(e0) * a
                a2 = a + half * k1a
                v2 = v + half * k1v
                k2a = gmid * em * v2
                k2v = gmid * np.conj(em) * a2
                a3 = a + half * k2a
                v3 = v + half * k2v
                k3a = gmid * em * v3
                k3v = gmid * np.conj(em) * a3
                a4 = a + step * k3a
                v4 = v + step * k3v
                k4a = g1 * e1 * v4
                k4v = g1 * np.conj(e1) * a4
                a = a + step / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                v = v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
                e0 = e1
                s = slot[i + 1]
                if s >= 0:
                    out11[s, j] = a
                    out21[s, j] = v * e1
        return out11, out21


def jost_sweep(ks, P, Pm, g, gm, step, slot, nslot):
    """March column one of the Jost solution along the node tables.

    Parameters
    ----------
    ks : ndarray of float
        Spectral parameters, solved independently.
    P, g : ndarray of float, length n
        Phase primitive and coupling at the nodes, in marching order.
    Pm, gm : ndarray of float, length n-1
        The same quantities at interval midpoints.
    step : float
        Signed node spacing (negative when marching leftward).
    slot : ndarray of int, length n
        Output row for each node, ``-1`` when the node is not recorded.
    nslot : int
        Number of recorded nodes.

    Returns
    -------
    phi11, phi21 : ndarray of complex, shape (nslot, len(ks))
    """
    ks = np.ascontiguousarray(ks, dtype=np.float64)
    args = (
        ks,
        np.ascontiguousarray(P, dtype=np.float64),
        np.ascontiguousarray(Pm, dtype=np.float64),
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(gm, dtype=np.float64),
        float(step),
        np.ascontiguousarray(slot, dtype=np.int64),
        int(nslot),
    )
    if BACKEND == "numba":
        return _jost_numba(*args)
    return _jost_numpy(*args)


# ---------------------------------------------------------------------------
# Evolver pieces: tail integral, 5-point derivative, transport right-hand side
# ---------------------------------------------------------------------------


def _cum_right_numpy(f, h):
    n = f.shape[0]
    seg = np.empty(n - 1)
    seg[1:-1] = h / 24.0 * (-f[:-3] + 13.0 * f[1:-2] + 13.0 * f[2:-1] - f[3:])
    seg[0] = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    seg[-1] = h / 24.0 * (9.0 * f[-1] + 19.0 * f[-2] - 5.0 * f[-3] + f[-4])
    out = np.zeros(n)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def _dx_numpy(f, h):
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return d


def _rhs_numpy(m, h):
    ux = _cum_right_numpy(m, h)
    u = -_cum_right_numpy(ux, h)
    r = -u * _dx_numpy(m, h) - 2.0 * ux * (m + 1.0)
    return r, u, ux


if HAVE_NUMBA:

    @njit(cache=True)
    def _cum_right_numba(f, h):
        n = f.shape[0]
        out = np.zeros(n)
        c = h / 24.0
        acc = 0.0
        for i in range(n - 2, -1, -1):
            if i == 0:
                s = c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            elif i == n - 2:
                s = c * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
            else:
                s = c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
            acc += s
            out[i] = acc
        return out

    @njit(cache=True)
    def _dx_numba(f, h):
        n = f.shape[0]
        d = np.empty(n)
        c = 1.0 / (12.0 * h)
        for i in range(2, n - 2):
            d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c
        d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c
        d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c
        d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4]
                    + 3.0 * f[n - 5]) * c
        d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4]
                    - f[n - 5]) * c
        return d

    @njit(cache=True)
    def _rhs_numba(m, h):
        ux = _cum_right_numba(m, h)
        u = -_cum_right_numba(ux, h)
        dm = _dx_numba(m, h)
        n = m.shape[0]
        r = np.empty(n)
        for i in range(n):
            r[i] = -u[i] * dm[i] - 2.0 * ux[i] * (m[i] + 1.0)
        return r, u, ux


def cum_right(f, h):
    """Fourth-order tail integral ``int_{x_i}^{x_end} f`` on a uniform grid."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    if BACKEND == "numba":
        return _cum_right_numba(f, float(h))
    return _cum_right_numpy(f, float(h))


def dx5(f, h):
    """Five-point first derivative with one-sided closures at both ends."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    if BACKEND == "numba":
        return _dx_numba(f, float(h))
    return _dx_numpy(f, float(h))


def hs_rhs(m, h):
    """Right-hand side of the transport form and the recovered ``(u, u_x)``."""
    m = np.ascontiguousarray(m, dtype=np.float64)
    if BACKEND == "numba":
        return _rhs_numba(m, float(h))
    return _rhs_numpy(m, float(h))
