"""Complex log-gamma and the modulus-to-exponent map nu."""

import math
import cmath

import numpy as np

# Lanczos coefficients, g = 7, nine terms.
_G = 7.0
_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _lanczos(z):
    # log Gamma(z) for Re z >= 1/2, continuous in z on that half-plane
    z = z - 1.0
    s = _P[0]
    for i in range(1, 9):
        s += _P[i] / (z + i)
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(s)


def _sinpi(z):
    # sin(pi z) with the real part reduced first to keep precision
    x, y = z.real, z.imag
    r = math.fmod(x, 2.0)
    return complex(math.sin(math.pi * r) * math.cosh(math.pi * y),
                   math.cos(math.pi * r) * math.sinh(math.pi * y))


def log_gamma(z):
    """Principal branch of log Gamma.

    The branch is the analytic continuation of the real ``lgamma`` from the
    positive axis, with the cut along the negative real axis. This is the
    same convention as ``scipy.special.loggamma``.

    Parameters
    ----------
    z : complex or array_like of complex
        Argument, not a nonpositive integer.

    Returns
    -------
    complex or ndarray of complex

    Raises
    ------
    ValueError
        If ``z`` is a pole.
    """
    if np.ndim(z):
        arr = np.asarray(z, dtype=np.complex128)
        return np.vectorize(_log_gamma_scalar, otypes=[np.complex128])(arr)
    return _log_gamma_scalar(complex(z))


def _log_gamma_scalar(z):
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise ValueError(f"log_gamma has a pole at {z.real:g}")
    if z.real >= 0.5:
        return _lanczos(z)
    # reflection, with the 2 pi i multiple that keeps the principal branch
    shift = math.copysign(2.0 * math.pi, z.imag) * math.floor(0.5 * z.real + 0.25)
    return complex(_LOG_PI, shift) - cmath.log(_sinpi(z)) - _lanczos(1.0 - z)


def gamma(z):
    """Gamma function through :func:`log_gamma`."""
    return np.exp(log_gamma(z))


def nu_of_modulus(r_sq):
    """Exponent ``nu = -log(1 - |r|^2) / (2 pi)``.

    Parameters
    ----------
    r_sq : float or array_like
        Squared modulus in ``[0, 1)``.

    Raises
    ------
    ValueError
        If any value lies outside ``[0, 1)``.
    """
    r = np.asarray(r_sq, dtype=np.float64)
    if np.any(~np.isfinite(r)) or np.any(r < 0.0) or np.any(r >= 1.0):
        raise ValueError("nu_of_modulus needs 0 <= |r|^2 < 1")
    out = -np.log1p(-r) / (2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


def modulus_of_nu(nu):
    """Inverse of :func:`nu_of_modulus`: ``1 - exp(-2 pi nu)``."""
    v = np.asarray(nu, dtype=np.float64)
    out = -np.expm1(-2.0 * math.pi * v)
    return float(out) if out.ndim == 0 else out
