import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import loggamma

from hslab import asymptotics as am
from hslab import scattering
from hslab.field import SpatialGrid, build_profile


@pytest.mark.parametrize("xi,rho", [(-0.5, 1.0), (-2.0, 0.5), (-0.125, 2.0)])
def test_stationary_points(xi, rho):
    st = am.stationary_points(xi)
    assert math.isclose(st.rho, rho, rel_tol=1e-15)
    assert st.k1 == -st.rho and st.k2 == st.rho
    # theta'(k) = xi + 1/(2k^2) vanishes there
    assert abs(xi + 0.5 / st.k1**2) <= 1e-15


@pytest.mark.parametrize("xi", [0.0, 0.3])
def test_stationary_points_need_negative_xi(xi):
    with pytest.raises(ValueError):
        am.stationary_points(xi)


def test_phase_theta():
    assert am.phase_theta(-0.5, 1.0) == -1.0
    assert am.phase_theta(0.5, -2.0) == -0.75
    with pytest.raises(ValueError):
        am.phase_theta(-0.5, 0.0)


@pytest.mark.parametrize("xi", [-0.5, 0.5])
def test_theta_imaginary_part_dominates_in_upper_plane(xi):
    # Im theta = Im k (xi + 1/(2|k|^2)); for xi > 0 it exceeds xi Im k
    for k in (0.3 + 0.2j, -1.5 + 0.7j, 2 + 3j):
        th = am.phase_theta(xi, k)
        assert abs(th.imag - k.imag * (xi + 0.5 / abs(k) ** 2)) <= 1e-14
        if xi > 0:
            assert th.imag > xi * k.imag


def test_degenerate_coefficients():
    rt, b12, b21, br = am.pc_coefficients(1, 0.0, 0.0, 0.0, 10.0, -1.0)
    assert rt == b12 == b21 == 0 and br["degenerate"]


def test_unit_nu_modulus():
    # nu = 1 means |beta12| = 1 on the pinned branch
    r = math.sqrt(1 - math.exp(-2 * math.pi))
    _, b12, b21, br = am.pc_coefficients(1, r, 1.0, 0.0, 5.0, -1.0)
    assert abs(abs(b12) - 1) <= 1e-12 and abs(b12 * b21 - 1) <= 1e-14
    assert br["unique"]


def test_printed_scale_spot_value():
    # k1 = -1, t = 1, beta = 0, real r: r e^{2i} e^{i nu ln 4}
    nu = 0.1
    r = math.sqrt(-math.expm1(-2 * math.pi * nu))
    rt, _, _, br = am.pc_coefficients(1, r, nu, 0.0, 1.0, -1.0, convention="printed")
    assert br["n"] == 0
    assert abs(rt - r * np.exp(2j) * np.exp(1j * nu * math.log(4))) <= 1e-15


def test_f_coefficients_by_hand():
    st = am.stationary_points(-0.5)
    f11, f12, f21, f22, fh = am.f_coefficients(1.0, st, (1.0, 1.0), (0.0, 0.0))
    # sums of beta21/k^p over k = -1, 1: p=1 -> 0, p=2 -> 2, p=3 -> 0
    assert f11 == 2j and f12 == 0
    assert f21 == -2 and f22 == 0
    assert fh == -0.5 * (1j * (0 - 2j) - 2)
    zero = am.f_coefficients(0.0, st, (0j, 0j), (0j, 0j))
    assert all(z == 0 for z in zero)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        am.pc_coefficients(3, 0.1, 0.1, 0.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        am.pc_coefficients(1, 0.1, 0.1, 0.0, 0.0, -1.0)


@pytest.mark.parametrize("xi", [-0.25, -0.5, -1.0])
@pytest.mark.parametrize("t", [25.0, 100.0, 200.0])
def test_coefficient_invariants(accept_model, xi, t):
    c = accept_model.coefficients(xi, t)
    for j, (b12, b21, nu) in {1: (c.beta12_1, c.beta21_1, c.nu1), 2: (c.beta12_2, c.beta21_2, c.nu2)}.items():
        br = c.branches[j]
        assert br["unique"] and br["deviation"] <= am.PIN_TOL
        assert abs(abs(b12) ** 2 / nu - 1) <= 1e-8
        assert abs(b12 * b21 - nu) <= 1e-14
        assert br["continuity"] <= 1e-6
    # real-valued solution: f_hat and the x correction are real
    assert abs(c.f_hat.imag) <= 1e-12 * max(abs(c.f_hat), 1e-300) + 1e-16
    assert abs(c.x_coeff.imag) <= 1e-15
    assert c.delta1_imag == 0.0
    assert abs(c.f_hat) <= c.amplitude * (1 + 1e-9)
    assert abs(c.nu1 - c.nu2) <= 1e-8


def test_envelope_is_attained(accept_model):
    c0 = accept_model.coefficients(-0.5, 100.0)
    ratios = [abs(accept_model.coefficients(-0.5, t).f_hat) / c0.amplitude
              for t in np.linspace(100.0, 100.0 + math.pi, 200)]
    assert max(ratios) >= 0.999


def test_printed_second_point_cannot_pin(accept_data):
    model = am.AsymptoticModel(accept_data, convention="printed")
    with pytest.raises(am.BranchPinningError) as err:
        model.coefficients(-0.5, 100.0)
    assert min(d["deviation"] for d in err.value.diagnostics) > 1e-3
    loose = am.AsymptoticModel(accept_data, convention="printed", strict=False)
    c = loose.coefficients(-0.5, 100.0)
    assert c.branches[1]["unique"] and not c.branches[2]["unique"]


def test_fast_region_is_zero(accept_model):
    s = am.leading_order(accept_model, 50.0, 100.0)
    assert (s.u_leading, s.x_of_y, s.error_scale) == (0.0, 50.0, 0.1)


def test_transition_band(accept_model):
    with pytest.raises(am.TransitionRegionError):
        am.leading_order(accept_model, 1.0, 100.0)
    with pytest.raises(ValueError):
        am.leading_order(accept_model, -50.0, 100.0, p=2.0)


def test_error_scale(accept_model):
    s = am.leading_order(accept_model, -50.0, 64.0 * 100 / 64, p=4.0)
    assert math.isclose(s.error_scale, 100.0 ** (-1 + 1 / 8), rel_tol=1e-15)


def test_reflectionless_data_gives_zero():
    p = build_profile({"kind": "zero"}, SpatialGrid(12.0, 512))
    data = scattering.scattering_table(p, scattering.default_k_grid(64, 8.0))
    s = am.leading_order(data, -50.0, 100.0)
    assert s.u_leading == 0.0 and s.x_of_y == -50.0


def test_leading_order_against_direct_quadrature(accept_data, accept_model):
    # independent evaluation from the first stationary point only
    d = accept_data
    nu = -np.log1p(-np.abs(d.r) ** 2) / (2 * math.pi)
    nus = CubicSpline(d.k, nu)
    rre, rim = CubicSpline(d.k, d.r.real), CubicSpline(d.k, d.r.imag)
    xi, t = -0.5, 100.0
    rho = math.sqrt(-1 / (2 * xi))
    k1 = -rho
    r1 = complex(rre(k1), rim(k1))
    nu1 = -math.log1p(-abs(r1) ** 2) / (2 * math.pi)
    pts = d.k[(d.k > rho) & (d.k < 8)][:500]
    d1 = 2 * quad(lambda s: nus(s) / s**2, rho, 8, limit=2000, epsabs=1e-15, points=pts)[0]
    nk = float(nus(k1))
    b1 = (quad(lambda s: (nus(s) - nk) / (s - k1), k1 - 1, k1, limit=500, epsabs=1e-15)[0]
          + quad(lambda s: nus(s) / (s - k1), -8, k1 - 1, limit=2000, epsabs=1e-15)[0]
          + quad(lambda s: nus(s) / (s - k1), rho, 8, limit=2000, epsabs=1e-15)[0])
    rt1 = r1 * np.exp(-2j * (b1 + t / k1)) * np.exp(1j * nu1 * math.log(2 * t / rho**3))
    b12 = math.sqrt(2 * math.pi) * np.exp(1j * math.pi / 4 - math.pi * nu1 / 2) / (rt1 * np.exp(loggamma(-1j * nu1)))
    u = math.sqrt(2) * rho**-1.5 * b12.imag / math.sqrt(t)
    xshift = -d1 + math.sqrt(2) * rho**-0.5 * (nu1 / b12).real / math.sqrt(t)
    s = am.leading_order(accept_model, xi * t, t)
    assert abs(s.u_leading - u) <= 1e-9 * abs(u)
    assert abs((s.x_of_y - xi * t) - xshift) <= 1e-10
    assert math.isclose(s.envelope, math.sqrt(2 * nu1) * rho**-1.5 / math.sqrt(t), rel_tol=1e-9)


def test_curve_monotone_and_invertible(accept_model):
    t = 100.0
    ys = np.linspace(-100.0, 20.0, 241)
    rows = am.asymptotic_curve(accept_model, t, ys)
    assert all(abs(r.xi) >= am.XI_MIN for r in rows)
    assert len(rows) < ys.size
    xs = np.array([r.x_of_y for r in rows])
    assert np.all(np.diff(xs) > 0)
    y_back, _ = am.invert_curve(rows, xs[10])
    assert abs(y_back - rows[10].y) <= 1e-12


def test_envelope_decay_rate(accept_model):
    e = [am.leading_order(accept_model, -0.5 * t, t).envelope for t in (25.0, 100.0)]
    assert math.isclose(e[0] / e[1], 2.0, rel_tol=1e-12)


def test_coefficients_serialise(accept_model):
    j = accept_model.coefficients(-0.5, 100.0).to_json()
    assert isinstance(j["f_hat"], list) and len(j["f_hat"]) == 2
    assert "candidates" not in j["branches"]["1"]
