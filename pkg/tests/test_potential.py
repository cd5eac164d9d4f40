import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import betainc
from scipy.special import gamma as G

from stablegirsanov.errors import InvalidArgument
from stablegirsanov.kernels import fuchsian_kernel
from stablegirsanov.potential import (THREE_G_QUAD, _double_integral, _unit_ball_green, ball_green,
                                      c1_constant, conditioned_expectation, default_c1_grid, green,
                                      green_potential, poisson_constant, poisson_constant_report,
                                      poisson_harmonic_check, poisson_kernel, poisson_mass, r0_of, r0_table,
                                      three_g_integral)
from stablegirsanov.stable_process import StableParams
from stablegirsanov.validation import ball_occupation_quadrature


def _mean_exit_time(p, x):
    d, a = p.d, p.alpha
    return G(d / 2) / (2 ** a * G(1 + a / 2) * G((d + a) / 2)) * (1 - x @ x) ** (a / 2)


def _ball_green_betainc(p, x, y):
    # the incomplete-beta form evaluated without the power shortcut
    d, a = p.d, p.alpha
    diff2 = np.sum((x - y) ** 2)
    w = (1 - x @ x) * (1 - y @ y) / diff2
    return p.green_const * diff2 ** ((a - d) / 2) * betainc(a / 2, (d - a) / 2, w / (1 + w))


pts3 = st.tuples(*[st.floats(-0.55, 0.55)] * 3).map(np.array)


@given(pts3, pts3)
def test_ball_green_fast_path_matches_beta_form(x, y):
    p = StableParams(3, 1.0)
    if np.linalg.norm(x - y) < 1e-3:
        return
    assert _unit_ball_green(p, x, y) == pytest.approx(_ball_green_betainc(p, x, y), rel=1e-12)


@given(pts3, pts3, st.floats(0.2, 5.0))
def test_ball_green_properties(x, y, r):
    p = StableParams(3, 1.0)
    if np.linalg.norm(x - y) < 1e-3:
        return
    c = np.array([1.0, -2.0, 0.5])
    g = ball_green(p, c, r, c + r * x, c + r * y)
    assert g == pytest.approx(r ** (p.alpha - p.d) * ball_green(p, np.zeros(3), 1.0, x, y), rel=1e-12)
    assert g == pytest.approx(ball_green(p, c, r, c + r * y, c + r * x), rel=1e-12)
    assert 0 < g <= green(p, c + r * x, c + r * y)


def test_ball_green_rejects_outside():
    with pytest.raises(InvalidArgument):
        ball_green(StableParams(3, 1.0), np.zeros(3), 1.0, np.array([1.0, 0, 0]), np.zeros(3))


@pytest.mark.parametrize("d,a,tol", [(3, 1.0, 1e-6), (1, 0.5, 1e-5)])
def test_ball_green_integrates_to_mean_exit_time(d, a, tol):
    p = StableParams(d, a)
    q = ball_occupation_quadrature(p, np.zeros(d), np.zeros(d), 1.0, order=64)
    assert q == pytest.approx(_mean_exit_time(p, np.zeros(d)), rel=tol)


def test_green_potential_of_unit_ball_indicator():
    p = StableParams(3, 1.0)
    h = lambda y: (np.linalg.norm(y, axis=-1) < 1).astype(float)  # noqa: E731
    assert green_potential(p, h, np.zeros(3), breaks=[1.0]) == pytest.approx(2 / math.pi, rel=1e-6)


@pytest.mark.parametrize("d,a,ref", [(3, 1.0, 1.0), (1, 0.5, math.sqrt(math.pi))])
def test_green_potential_lorentzian(d, a, ref):
    # G * 1/(1+|y|^2) at 0: c sigma int r^(alpha-1)/(1+r^2) dr
    p = StableParams(d, a)
    h = lambda y: 1.0 / (1.0 + np.sum(np.square(y), axis=-1))  # noqa: E731
    gp = green_potential(p, h, np.zeros(d), radial=True, full_output=True)
    assert not gp.divergent
    assert gp.value == pytest.approx(ref, rel=1e-5)


def test_green_potential_detects_divergence():
    p = StableParams(3, 1.0)
    h = lambda y: 1.0 / np.sqrt(1.0 + np.sum(np.square(y), axis=-1))  # noqa: E731
    assert green_potential(p, h, np.zeros(3), radial=True) == math.inf


@pytest.mark.parametrize("d,a", [(1, 0.5), (3, 1.0), (3, 0.5)])
@pytest.mark.parametrize("r,xs", [(1.0, 0.0), (2.0, 0.7), (0.5, -0.4)])
def test_poisson_mass_is_one(d, a, r, xs):
    p = StableParams(d, a)
    x = np.zeros(d)
    x[0] = xs * r
    assert poisson_mass(p, r, x) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d,ref", [(1, 0.25231325), (3, 0.0081056946)])
def test_poisson_harmonic_two_routes(d, ref):
    # integral of P_r(x,z) f(z) for f = G(., w), w outside the ball, equals G(x,w) at x = 0
    p = StableParams(d, 0.5 if d == 1 else 1.0)
    w = np.zeros(d)
    w[0] = 2.5
    lhs, rhs = poisson_harmonic_check(p, 1.0, w)
    assert lhs == pytest.approx(rhs, rel=1e-8)
    assert rhs == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("d,a,k", [(1, 0.5, 3.0), (3, 1.0, 5.0)])
def test_poisson_constant_report(d, a, k):
    p = StableParams(d, a)
    rep = poisson_constant_report(p)
    assert rep["numeric"] == pytest.approx(poisson_constant(p))
    assert rep["standard_closed_form"] == pytest.approx(
        G(d / 2) * math.pi ** (-d / 2 - 1) * math.sin(math.pi * a / 2), rel=1e-10)
    assert rep["log_pi_of_ratio"] == pytest.approx(k, abs=1e-9)


def test_poisson_kernel_outside_only():
    p = StableParams(3, 1.0)
    z_in = np.array([[0.5, 0, 0]])
    z_out = np.array([[1.5, 0, 0]])
    assert poisson_kernel(p, 1.0, np.zeros(3), z_out)[0] > 0.0
    with pytest.raises(InvalidArgument):
        poisson_kernel(p, 1.0, np.zeros(3), z_in)


@pytest.mark.parametrize("a,b", [(0.0, 0.7), (0.7, -0.8), (0.99, 0.98), (-0.5, -0.8)])
def test_double_integral_constant_middle_oracle(a, b):
    # with middle = 1: int G_B(x,y) dy int G_B(z,w) dz / G_B(x,w) = E_x tau E_w tau / G_B(x,w)
    p = StableParams(3, 1.0)
    x, w = np.array([a, 0, 0.0]), np.array([b, 0, 0.0])
    v = _double_integral(p, x, w, lambda y, z, dyz: np.ones_like(dyz), 3.0, THREE_G_QUAD, True)
    ref = _mean_exit_time(p, x) * _mean_exit_time(p, w) / _unit_ball_green(p, x, w)
    assert v == pytest.approx(ref, rel=1e-2)


@pytest.mark.parametrize("a,b,ref", [(0.0, 0.7, 15.1121), (0.99, 0.98, 0.044910), (0.7, -0.8, 27.786),
                                     (0.0, 0.01, 0.071809), (-0.5, -0.8, 5.6811)])
def test_three_g_frozen_values(a, b, ref):
    p = StableParams(3, 1.0)
    v = three_g_integral(p, np.array([a, 0, 0.0]), np.array([b, 0, 0.0]), 1.5)
    assert v == pytest.approx(ref, rel=1e-4)


def test_three_g_symmetric():
    p = StableParams(3, 1.0)
    x, w = np.array([0.0, 0, 0]), np.array([0.7, 0, 0])
    assert three_g_integral(p, x, w, 1.5) == pytest.approx(three_g_integral(p, w, x, 1.5), rel=2e-2)


def test_three_g_axisymmetric_matches_full():
    p = StableParams(3, 1.0)
    x, w = np.array([0.0, 0, 0]), np.array([0.7, 0, 0])
    e = 1.5 - 1.0 - 3.0
    full = _double_integral(p, x, w, lambda y, z, d: d ** e, 1.5, THREE_G_QUAD, False)
    assert full == pytest.approx(three_g_integral(p, x, w, 1.5), rel=1e-2)


def test_default_grid():
    g = default_c1_grid(3)
    assert len(g) == 25
    assert all(np.linalg.norm(x - w) > 0 for x, w in g)


def test_r0_formula():
    p = StableParams(3, 1.0)
    assert r0_of(2.0, p, 1.5, 0.5, c1=10.0) == pytest.approx((0.5 / 20.0) ** (1 / 1.5))
    rows = r0_table([{"d": 3, "alpha": 1.0, "beta": 1.5, "C1": 10.0}], 1.0, [0.5, 0.1])
    assert [r["eps"] for r in rows] == [0.5, 0.1] and rows[1]["r0"] < rows[0]["r0"]
    with pytest.raises(InvalidArgument):
        r0_of(1.0, p, 0.9, 0.5, c1=1.0)


def test_conditioned_expectation_scaling():
    # F = C |y-z|^beta on a ball of radius r: E = c~ C r^beta 3G(x/r, w/r)
    from stablegirsanov.kernels import KernelSpec
    p = StableParams(3, 1.0)
    K = KernelSpec("pow", lambda y, z: np.linalg.norm(y - z, axis=-1) ** 1.5, 0.0, 8.0,
                   frozenset(), {}, radial=False, near_diag_exponent=1.5)
    r = 0.1
    x, w = np.array([0.0, 0, 0]), np.array([0.7, 0, 0])
    v = conditioned_expectation(p, np.zeros(3), r, r * x, r * w, K)
    assert v == pytest.approx(p.levy_const * r ** 1.5 * three_g_integral(p, x, w, 1.5), rel=1e-10)
    assert conditioned_expectation(p, np.zeros(3), r, r * x, r * w, fuchsian_kernel(1.0, 1.5)) <= v


@pytest.mark.slow
def test_c1_constant_base_grid():
    res = c1_constant(StableParams(3, 1.0), 1.5)
    assert res.value == pytest.approx(29.8108, rel=1e-4)
    assert all(math.isfinite(v) and v > 0 for v in res.values)
