import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablegirsanov.errors import InvalidArgument
from stablegirsanov.kernels import (ICBeta, Fuchsian, annulus_kernel, capped_fuchsian_kernel,
                                    counterexample_geometry, counterexample_kernel, entropy_kernel,
                                    fuchsian_kernel, h_field, inverse_kernel, kernel_field, log1p_minus_ratio,
                                    make_kernel, membership_report, one_plus_x_log1p_minus_x, sandwich_constants,
                                    scaled_kernel, square_kernel, tabulate_field, theorem3_kernel, x_minus_log1p,
                                    zero_kernel)
from stablegirsanov.stable_process import StableParams, sphere_area

small = st.floats(-0.9, 5.0, allow_nan=False)


@given(small)
def test_scalar_helpers_match_direct_forms(x):
    # exact rational arithmetic would be overkill; long double route is independent of the series
    xl = np.longdouble(x)
    assert float(x_minus_log1p(np.array([x]))[0]) == pytest.approx(float(xl - np.log1p(xl)), rel=1e-9, abs=1e-15)
    assert float(one_plus_x_log1p_minus_x(np.array([x]))[0]) == pytest.approx(
        float((1 + xl) * np.log1p(xl) - xl), rel=1e-9, abs=1e-15)
    assert float(log1p_minus_ratio(np.array([x]))[0]) == pytest.approx(
        float(np.log1p(xl) - xl / (1 + xl)), rel=1e-9, abs=1e-15)


def test_scalar_helpers_small_argument_leading_terms():
    x = np.array([1e-8, -1e-8])
    assert np.allclose(x_minus_log1p(x), x ** 2 / 2, rtol=1e-7)
    assert np.allclose(log1p_minus_ratio(x), x ** 2 / 2, rtol=1e-7)
    assert np.allclose(one_plus_x_log1p_minus_x(x), x ** 2 / 2, rtol=1e-7)


KERNELS = [
    lambda: fuchsian_kernel(1.0, 1.5),
    lambda: fuchsian_kernel(0.5, 0.7),
    lambda: capped_fuchsian_kernel(1.0, 1.0),
    lambda: capped_fuchsian_kernel(2.0, 2.0),
    lambda: annulus_kernel(0.5, 1.0, 2.0),
    lambda: zero_kernel(),
    lambda: scaled_kernel(fuchsian_kernel(1.0, 1.0), -0.5),
]


@pytest.mark.parametrize("make", KERNELS)
@pytest.mark.parametrize("d", [1, 3])
def test_membership(make, d, rng):
    F = make()
    rep = membership_report(F, d, 4000, rng)
    assert all(rep.values()), rep


@given(st.floats(0.1, 3.0), st.floats(0.2, 3.0))
def test_fuchsian_bound_is_attained_order(C, beta):
    # the declared upper bound is sharp up to the sampling
    F = fuchsian_kernel(C, beta)
    x = np.array([[1e6, 0.0]])
    y = -x
    assert F(x, y)[0] <= F.upper_bound * (1 + 1e-12)
    assert F(x, y)[0] >= 0.9 * C * 2 ** beta / 2 if beta >= 1 else True


def test_counterexample_geometry(p1):
    c, r = counterexample_geometry(p1, 0.25, 4)
    assert c[:, 0].tolist() == [16.0, 256.0, 4096.0, 65536.0]
    assert r.tolist() == [9.0, 65.0, 513.0, 4097.0]


def test_counterexample_constraints(p1):
    with pytest.raises(InvalidArgument):
        counterexample_kernel(p1, 0.0, 1.0)
    with pytest.raises(InvalidArgument):
        counterexample_kernel(p1, 0.25, 0.4)
    with pytest.raises(InvalidArgument):
        counterexample_kernel(StableParams(1, 1.5), 0.9, 2.0)  # alpha - gamma < 1/2 but recurrent


def test_theorem3_square_is_phi_over_64(p1, rng):
    F = theorem3_kernel(p1, 0.2, 0.6, 3)
    phi = counterexample_kernel(p1, 0.4, 1.2, 3)
    c, r = counterexample_geometry(p1, 0.4, 3)
    y = c[rng.integers(0, 3, 500)] + rng.uniform(-1, 1, (500, 1)) * 0.9 * r[0]
    z = y + rng.uniform(-1.2, 1.2, (500, 1))
    assert np.allclose(F(y, z) ** 2, phi(y, z) / 64.0, rtol=1e-13, atol=0)
    rep = membership_report(F, 1, 0, rng, pairs=(y, z))
    assert all(rep.values())
    # pointwise F <= (1/2)|y-z|^beta / (1 + |y|^gamma + |z|^gamma)
    bound = 0.5 * np.abs(y - z)[:, 0] ** 0.6 / (1 + np.abs(y[:, 0]) ** 0.2 + np.abs(z[:, 0]) ** 0.2)
    assert np.all(F(y, z) <= bound + 1e-15)


@pytest.mark.parametrize("d,a,C,beta", [(1, 0.5, 1.0, 1.0), (3, 1.0, 1.0, 2.0), (3, 1.0, 0.5, 1.5)])
def test_field_of_min_kernel_closed_form(d, a, C, beta):
    # K(x,y) = C min(|x-y|, 1)^beta: h = c~ sigma C (1/(beta-alpha) + 1/alpha), independent of x
    p = StableParams(d, a)
    from stablegirsanov.kernels import KernelSpec
    K = KernelSpec("min", lambda x, y: C * np.minimum(np.linalg.norm(x - y, axis=-1), 1.0) ** beta,
                   0.0, C, frozenset(), {}, radial=True, near_diag_exponent=beta, breaks=lambda x: [1.0])
    ref = p.levy_const * sphere_area(d) * C * (1 / (beta - a) + 1 / a)
    x = np.array([[0.0] * d, [3.0] + [0.0] * (d - 1)])
    assert np.allclose(kernel_field(p, K, x), ref, rtol=1e-6)
    # with a cutoff the small-jump part  c~ sigma C eps^(beta-alpha)/(beta-alpha)  is removed
    eps = 0.1
    cut = ref - p.levy_const * sphere_area(d) * C * eps ** (beta - a) / (beta - a)
    assert np.allclose(kernel_field(p, K, x, cutoff=eps), cut, rtol=1e-6)


def test_capped_field_value(p3):
    F = capped_fuchsian_kernel(1.0, 2.0)
    assert h_field(p3, F, np.zeros((1, 3)))[0] == pytest.approx(1.2732, rel=1e-4)


def test_annulus_field_is_constant(p3):
    # F depends on the jump size only: h = c~ sigma v (r_in^-alpha - r_out^-alpha)/alpha
    F = annulus_kernel(0.5, 1.0, 2.0)
    v = h_field(p3, F, np.array([[0.0, 0, 0], [1.5, 0, 0], [10.0, 0, 0]]))
    ref = p3.levy_const * 4 * math.pi * 0.5 * (1.0 - 0.5)
    assert np.allclose(v, ref, rtol=1e-8)


def test_fuchsian_field_log_over_r_decay(p3):
    # for beta = alpha = 1 the field behaves like c~ sigma C log(r) / (2 r):
    # r h(r) gains c~ sigma C ln(10) / 2 per decade
    F = fuchsian_kernel(1.0, 1.0)
    h = tabulate_field(p3, F, cutoff=1e-2, r_min=1e1, r_max=1e3, n=3)
    rh = h.values * h.radii
    step = p3.levy_const * 4 * math.pi * math.log(10) / 2
    assert rh[2] - rh[1] == pytest.approx(step, rel=0.05)


def test_derived_kernels(p1, rng):
    F = capped_fuchsian_kernel(1.0, 1.0)
    x = rng.standard_normal((200, 1)) * 3
    y = x + rng.standard_normal((200, 1))
    f = F(x, y)
    assert np.allclose(entropy_kernel(F)(x, y), f - np.log1p(f), rtol=1e-9, atol=1e-16)
    assert np.allclose(square_kernel(F)(x, y), f * f)
    assert np.allclose(inverse_kernel(F)(x, y), -f / (1 + f))


def test_sandwich_constants():
    lo, hi = sandwich_constants(x_minus_log1p, 0.0, 1.0)
    # (x - log(1+x))/x^2 decreases from 1/2 at 0 to 1 - log 2 at 1
    assert lo == pytest.approx(1 - math.log(2), rel=1e-6) and hi == pytest.approx(0.5, rel=1e-5)


def test_make_kernel_registry(p1):
    assert make_kernel("zero", {}, p1).is_zero
    assert make_kernel("fuchsian", {"C": 2, "beta": 1}, p1).params["C"] == 2
    with pytest.raises(InvalidArgument):
        make_kernel("nope", {}, p1)


def test_class_tags():
    F = fuchsian_kernel(1.0, 1.5)
    assert isinstance(F.tag(Fuchsian), Fuchsian) and isinstance(F.tag(ICBeta), ICBeta)
