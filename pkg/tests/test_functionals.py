import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablegirsanov.errors import InvalidArgument, InvariantViolation
from stablegirsanov.functionals import (accumulate, compensator_field, doleans_exponential_pair_check,
                                        inverse_density_check, kernel_values, sequence_equivalence_check)
from stablegirsanov.kernels import (KernelSpec, annulus_kernel, capped_fuchsian_kernel, fuchsian_kernel,
                                    kernel_field, scaled_kernel, zero_kernel)
from stablegirsanov.stable_process import JumpPath, SmallJumpPolicy, StableParams, sample_jump_path


def _hand_path():
    # three jumps of length 1.5 along the axis, horizon 4
    times = np.array([0.5, 1.0, 2.5])
    post = np.array([[1.5], [3.0], [1.5]])
    pre = np.array([[0.0], [1.5], [3.0]])
    return JumpPath(np.zeros(1), 4.0, times, pre, post, post[-1].copy(), 0.1, SmallJumpPolicy.DROP)


def test_accumulate_by_hand():
    F = annulus_kernel(0.5, 1.0, 2.0)
    s = accumulate(_hand_path(), F, lambda x: np.full(np.atleast_2d(x).shape[0], 0.25))
    assert s.F.tolist() == [0.5, 0.5, 0.5]
    assert s.A.tolist() == [0.5, 1.0, 1.5, 1.5]
    assert np.allclose(s.A_tilde, np.array([1, 2, 3, 3]) * (1 - math.exp(-0.5)))
    assert np.allclose(s.QV, [0.25, 0.5, 0.75, 0.75])
    assert np.allclose(s.compensator, 0.25 * np.array([0.5, 1.0, 2.5, 4.0]))
    assert s.M[-1] == pytest.approx(1.5 - 1.0)
    assert s.logL[-1] == pytest.approx(0.5 + 3 * (math.log(1.5) - 0.5))
    assert s.at(1.2)["A"] == 1.0 and s.at(0.1)["A"] == 0.0


def test_compensator_uses_state_between_jumps():
    F = annulus_kernel(0.5, 1.0, 2.0)
    h = lambda x: np.atleast_2d(x)[:, 0]  # noqa: E731  h(x) = x
    s = accumulate(_hand_path(), F, h)
    # X = 0 on [0,.5), 1.5 on [.5,1), 3 on [1,2.5), 1.5 on [2.5,4]
    assert s.compensator[-1] == pytest.approx(0 + 0.75 + 4.5 + 2.25)


def test_kernel_values_rejects_killing_jumps():
    bad = KernelSpec("bad", lambda x, y: np.full(np.broadcast_shapes(x.shape, y.shape)[:-1], -1.0),
                     -0.5, 0.0, frozenset(), {})
    with pytest.raises(InvariantViolation):
        kernel_values(_hand_path(), bad)


def test_accumulate_needs_lower_bound():
    with pytest.raises(InvalidArgument):
        KernelSpec("low", lambda x, y: 0.0, -1.0, 0.0)
    with pytest.raises(InvalidArgument):
        scaled_kernel(annulus_kernel(0.5), -2.0)


@given(st.integers(0, 10 ** 6), st.floats(0.05, 0.9))
def test_invariants_on_random_paths(seed, c):
    p = StableParams(1, 0.5)
    F = scaled_kernel(capped_fuchsian_kernel(1.0, 1.0), c)
    path = sample_jump_path(p, np.zeros(1), 5.0, 0.05, SmallJumpPolicy.DROP, seed)
    h = lambda x: np.full(np.atleast_2d(x).shape[0], 0.1)  # noqa: E731
    s = accumulate(path, F, h)
    assert s.check_invariants(F.upper_bound) == []
    assert doleans_exponential_pair_check(path, F, h).rel_err < 1e-10
    assert inverse_density_check(path, F, h).rel_err < 1e-10


@given(st.integers(0, 10 ** 6))
def test_inverse_density_with_negative_kernel(seed):
    p = StableParams(3, 1.0)
    F = scaled_kernel(fuchsian_kernel(1.0, 1.5), -0.4)
    path = sample_jump_path(p, np.zeros(3), 3.0, 0.05, SmallJumpPolicy.DROP, seed)
    assert inverse_density_check(path, F, lambda x: np.ones(np.atleast_2d(x).shape[0])).rel_err < 1e-10


def test_pair_identity_needs_small_kernel():
    with pytest.raises(InvalidArgument):
        doleans_exponential_pair_check(_hand_path(), annulus_kernel(1.5), lambda x: 0.0)


def test_zero_kernel_density_is_one():
    p = StableParams(1, 0.5)
    path = sample_jump_path(p, np.zeros(1), 3.0, 0.01, SmallJumpPolicy.DROP, 1)
    s = accumulate(path, zero_kernel(), compensator_field(p, zero_kernel(), 0.01))
    assert np.all(s.logL == 0) and np.all(s.A == 0)


def test_brownian_match_compensator_close_to_drop():
    p = StableParams(3, 1.0)
    F = capped_fuchsian_kernel(1.0, 2.0)
    h = compensator_field(p, F, 0.05)
    a = sample_jump_path(p, np.zeros(3), 5.0, 0.05, SmallJumpPolicy.BROWNIAN_MATCH, 3)
    s = accumulate(a, F, h)
    assert 0 < s.compensator[-1] < 5.0 * h(np.zeros((1, 3)))[0] * 1.01


def test_compensator_field_table_matches_direct(p3):
    F = capped_fuchsian_kernel(1.0, 1.0)
    h = compensator_field(p3, F, 0.01)
    x = np.array([[0.7, 0.0, 0.0], [0.0, 13.0, 0.0]])
    assert np.allclose(h(x), kernel_field(p3, F, x, cutoff=0.01), rtol=1e-4)


def test_sequence_equivalence_square_summable():
    a = 0.5 ** np.arange(1, 60)
    s = sequence_equivalence_check(a)
    assert s.sumsq == pytest.approx(1 / 3)
    assert 0 < s.product <= 1


def test_sequence_equivalence_harmonic_product():
    # a_n = n^(-1/2): sum a^2 diverges and the product decays like n^(-1/4),
    # i.e. it is about e^(-(ln n + gamma)/4) up to a convergent correction
    n = np.arange(1, 10 ** 6 + 1, dtype=float)
    s = sequence_equivalence_check(n ** -0.5, cumulative=True)
    p5, p6 = s.product[10 ** 5 - 1], s.product[10 ** 6 - 1]
    assert p6 * 1e6 ** 0.25 == pytest.approx(p5 * 1e5 ** 0.25, rel=5e-3)
    assert 0.01 < p6 < 0.05
    assert s.sumsq[-1] == pytest.approx(math.log(1e6) + 0.5772156649, rel=1e-6)


@given(st.lists(st.floats(-0.9, 10.0), min_size=1, max_size=50))
def test_sequence_terms_positive(a):
    s = sequence_equivalence_check(a)
    assert s.sumsq >= s.sumsq_ratio - 1e-12 or min(a) < 0
    assert s.product > 0


def test_sequence_rejects_killing():
    with pytest.raises(InvalidArgument):
        sequence_equivalence_check([0.1, -1.0])
