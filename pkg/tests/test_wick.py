import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochvortex.basis import e_k_eval
from stochvortex.observables import r_statistic_batch
from stochvortex.wick import (SymmetricKernelSpec, exact_r_mean, exact_r_second_moment,
                              exact_second_moment, gaussian_moment, isserlis_fourth,
                              quadratic_second_moment, moment_by_enumeration, s1_closed_form,
                              second_moment_by_enumeration)

waves = st.tuples(st.integers(-2, 2), st.integers(-2, 2)).filter(lambda k: k != (0, 0))


def test_gaussian_moments():
    assert [gaussian_moment(p) for p in range(9)] == [1, 0, 1, 0, 3, 0, 15, 0, 105]


def test_isserlis_matches_enumeration():
    for idx in itertools.product(range(4), repeat=4):
        assert isserlis_fourth(*idx) == moment_by_enumeration(idx)


# -- the quadratic-functional formula ----------------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3, 4, 7, 16, 100])
def test_constant_kernel_gives_three(N):
    assert exact_second_moment(SymmetricKernelSpec.constant(), N) == pytest.approx(3.0,
                                                                                   abs=1e-14)


@given(waves, waves, st.floats(-2, 2), st.integers(1, 30))
def test_homogeneity(p, q, c, N):
    f = SymmetricKernelSpec([(c, p, q), (0.5, q, q)])
    assert exact_second_moment(f.scaled(2.0), N) == pytest.approx(4 * exact_second_moment(f, N),
                                                                   rel=1e-12, abs=1e-12)


def test_kernel_symmetry_is_exact(rng):
    f = SymmetricKernelSpec([(0.7, (1, 0), (0, -1)), (1.3, (2, 1), None)])
    x, y = rng.random((20, 2)), rng.random((20, 2))
    np.testing.assert_array_equal(f.evaluate(x, y), f.evaluate(y, x))


@pytest.mark.parametrize("f", [
    SymmetricKernelSpec.outer((1, 0)),
    SymmetricKernelSpec([(1.0, (1, 0), (0, 1))]),
    SymmetricKernelSpec([(0.5, (1, 1), (1, 1)), (-1.0, (1, 0), None), (2.0, None, None)]),
])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_formula_agrees_with_full_enumeration(f, N):
    assert exact_second_moment(f, N) == pytest.approx(second_moment_by_enumeration(f, N),
                                                      rel=1e-12, abs=1e-12)


def test_integrals_agree_with_quadrature():
    f = SymmetricKernelSpec([(0.5, (1, 1), (1, 0)), (-1.0, (0, 1), None)])
    g = (np.arange(32) + 0.5) / 32
    x = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    F = f.evaluate(x[:, None], x[None])
    assert f.diagonal_integral() == pytest.approx(np.diag(F).mean(), abs=1e-12)
    assert f.diagonal_square_integral() == pytest.approx((np.diag(F) ** 2).mean(), abs=1e-12)
    assert f.square_integral() == pytest.approx((F ** 2).mean(), abs=1e-12)


def test_outer_kernel_matches_monte_carlo():
    a, N, S = (1, 0), 4, 100_000
    g = np.random.default_rng(0)
    xi = g.standard_normal((S, N))
    X = g.random((S, N, 2))
    q = (xi * e_k_eval(a, X)).sum(1) ** 2 / N
    exact = exact_second_moment(SymmetricKernelSpec.outer(a), N)
    assert abs((q ** 2).mean() - exact) < 3 * (q ** 2).std() / math.sqrt(S)


def test_quadratic_second_moment_arithmetic():
    assert quadratic_second_moment(1.0, 1.0, 1.0, 1) == 3.0
    assert quadratic_second_moment(0.0, 0.0, 1.0, 2) == 1.0


# -- R statistic ---------------------------------------------------------------------------

def test_r_moment_matches_monte_carlo_small_cutoff():
    l, m, n, N, S = (1, 0), (0, 1), 2, 4, 1_000_000
    g = np.random.default_rng(1)
    xi = g.standard_normal((S, N))
    X = g.random((S, N, 2))
    r2 = r_statistic_batch(xi, X, l, m, n) ** 2
    exact = exact_r_second_moment(l, m, n, N).value
    assert abs(r2.mean() - exact) < 3 * r2.std() / math.sqrt(S)


@given(waves, waves, st.integers(1, 4), st.integers(1, 20))
def test_split_routes_agree_with_generic(l, m, n, N):
    split = exact_r_second_moment(l, m, n, N, method="split").value
    generic = exact_r_second_moment(l, m, n, N, method="generic").value
    assert split == pytest.approx(generic, rel=1e-9, abs=1e-9)
    assert split >= -1e-12


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_l_equal_m_moment_nonnegative(n):
    r = exact_r_second_moment((1, 0), (1, 0), n, 4)
    assert r.method == "J"
    assert r.value >= 0


def test_l_equal_m_first_term_uses_square_identity():
    # J1,1 = (1 - 1/N) (sum C^2 int e_k^2 e_l^2)^2 = (1 - 1/N) (eps^-2 |l|^2 / 2)^2
    from stochvortex.basis import eps_n
    for n in (2, 5):
        r = exact_r_second_moment((1, 1), (1, 1), n, 6)
        assert r.terms["J11"] == pytest.approx((1 - 1 / 6) * (0.5 * eps_n(n) ** -2 * 2) ** 2)
        assert r.terms["shift"] == pytest.approx(0.25 * eps_n(n) ** -4 * 4)


@pytest.mark.parametrize("l,m", [((1, 0), (0, 1)), ((1, 0), (1, 1)), ((2, 1), (-1, 1))])
def test_s11_vanishes_for_distinct_modes(l, m):
    r = exact_r_second_moment(l, m, 4, 8)
    assert r.method == "S"
    assert r.terms["S11"] == 0.0


def test_s1_decreases_with_vortex_count():
    l, m = (1, 0), (1, 1)
    s1 = [exact_r_second_moment(l, m, N, N).terms["S1"] for N in (4, 8, 16)]
    for N, v in zip((4, 8, 16), s1):
        assert s1_closed_form(l, m, N, N) == pytest.approx(v, rel=1e-12)
    s1.append(s1_closed_form(l, m, 32, 32))
    assert all(b < a for a, b in zip(s1, s1[1:]))


def test_s1_closed_form_requires_distinct_modes():
    with pytest.raises(ValueError):
        s1_closed_form((1, 0), (1, 0), 4, 4)


def test_r_mean_is_zero():
    for l, m in [((1, 0), (0, 1)), ((1, 0), (1, 0)), ((1, 1), (2, -1))]:
        assert exact_r_mean(l, m, 6) == pytest.approx(0.0, abs=1e-12)


def test_budget_exceeded_message():
    with pytest.raises(ValueError, match="raise max_cutoff"):
        exact_r_second_moment((1, 0), (0, 1), 20, 4)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        exact_r_second_moment((1, 0), (0, 1), 2, 0)
    with pytest.raises(ValueError):
        exact_r_second_moment((1, 0), (0, 1), 2, 4, method="guess")
