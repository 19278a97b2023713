import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochvortex.basis import (SpectralCutoff, SpectralField, WaveVector, as_wave,
                               basis_matrix, c_coeff, c_matrix, e_k_eval, e_k_grad,
                               e_k_hess, eps_n, lambda_array, lambda_set,
                               product_integral_batch, sigma_k_eval, sigma_k_jacobian,
                               trig_product_integral)

SQ2 = math.sqrt(2)

nonzero = st.tuples(st.integers(-5, 5), st.integers(-5, 5)).filter(lambda k: k != (0, 0))
small = st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(lambda k: k != (0, 0))
points = st.tuples(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))


def grid(R):
    g = np.arange(R) / R
    return np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)


# -- wave vectors and the index set ------------------------------------------

def test_zero_wave_vector_rejected():
    with pytest.raises(ValueError):
        WaveVector(0, 0)


@given(nonzero)
def test_sign_class_flips_under_negation(k):
    w = as_wave(k)
    assert w.positive == (k[0] > 0 or (k[0] == 0 and k[1] > 0))
    assert (-w).positive != w.positive


def test_lambda_small_cases():
    assert lambda_set(0) == []
    assert {tuple(k) for k in lambda_set(1)} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    two = lambda_array(2)
    assert len(two) == 12
    norms = sorted((two ** 2).sum(1).tolist())
    assert norms == [1] * 4 + [2] * 4 + [4] * 4


def test_lambda_is_lexicographic():
    ks = [tuple(k) for k in lambda_array(6)]
    assert ks == sorted(ks)


@pytest.mark.parametrize("n", range(1, 40))
def test_lambda_size_divisible_by_four(n):
    assert len(lambda_array(n)) % 4 == 0


def test_eps_values_and_monotonicity():
    assert eps_n(1) == pytest.approx(0.5, abs=1e-15)
    assert eps_n(2) == pytest.approx(7 ** -0.5, abs=1e-15)
    vals = [eps_n(n) for n in range(1, 65)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_cutoff_rejects_nonpositive():
    with pytest.raises(ValueError):
        SpectralCutoff(0)
    assert SpectralCutoff(3).size == len(lambda_array(3))


# -- pointwise values ----------------------------------------------------------

def test_basis_examples():
    assert e_k_eval((1, 0), (0, 0)) == pytest.approx(SQ2)
    assert e_k_eval((1, 0), (0.5, 0)) == pytest.approx(-SQ2)
    assert e_k_eval((0, -1), (0, 0.25)) == pytest.approx(-SQ2)


def test_sigma_examples():
    np.testing.assert_allclose(sigma_k_eval((1, 0), (0, 0)), [0, -1], atol=1e-15)
    np.testing.assert_allclose(sigma_k_eval((1, 0), (0.25, 0)), [0, 0], atol=1e-15)


@given(nonzero, points)
def test_sigma_pair_amplitude(k, x):
    s = sigma_k_eval(k, x)
    t = sigma_k_eval(tuple(-np.array(k)), x)
    n2 = k[0] ** 2 + k[1] ** 2
    assert s @ s + t @ t == pytest.approx(1 / n2, rel=1e-12)


def test_c_coeff_examples():
    assert c_coeff((1, 0), (0, 1)) == -1
    assert c_coeff((1, 0), (1, 0)) == 0
    assert c_coeff((1, 1), (2, 0)) == 1


@given(nonzero, nonzero)
def test_c_matrix_matches_scalar(k, l):
    assert c_matrix(np.array([k]), np.array([l]))[0, 0] == pytest.approx(c_coeff(k, l))


@given(nonzero, points)
def test_gradient_and_hessian_closed_forms(k, x):
    h = 1e-6
    x = np.array(x)
    fd = [(e_k_eval(k, x + h * e) - e_k_eval(k, x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(e_k_grad(k, x), fd, atol=1e-5 * (1 + np.abs(k).max() ** 2))
    fd2 = np.array([(e_k_grad(k, x + h * e) - e_k_grad(k, x - h * e)) / (2 * h)
                    for e in np.eye(2)]).T
    np.testing.assert_allclose(e_k_hess(k, x), fd2, atol=1e-4 * (1 + np.abs(k).max() ** 3))


def test_basis_matrix_matches_pointwise(rng):
    x = rng.random((7, 2))
    ks = lambda_array(3)
    B = basis_matrix(ks, x)
    for j, k in enumerate(ks):
        np.testing.assert_allclose(B[:, j], e_k_eval(k, x), atol=1e-14)


# -- identities -----------------------------------------------------------------

def sigma_sum(n, x):
    ks = lambda_array(n)
    S = np.stack([sigma_k_eval(k, x) for k in ks])          # (K, P, 2)
    return np.einsum("kpi,kpj->pij", S, S)


@pytest.mark.parametrize("n", range(1, 17))
def test_sigma_covariance_identity(n):
    x = grid(32)
    target = 0.25 * eps_n(n) ** -2 * np.eye(2)
    np.testing.assert_allclose(sigma_sum(n, x), np.broadcast_to(target, (len(x), 2, 2)),
                               atol=1e-10, rtol=0)


def test_c_square_sum_identity():
    ls = np.array([(a, b) for a in range(-5, 6) for b in range(-5, 6)
                   if (a, b) != (0, 0) and a * a + b * b <= 25])
    for n in range(1, 33):
        C = c_matrix(lambda_array(n), ls)
        target = 0.5 * eps_n(n) ** -2 * (ls ** 2).sum(1)
        np.testing.assert_allclose((C ** 2).sum(0), target, atol=1e-10, rtol=0)


def test_sigma_self_transport_vanishes(rng):
    x = rng.random((100, 2))
    for k in lambda_array(8):
        s = sigma_k_eval(k, x)
        J = sigma_k_jacobian(k, x)
        np.testing.assert_allclose(np.einsum("pij,pj->pi", J, s), 0, atol=1e-8)


def test_sigma_jacobian_matches_finite_difference(rng):
    x = rng.random((5, 2))
    h = 1e-6
    for k in [(1, 0), (-2, 3), (0, -4)]:
        fd = np.stack([(sigma_k_eval(k, x + h * e) - sigma_k_eval(k, x - h * e)) / (2 * h)
                       for e in np.eye(2)], axis=-1)
        np.testing.assert_allclose(sigma_k_jacobian(k, x), fd, atol=1e-6)


def test_sigma_dot_grad_identity(rng):
    x = rng.random((100, 2))
    small_set = [tuple(k) for k in lambda_array(5)]
    for k in small_set:
        s = sigma_k_eval(k, x)
        ek = e_k_eval(k, x)
        for l in small_set:
            lhs = (s * e_k_grad(l, x)).sum(-1)
            rhs = SQ2 * np.pi * c_coeff(k, l) * ek * e_k_eval((-l[0], -l[1]), x)
            assert np.abs(lhs - rhs).max() < 1e-10


@pytest.mark.parametrize("l,m", [((1, 0), (0, 1)), ((1, 0), (1, 0)), ((2, 1), (-1, 3)),
                                 ((1, 1), (1, 0))])
@pytest.mark.parametrize("n", [1, 3, 8])
def test_weighted_square_sum_is_constant(l, m, n):
    ks = lambda_array(n)
    C = c_matrix(ks, np.array([l, m]))
    vals = basis_matrix(ks, grid(48)) ** 2 @ (C[:, 0] * C[:, 1])
    assert vals.max() - vals.min() < 1e-10
    assert vals.mean() == pytest.approx(0.5 * eps_n(n) ** -2 * (l[0] * m[0] + l[1] * m[1]),
                                        abs=1e-10)


# -- exact product integrals -------------------------------------------------------

@given(nonzero)
def test_single_factor_integrates_to_zero(k):
    assert trig_product_integral([k]) == 0


@given(nonzero, nonzero)
def test_orthonormality(k, l):
    assert trig_product_integral([k, l]) == (1.0 if k == l else 0.0)


def test_product_integral_examples():
    assert trig_product_integral([]) == 1.0
    assert trig_product_integral([(1, 0), (1, 0), (0, 1), (0, 1)]) == pytest.approx(1.0)
    assert trig_product_integral([(1, 0)] * 4) == pytest.approx(1.5)
    assert trig_product_integral([(-1, 0)] * 3) == 0.0


def test_product_integral_rejects_too_many_factors():
    with pytest.raises(ValueError):
        trig_product_integral([(1, 0)] * 9)


def test_product_integral_vs_quadrature():
    g = np.random.default_rng(7)
    x = grid(256)
    for _ in range(50):
        m = int(g.integers(1, 5))
        ks = []
        while len(ks) < m:
            k = tuple(int(v) for v in g.integers(-3, 4, size=2))
            if k != (0, 0):
                ks.append(k)
        quad = np.prod([e_k_eval(k, x) for k in ks], axis=0).mean()
        assert trig_product_integral(ks) == pytest.approx(quad, abs=1e-8)


@given(st.lists(small, min_size=1, max_size=6))
def test_product_integral_is_permutation_invariant(ks):
    a = trig_product_integral(ks)
    b = trig_product_integral(list(reversed(ks)))
    assert a == b
    assert a * 2 ** (len(ks) / 2) == pytest.approx(round(a * 2 ** (len(ks) / 2)), abs=1e-9)


def test_batch_matches_scalar():
    ks = np.array([[(1, 0), (1, 0), (2, 0)], [(1, 1), (-1, 0), (0, -1)],
                   [(1, 2), (1, -2), (2, 0)]])
    out = product_integral_batch(ks)
    for row, v in zip(ks, out):
        assert v == trig_product_integral([tuple(k) for k in row])


# -- spectral fields --------------------------------------------------------------

def test_spectral_field_mapping_requires_every_key():
    with pytest.raises(KeyError):
        SpectralField.from_mapping(1, {(1, 0): 1.0})
    with pytest.raises(KeyError):
        SpectralField.from_mapping(1, {(1, 0): 1, (-1, 0): 0, (0, 1): 0, (0, -1): 0, (1, 1): 0})
    f = SpectralField.from_mapping(1, {(1, 0): 1, (-1, 0): 2, (0, 1): 3, (0, -1): 4})
    assert f[(0, -1)] == 4
    assert dict((tuple(k), v) for k, v in f.items())[(-1, 0)] == 2


def test_spectral_field_shape_checked():
    with pytest.raises(ValueError):
        SpectralField(2, np.zeros(3))


def test_spectral_field_evaluate(rng):
    f = SpectralField(2, rng.standard_normal(12))
    x = rng.random((4, 2))
    direct = sum(v * e_k_eval(k, x) for k, v in f.items())
    np.testing.assert_allclose(f.evaluate(x), direct, atol=1e-13)
