import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochvortex.basis import (SpectralField, c_matrix, e_k_eval, e_k_hess, lambda_array)
from stochvortex.biot_savart import KernelConfig, h_phi_eval
from stochvortex.observables import (CylindricalFunction, generator_apply, mode_label,
                                     pair, pair_array, quadratic_form, quadratic_form_direct,
                                     quadratic_forms, r_statistic, r_statistic_batch,
                                     read_timeseries_csv, sobolev_norm, spectral_coeffs,
                                     write_timeseries_csv)
from stochvortex.particles import NoiseConfig, VortexState, sample_initial, simulate_run
from stochvortex.wick import exact_r_mean, h_phi_square_integral, quadratic_second_moment

DIRECT = KernelConfig(grid_resolution=None)
seeds = st.integers(0, 2 ** 32 - 1)


def state(seed, n):
    return sample_initial(n, np.random.default_rng(seed))


def initial_batch(S, N, seed):
    g = np.random.default_rng(seed)
    return g.standard_normal((S, N)), g.random((S, N, 2))


# -- pairings -------------------------------------------------------------------------

def test_pair_examples():
    assert pair(VortexState([0.0, 0.0], [[0.1, 0.2], [0.3, 0.4]]), (1, 0)) == 0
    assert pair(VortexState([1.0], [[0, 0]]), (1, 0)) == pytest.approx(math.sqrt(2))


def test_pair_second_moment():
    xi, X = initial_batch(100_000, 8, 0)
    w2 = pair_array(xi, X, [(1, 0)])[:, 0] ** 2
    assert abs(w2.mean() - 1) < 3 * w2.std() / math.sqrt(len(w2))


@given(seeds)
def test_spectral_coeffs_consistent_and_linear(seed):
    s = state(seed, 5)
    f = spectral_coeffs(s, 2)
    for k, v in f.items():
        assert v == pair(s, k)
    doubled = spectral_coeffs(VortexState(2 * s.intensities, s.positions), 2)
    np.testing.assert_allclose(doubled.coeffs, 2 * f.coeffs, rtol=1e-15)


def test_spectral_coeffs_size():
    assert len(spectral_coeffs(state(0, 3), 1).coeffs) == 4


def test_sobolev_examples():
    assert sobolev_norm(SpectralField.zeros(2)) == 0
    f = SpectralField.from_mapping(1, {(1, 0): 1, (-1, 0): 0, (0, 1): 0, (0, -1): 0})
    assert sobolev_norm(f, 1) == pytest.approx(0.5 ** 0.5)
    with pytest.raises(ValueError):
        sobolev_norm(f, 0)


def test_sobolev_mean_uniform_in_vortex_count():
    modes = lambda_array(16)
    n2 = (modes ** 2).sum(1)
    weights = (1.0 + n2) ** -1.5
    means = []
    for N in (16, 64, 256):
        xi, X = initial_batch(400, N, N)
        vals = []
        for a in range(0, 400, 50):
            c = pair_array(xi[a:a + 50], X[a:a + 50], modes)
            vals.append(np.sqrt((weights * c ** 2).sum(1)))
        means.append(np.concatenate(vals).mean())
    assert max(means) <= 1.2 * min(means)


def test_fourth_moment_near_gaussian_value():
    # E <w, e_l>^4 = 3 + 1.5 / N at t = 0
    for N in (16, 64, 256):
        xi, X = initial_batch(20_000, N, 7 * N)
        w = np.concatenate([pair_array(xi[a:a + 2000], X[a:a + 2000], [(1, 0)])[:, 0]
                            for a in range(0, 20_000, 2000)])
        assert abs((w ** 4).mean() - 3) < 0.25 * 3
    # and after some evolution
    vals = np.array([pair_array(tr.intensities, tr.positions[-1], [(1, 0)])[0]
                     for tr in (simulate_run(16, NoiseConfig(8, 5, 1e-3, run=r), 50, [50])
                                for r in range(1000))])
    assert abs((vals ** 4).mean() - 3) < 0.25 * 3


# -- quadratic form -----------------------------------------------------------------------

def test_quadratic_form_single_vortex_is_zero():
    assert quadratic_form(state(0, 1), (1, 0)) == 0.0


@given(seeds, st.integers(2, 12))
def test_quadratic_form_matches_double_sum(seed, n):
    s = state(seed, n)
    for l in [(1, 0), (-1, 2), (0, -3)]:
        assert quadratic_form(s, l, DIRECT) == pytest.approx(quadratic_form_direct(s, l, DIRECT),
                                                             rel=1e-9, abs=1e-12)


def test_quadratic_forms_batch(rng):
    s = state(4, 9)
    modes = lambda_array(2)
    batch = quadratic_forms(s, modes, DIRECT)
    for k, v in zip(modes, batch):
        assert v == pytest.approx(quadratic_form(s, k, DIRECT), abs=1e-13)


def test_quadratic_form_bound():
    l = (1, 0)
    g = np.random.default_rng(2)
    x, y = g.random((10_000, 2)), g.random((10_000, 2))
    hess = np.linalg.norm(e_k_hess(l, np.array([[0.0, 0.0]])), ord=2, axis=(-2, -1)).max()
    C = 1.25 * np.abs(h_phi_eval(DIRECT, l, x, y)).max() / hess
    for _ in range(1000):
        s = sample_initial(16, g)
        a = np.abs(s.intensities)
        off = (a.sum() ** 2 - (a ** 2).sum()) / 16
        assert abs(quadratic_form(s, l)) <= C * hess * off


def test_quadratic_form_second_moment_matches_oracle():
    l, N, S = (1, 0), 16, 100_000
    g = np.random.default_rng(3)
    q = np.array([quadratic_form(sample_initial(N, g), l) for _ in range(S)])
    exact = quadratic_second_moment(0.0, 0.0, h_phi_square_integral(l), N)
    q2 = q ** 2
    assert abs(q2.mean() - exact) < 3 * q2.std() / math.sqrt(S)


# -- R statistic ----------------------------------------------------------------------------

def r_reference(s, l, m, n, variant="direct"):
    X, xi, N = s.positions, s.intensities, s.n
    el, em = (l, m) if variant == "direct" else ((-l[0], -l[1]), (-m[0], -m[1]))
    tot = 0.0
    for k in lambda_array(n):
        ek = e_k_eval(k, X)
        a = xi @ (ek * e_k_eval(el, X)) / math.sqrt(N)
        b = xi @ (ek * e_k_eval(em, X)) / math.sqrt(N)
        tot += c_matrix(np.array([k]), np.array([l]))[0, 0] * \
            c_matrix(np.array([k]), np.array([m]))[0, 0] * (a * b - float(l == m))
    return tot * (1.0 if variant == "direct" else 8 * math.pi ** 2)


@given(seeds, st.sampled_from([((1, 0), (0, 1)), ((1, 0), (1, 0)), ((2, -1), (1, 1))]),
       st.integers(1, 5), st.sampled_from(["direct", "ito"]))
def test_r_statistic_matches_reference(seed, lm, n, variant):
    s = state(seed, 6)
    l, m = lm
    assert r_statistic(s, l, m, n, variant) == pytest.approx(r_reference(s, l, m, n, variant),
                                                             rel=1e-10, abs=1e-10)


def test_r_statistic_only_active_modes_contribute():
    l = (1, 0)
    ks = lambda_array(1)
    C = c_matrix(ks, np.array([l]))[:, 0]
    assert {tuple(k) for k, c in zip(ks, C) if c != 0} == {(0, 1), (0, -1)}
    assert np.all(np.abs(C[C != 0]) == 1)
    s = state(9, 7)
    ref = sum((pair_array(s.intensities, s.positions, [k])[0] * 0 +
               (s.intensities @ (e_k_eval(k, s.positions) * e_k_eval(l, s.positions)))
               ** 2 / 7 - 1) for k in [(0, 1), (0, -1)])
    assert r_statistic(s, l, l, 1) == pytest.approx(ref, rel=1e-12)


def test_r_statistic_finite_for_large_n():
    assert math.isfinite(r_statistic(state(1, 2000), (1, 0), (0, 1), 8))


def test_r_statistic_is_centered():
    S, N, n = 20_000, 8, 4
    xi, X = initial_batch(S, N, 11)
    for l, m in [((1, 0), (0, 1)), ((1, 0), (1, 0))]:
        r = r_statistic_batch(xi, X, l, m, n)
        assert abs(r.mean() - exact_r_mean(l, m, n)) < 3 * r.std() / math.sqrt(S)


def test_r_statistic_unknown_variant():
    with pytest.raises(ValueError):
        r_statistic(state(0, 3), (1, 0), (1, 0), 2, "stratonovich")


# -- generator ------------------------------------------------------------------------------

def test_cylindrical_derivatives_check():
    for F in [CylindricalFunction.linear((1, 0)), CylindricalFunction.square((1, 0)),
              CylindricalFunction.product((1, 0), (0, 1))]:
        assert F.check_derivatives(np.linspace(-1, 1, len(F.index)) + 0.3)
    bad = CylindricalFunction(((1, 0),), lambda v: v[0] ** 3, lambda v: 3 * v[:1] ** 2,
                              lambda v: np.zeros((1, 1)))
    assert not bad.check_derivatives(np.array([0.7]))


def test_cylindrical_index_must_fit_field():
    with pytest.raises(ValueError):
        CylindricalFunction.linear((3, 0)).coords(SpectralField.zeros(2))
    with pytest.raises(ValueError):
        CylindricalFunction(((1, 0), (1, 0)), sum, sum, sum)


@given(seeds)
def test_generator_on_linear_and_square(seed):
    s = state(seed, 10)
    l = (1, 1)
    field = spectral_coeffs(s, 2)
    w = field[l]
    Q = quadratic_form(s, l)
    a = 4 * math.pi ** 2 * 2
    assert generator_apply(CylindricalFunction.linear(l), field, s) == pytest.approx(
        -a * w + Q, rel=1e-12, abs=1e-12)
    assert generator_apply(CylindricalFunction.square(l), field, s) == pytest.approx(
        2 * a * (1 - w ** 2) + 2 * w * Q, rel=1e-12, abs=1e-12)


def test_generator_galerkin_nonlinearity(rng):
    from stochvortex.galerkin import nonlinear_term
    f = SpectralField(3, rng.standard_normal(len(lambda_array(3))))
    B = nonlinear_term(f)
    F = CylindricalFunction.product((1, 0), (2, 1))
    v = F.coords(f)
    a, b = 4 * math.pi ** 2 * 1, 4 * math.pi ** 2 * 5
    expect = -(a + b) * v[0] * v[1] + B[(1, 0)] * v[1] + v[0] * B[(2, 1)]
    assert generator_apply(F, f) == pytest.approx(expect, rel=1e-12)
    assert generator_apply(F, f, nonlinear=[0.0, 0.0]) == pytest.approx(-(a + b) * v[0] * v[1])


# -- output -----------------------------------------------------------------------------------

def test_timeseries_round_trip(tmp_path):
    rows = [(0.0, mode_label((1, 0)), 0.1), (0.25, "sobolev", 1 / 3)]
    write_timeseries_csv(tmp_path / "s.csv", rows)
    assert read_timeseries_csv(tmp_path / "s.csv") == rows
    assert mode_label((-2, 3)) == "w[-2,3]"
