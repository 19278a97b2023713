"""The acceptance suite: one function per criterion, each returning a verdict.

Every check runs at the sizes and tolerances fixed by the criterion; nothing
here is tuned to make a check pass.  Seeds are fixed so a verdict is
reproducible.  ``scale`` shrinks Monte Carlo sizes for smoke runs only and
is never used by the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import galerkin
from .basis import (SQRT2, SpectralField, c_matrix, e_k_eval, e_k_grad,
                    eps_n, lambda_array, sigma_k_eval, trig_product_integral)
from .biot_savart import (KernelConfig, kernel_eval, velocity_from_spectral,
                          velocity_gradient_from_spectral)
from .ensemble import ExperimentConfig, compare_autocovariance, run_ensemble
from .observables import r_statistic_batch
from .particles import NoiseConfig, simulate_run
from .wick import SymmetricKernelSpec, exact_r_second_moment, exact_second_moment

SEED = 20261018


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return (f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] "
                f"{self.title} ({self.seconds:.1f}s)")


def _n(count: int, scale: float) -> int:
    return max(2, int(round(count * scale)))


def _var_se(x: np.ndarray) -> float:
    """Standard error of the sample variance from the fourth central moment."""
    c = x - x.mean()
    m2, m4 = np.mean(c ** 2), np.mean(c ** 4)
    return math.sqrt(max(m4 - m2 ** 2, 0.0) / len(x))


# -- 1 ------------------------------------------------------------------------------

def exact_identities(scale: float = 1.0) -> CriterionResult:
    rng = np.random.default_rng(SEED + 1)
    x = rng.random((100, 2))
    details, ok = [], True
    worst = 0.0
    for n in range(1, 17):
        S = sum(np.einsum("pi,pj->pij", sigma_k_eval(tuple(k), x), sigma_k_eval(tuple(k), x))
                for k in lambda_array(n))
        err = np.abs(S - 0.25 * eps_n(n) ** -2 * np.eye(2)).max()
        worst = max(worst, err)
    ok &= worst <= 1e-10
    details.append(f"sum sigma_k (x) sigma_k = eps^-2 I/4: max err {worst:.2e} (n<=16)")
    ls = lambda_array(5)
    worst = 0.0
    for n in range(1, 33):
        C = c_matrix(lambda_array(n), ls)
        err = np.abs((C ** 2).sum(0) - 0.5 * eps_n(n) ** -2 * (ls ** 2).sum(1))
        worst = max(worst, err.max())
    ok &= worst <= 1e-10
    details.append(f"sum C_kl^2 = eps^-2 |l|^2 / 2: max err {worst:.2e} (n<=32, |l|<=5)")
    worst = 0.0
    for k in lambda_array(5):
        for l in ls:
            lhs = (sigma_k_eval(tuple(k), x) * e_k_grad(tuple(l), x)).sum(-1)
            rhs = (SQRT2 * np.pi * c_matrix(k[None], l[None])[0, 0]
                   * e_k_eval(tuple(k), x) * e_k_eval(tuple(-l), x))
            worst = max(worst, np.abs(lhs - rhs).max())
    ok &= worst <= 1e-10
    details.append(f"sigma_k . grad e_l = sqrt2 pi C_kl e_k e_-l: max err {worst:.2e}")
    return CriterionResult(1, "exact identities", bool(ok), details)


# -- 2 ------------------------------------------------------------------------------

def kernel_correctness(scale: float = 1.0) -> CriterionResult:
    rng = np.random.default_rng(SEED + 2)
    details, ok = [], True
    g = np.arange(64) / 64
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    cfg = KernelConfig(fourier_cutoff=6)
    worst = 0.0
    for _ in range(5):
        f = SpectralField(6, rng.standard_normal(len(lambda_array(6))))
        J = velocity_gradient_from_spectral(cfg, f, X)
        curl = J[..., 0, 1] - J[..., 1, 0]
        div = J[..., 0, 0] + J[..., 1, 1]
        worst = max(worst, np.abs(curl - f.evaluate(X)).max(), np.abs(div).max())
    ok &= worst <= 1e-8
    details.append(f"curl recovery and divergence on 64x64 grid, |l|<=6: max err {worst:.2e}")
    pts = rng.random((100, 2)) - 0.5
    default = KernelConfig()
    anti = np.abs(kernel_eval(default, pts) + kernel_eval(default, -pts)).max()
    ok &= anti == 0.0
    details.append(f"K(-x) + K(x): max {anti:.1e} (exact zero required)")
    r = np.linspace(0.005, 0.02, 16)
    th = rng.random(16) * 2 * np.pi
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    ratio = np.linalg.norm(kernel_eval(default, pts), axis=1) * r * 2 * np.pi
    ok &= bool(np.all(np.abs(ratio - 1) <= 0.1))
    details.append(f"2 pi |K(x)| |x| on [0.005, 0.02]: range [{ratio.min():.4f}, {ratio.max():.4f}]")
    u0 = velocity_from_spectral(cfg, SpectralField.zeros(6), X[:2, :2])
    ok &= not np.any(u0)
    return CriterionResult(2, "kernel correctness", bool(ok), details)


# -- 3 ------------------------------------------------------------------------------

def product_integrals(scale: float = 1.0) -> CriterionResult:
    rng = np.random.default_rng(SEED + 3)
    g = np.arange(256) / 256
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1)
    worst = 0.0
    for _ in range(50):
        m = rng.integers(1, 5)
        ks = rng.integers(-6, 7, size=(m, 2))
        ks[(ks == 0).all(1)] = (1, 0)
        quad = np.prod([e_k_eval(tuple(k), X) for k in ks], axis=0).mean()
        worst = max(worst, abs(quad - trig_product_integral([tuple(k) for k in ks])))
    return CriterionResult(3, "product integrals vs quadrature", worst <= 1e-8,
                           [f"50 random products of <=4 factors: max err {worst:.2e}"])


# -- 4 ------------------------------------------------------------------------------

def single_vortex_diffusivity(scale: float = 1.0) -> CriterionResult:
    runs = _n(20000, scale)
    dt, steps, n = 1e-4, 100, 8
    d2 = np.empty(runs)
    for r in range(runs):
        tr = simulate_run(1, NoiseConfig(n, SEED + 4, dt, run=r), steps, [steps], drift=False)
        d2[r] = (tr.displacement[-1, 0] ** 2).sum()
    t = steps * dt
    mean, se = d2.mean(), d2.std(ddof=1) / math.sqrt(runs)
    ok = abs(mean - 4 * t) <= 3 * se
    return CriterionResult(4, "single-vortex diffusivity", bool(ok),
                           [f"E|X_t-X_0|^2 = {mean:.5f} +- {se:.5f}, target 4t = {4 * t:.5f}, "
                            f"{runs} runs"], dict(msd=mean, se=se))


# -- 5 ------------------------------------------------------------------------------

STATIONARY_MODES = ((1, 0), (0, 1), (1, 1), (2, 0))


def stationarity_config(ensemble_size: int = 2000) -> ExperimentConfig:
    return ExperimentConfig(
        experiment="stationarity", system="particle", vortex_count=64, noise_cutoff=8,
        dt=1e-3, t_final=0.5, sample_times=(0.0, 0.25, 0.5), ensemble_size=ensemble_size,
        master_seed=SEED + 5, observables=tuple(f"w[{a},{b}]" for a, b in STATIONARY_MODES))


def stationarity(scale: float = 1.0) -> CriterionResult:
    cfg = stationarity_config(_n(2000, scale))
    s = run_ensemble(cfg)
    ok, details = True, []
    for o, name in enumerate(cfg.observables):
        for i, t in enumerate(cfg.sample_times):
            x = s.samples[:, o, i]
            m, mse = x.mean(), x.std(ddof=1) / math.sqrt(len(x))
            v, vse = x.var(ddof=1), _var_se(x)
            good = abs(m) <= 3 * mse and abs(v - 1) <= 3 * vse
            ok &= good
            details.append(f"{name} t={t:g}: mean {m:+.4f} (se {mse:.4f}) "
                           f"var {v:.4f} (se {vse:.4f}) {'ok' if good else 'OUT'}")
    details.append(f"runs used {s.count}, degenerate {s.degenerate_count}")
    return CriterionResult(5, "stationarity of the particle system", bool(ok), details)


# -- 6 ------------------------------------------------------------------------------

def quadratic_moment_formula(scale: float = 1.0) -> CriterionResult:
    ok, details = True, []
    one = SymmetricKernelSpec.constant()
    worst = max(abs(exact_second_moment(one, N) - 3.0) for N in range(1, 257))
    ok &= worst <= 1e-12
    details.append(f"f = 1: max |E Q^2 - 3| over N<=256 = {worst:.1e}")
    a = (1, 0)
    f = SymmetricKernelSpec.outer(a)
    rng = np.random.default_rng(SEED + 6)
    samples = _n(1_000_000, scale)
    for N in (4, 16):
        acc, acc2, done = 0.0, 0.0, 0
        while done < samples:
            b = min(100_000, samples - done)
            xi = rng.standard_normal((b, N))
            X = rng.random((b, N, 2))
            Q = (np.einsum("sn,sn->s", xi, e_k_eval(a, X)) / math.sqrt(N)) ** 2
            acc += np.sum(Q ** 2)
            acc2 += np.sum(Q ** 4)
            done += b
        mean = acc / samples
        se = math.sqrt((acc2 / samples - mean ** 2) / samples)
        exact = exact_second_moment(f, N)
        good = abs(mean - exact) <= 3 * se
        ok &= good
        details.append(f"f = e_a(x)e_a(y), N={N}: exact {exact:.5f}, MC {mean:.5f} +- {se:.5f}")
    return CriterionResult(6, "exact quadratic-functional second moment", bool(ok), details)


# -- 7 ------------------------------------------------------------------------------

R_PAIRS = (((1, 0), (0, 1)), ((1, 0), (1, 0)))
R_SIZES = (4, 8, 16)


def fit_log_curve(values: dict) -> tuple[float, float]:
    """``C0, C1`` with ``v(N) = C0 + C1 (log N)^2 / N`` through the two smallest N."""
    (n1, v1), (n2, v2) = sorted(values.items())[:2]
    x1, x2 = math.log(n1) ** 2 / n1, math.log(n2) ** 2 / n2
    c1 = (v2 - v1) / (x2 - x1)
    return v1 - c1 * x1, c1


def r_second_moment(scale: float = 1.0) -> CriterionResult:
    ok, details = True, []
    samples = _n(1_000_000, scale)
    rng = np.random.default_rng(SEED + 7)
    metrics = {}
    for l, m in R_PAIRS:
        exact = {}
        for N in R_SIZES:
            ex = exact_r_second_moment(l, m, N, N).value
            exact[N] = ex
            s1 = s2 = 0.0
            done = 0
            while done < samples:
                b = min(50_000, samples - done)
                R = r_statistic_batch(rng.standard_normal((b, N)), rng.random((b, N, 2)),
                                      l, m, N)
                s1 += np.sum(R ** 2)
                s2 += np.sum(R ** 4)
                done += b
            mc = s1 / samples
            se = math.sqrt(max(s2 / samples - mc ** 2, 0.0) / samples)
            good = abs(mc - ex) <= 3 * se
            ok &= good
            details.append(f"l={l} m={m} n=N={N}: exact {ex:.5f}, MC {mc:.5f} +- {se:.5f} "
                           f"{'ok' if good else 'OUT'}")
        c0, c1 = fit_log_curve(exact)
        resid = {N: c0 + c1 * math.log(N) ** 2 / N - v for N, v in exact.items()}
        bounded = all(r >= -1e-12 for r in resid.values())
        ok &= bounded
        details.append(f"  fit C0={c0:.4f} C1={c1:.4f}; curve - exact at N={R_SIZES}: "
                       + ", ".join(f"{resid[N]:+.4f}" for N in R_SIZES)
                       + (" (all >= 0)" if bounded else " (negative residual)"))
        metrics[str((l, m))] = dict(exact=exact, c0=c0, c1=c1, residual=resid)
    return CriterionResult(7, "R statistic second moment", bool(ok), details, metrics)


# -- 8 ------------------------------------------------------------------------------

INCREMENT_LAGS = (0.01, 0.02, 0.04, 0.08)


def increment_scaling(scale: float = 1.0) -> CriterionResult:
    cfg = ExperimentConfig(
        experiment="increments", system="particle", vortex_count=64, noise_cutoff=8,
        dt=1e-3, t_final=0.08, sample_times=(0.0,) + INCREMENT_LAGS,
        ensemble_size=_n(5000, scale), master_seed=SEED + 8, observables=("w[1,0]",))
    s = run_ensemble(cfg)
    x = s.samples[:, 0, :]
    ratios, details = [], []
    for i, h in enumerate(INCREMENT_LAGS, start=1):
        inc = x[:, i] - x[:, 0]
        q = np.mean(inc ** 4) / h ** 2
        se = np.std(inc ** 4, ddof=1) / math.sqrt(len(inc)) / h ** 2
        ratios.append(q)
        details.append(f"t-s={h:g}: E inc^4/(t-s)^2 = {q:.1f} +- {se:.1f}")
    spread = max(ratios) / min(ratios)
    details.append(f"max/min = {spread:.2f} (must be < 3); runs {s.count}")
    return CriterionResult(8, "fourth-moment increment scaling", spread < 3, details,
                           dict(ratios=ratios, spread=spread))


# -- 9 ------------------------------------------------------------------------------

def galerkin_oracle(scale: float = 1.0) -> CriterionResult:
    ok, details = True, []
    rng = np.random.default_rng(SEED + 9)
    worst = 0.0
    for M in (5, 6):
        for _ in range(100):
            w = rng.standard_normal(len(lambda_array(M))) * rng.uniform(0.1, 10)
            B = galerkin.nonlinear_coeffs(w, M)
            worst = max(worst, abs(w @ B) / max(1.0, np.abs(w).max() ** 2))
    ok &= worst <= 1e-10
    details.append(f"enstrophy orthogonality: max |sum w_l B_l| {worst:.1e}")
    cfg = galerkin.GalerkinConfig(5, 2e-4, seed=SEED + 9)
    runs = _n(500, scale)
    final = np.array([galerkin.simulate(cfg, 5000, [5000], run=r).coeffs[-1]
                      for r in range(runs)])
    var = final.var(axis=0, ddof=1)
    agg = var.mean()
    good = abs(agg - 1) <= 0.05
    ok &= good
    details.append(f"full dynamics, M=5, t=1, {runs} runs: mode-averaged variance {agg:.4f} "
                   f"(per-mode range [{var.min():.3f}, {var.max():.3f}])")
    ou = galerkin.GalerkinConfig(5, 0.05, seed=SEED + 90, nonlinear=False)
    start = SpectralField(5, np.full(ou.size, 3.0))
    runs = _n(10000, scale)
    final = np.array([galerkin.simulate(ou, 20, [20], run=r, init=start).coeffs[-1]
                      for r in range(runs)])
    v = final.var(axis=0, ddof=1)
    vse = np.array([_var_se(final[:, i]) for i in range(final.shape[1])])
    # one 3-SE band for the mode average, Bonferroni-adjusted band per mode
    agg_se = math.sqrt(np.mean(vse ** 2) / final.shape[1])
    good = abs(v.mean() - 1) <= 3 * agg_se and np.all(np.abs(v - 1) <= 4.0 * vse)
    ok &= good
    details.append(f"OU only from w=3, t=1, {runs} runs: mode-averaged variance "
                   f"{v.mean():.4f} +- {agg_se:.4f}, worst per-mode z "
                   f"{np.max(np.abs(v - 1) / vse):.2f}")
    return CriterionResult(9, "Galerkin oracle", bool(ok), details)


# -- 10 -----------------------------------------------------------------------------

def martingale_problem(scale: float = 1.0) -> CriterionResult:
    ok, details = True, []
    cfg = galerkin.GalerkinConfig(5, 2e-4, seed=SEED + 10)
    runs, steps = _n(2000, scale), 1000
    l = (1, 0)
    lin, sq = np.empty(runs), np.empty(runs)
    for r in range(runs):
        tr = galerkin.simulate(cfg, steps, [steps], run=r, track=[l])
        lin[r] = galerkin.martingale_increment(tr, cfg.dt, "linear")
        sq[r] = galerkin.martingale_increment(tr, cfg.dt, "square")
    for name, v in (("F = w_l", lin), ("F = w_l^2", sq)):
        m, se = v.mean(), v.std(ddof=1) / math.sqrt(runs)
        good = abs(m) <= 3 * se
        ok &= good
        details.append(f"Galerkin M=5, t=0.2, {name}: E M_t = {m:+.4f} +- {se:.4f}")
    # leading quadratic-variation slope on particle trajectories
    n, N, dt, steps = 8, 64, 1e-3, 500
    runs = _n(200, scale)
    target = 8 * np.pi ** 2 * (l[0] ** 2 + l[1] ** 2)
    slopes = np.empty(runs)
    for r in range(runs):
        tr = simulate_run(N, NoiseConfig(n, SEED + 100, dt, run=r), steps)
        a = tr.intensities @ e_k_eval(l, tr.positions).T / math.sqrt(N)
        slopes[r] = np.sum(np.diff(a) ** 2) / (steps * dt)
    m, se = slopes.mean(), slopes.std(ddof=1) / math.sqrt(runs)
    good = abs(m / target - 1) <= 0.10
    ok &= good
    details.append(f"particles N={N}, n={n}: QV slope {m:.2f} +- {se:.2f}, "
                   f"target 8 pi^2 |l|^2 = {target:.2f} ({100 * (m / target - 1):+.1f}%)")
    return CriterionResult(10, "martingale problem", bool(ok), details)


# -- 11 -----------------------------------------------------------------------------

CONVERGENCE_LAGS = (0.05, 0.1, 0.2)


def convergence_configs(scale: float = 1.0):
    common = dict(t_final=0.2, sample_times=(0.0, 0.05, 0.1, 0.15, 0.2),
                  lags=(0.0,) + CONVERGENCE_LAGS, observables=("w[1,0]",),
                  galerkin_cutoff=6)
    part = ExperimentConfig(experiment="convergence-particle", system="particle",
                            vortex_count=256, noise_cutoff=16, dt=1e-3,
                            ensemble_size=_n(1000, scale), master_seed=SEED + 11, **common)
    gal = ExperimentConfig(experiment="convergence-galerkin", system="galerkin", dt=2e-4,
                           ensemble_size=_n(1000, scale), master_seed=SEED + 111, **common)
    return part, gal


def convergence(scale: float = 1.0) -> CriterionResult:
    part, gal = convergence_configs(scale)
    sp, sg = run_ensemble(part), run_ensemble(gal)
    rep = compare_autocovariance(sp, sg, CONVERGENCE_LAGS, "w[1,0]", n_se=3.0, abs_tol=0.1)
    details = rep.lines()
    details.append(f"lag 0: particle {sp.autocovariance['w[1,0]'][0.0][0]:.4f}, "
                   f"Galerkin {sg.autocovariance['w[1,0]'][0.0][0]:.4f}; "
                   f"particle runs {sp.count} (degenerate {sp.degenerate_count}), "
                   f"Galerkin runs {sg.count}")
    return CriterionResult(11, "particle vs Galerkin autocovariance", rep.passed, details)


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: exact_identities, 2: kernel_correctness, 3: product_integrals,
    4: single_vortex_diffusivity, 5: stationarity, 6: quadratic_moment_formula,
    7: r_second_moment, 8: increment_scaling, 9: galerkin_oracle,
    10: martingale_problem, 11: convergence,
}


def run_criterion(number: int, scale: float = 1.0) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](scale)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None, scale: float = 1.0, log=print) -> list[CriterionResult]:
    out = []
    for k in numbers or sorted(CRITERIA):
        res = run_criterion(k, scale)
        if log:
            log(res.line())
            for d in res.details:
                log("    " + d)
        out.append(res)
    return out
