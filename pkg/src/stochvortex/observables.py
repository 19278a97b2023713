"""Functionals of the empirical vorticity ``omega = N^-1/2 sum_i xi_i delta_{X_i}``.

Pairings with basis functions, truncated negative Sobolev norms, the
symmetrised nonlinear quadratic form, the ``R_{l,m}`` fluctuation statistic
and the limiting generator applied to cylindrical functions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .basis import (TWO_PI, SpectralField, as_wave,
                    basis_matrix, c_matrix, is_positive, lambda_array,
                    lambda_index)
from .biot_savart import KernelConfig, h_phi_eval
from .particles import VortexState, interaction_drift


# -- pairings ---------------------------------------------------------------

def pair(state: VortexState, l) -> float:
    """``<omega, e_l> = N^-1/2 sum_i xi_i e_l(X_i)``."""
    return float(pair_array(state.intensities, state.positions, [tuple(as_wave(l))])[0])


def pair_array(intensities, positions, modes) -> np.ndarray:
    """Batched pairings: ``(..., N)`` and ``(..., N, 2)`` -> ``(..., L)``."""
    xi = np.asarray(intensities, dtype=float)
    E = basis_matrix(np.asarray(modes), positions)
    # reduce over a contiguous vortex axis so the summation order never depends on L
    P = np.ascontiguousarray(np.swapaxes(xi[..., None] * E, -1, -2))
    return P.sum(axis=-1) / np.sqrt(xi.shape[-1])


def spectral_coeffs(state: VortexState, M: int) -> SpectralField:
    modes = lambda_array(M)
    return SpectralField(M, pair_array(state.intensities, state.positions, modes))


def sobolev_norm(field: SpectralField, s: float = 1.5) -> float:
    """Truncated ``H^{-s}`` norm ``(sum (1+|l|^2)^-s w_l^2)^1/2``."""
    if s <= 0:
        raise ValueError("s must be positive")
    n2 = (field.modes ** 2).sum(axis=1)
    return float(np.sqrt(np.sum((1.0 + n2) ** (-s) * field.coeffs ** 2)))


# -- nonlinear quadratic form ----------------------------------------------

def quadratic_forms(state: VortexState, modes, cfg: KernelConfig | None = None,
                    drift: np.ndarray | None = None) -> np.ndarray:
    """``<omega x omega, H_{e_l}>`` for every ``l`` in ``modes``.

    The symmetric double sum collapses to ``N^-1/2 sum_r xi_r b_r . grad e_l(X_r)``
    where ``b_r`` is the interaction drift, which costs one O(N^2) drift
    evaluation for any number of modes.
    """
    modes = np.asarray(modes, dtype=np.int64).reshape(-1, 2)
    if state.n < 2:
        return np.zeros(len(modes))
    b = interaction_drift(state, cfg) if drift is None else drift
    # grad e_l = 2 pi l e_{-l}
    Em = basis_matrix(-modes, state.positions)               # (N, L)
    proj = b @ modes.T.astype(float)                         # (N, L)
    return TWO_PI * (state.intensities @ (proj * Em)) / np.sqrt(state.n)


def quadratic_form(state: VortexState, l, cfg: KernelConfig | None = None) -> float:
    return float(quadratic_forms(state, [tuple(as_wave(l))], cfg)[0])


def quadratic_form_direct(state: VortexState, l, cfg: KernelConfig | None = None) -> float:
    """Reference O(N^2) evaluation of ``(1/N) sum_{r,s} xi_r xi_s H(X_r, X_s)``."""
    cfg = cfg or KernelConfig()
    X, xi = state.positions, state.intensities
    r, s = np.meshgrid(np.arange(state.n), np.arange(state.n), indexing="ij")
    off = r != s
    H = h_phi_eval(cfg, l, X[r[off]], X[s[off]])
    return float(np.sum(xi[r[off]] * xi[s[off]] * H) / state.n)


# -- R statistic ------------------------------------------------------------

@njit(cache=True)
def _trig_tables(x, nmax, c, s):
    # angle addition from a single cos/sin pair
    c0 = np.cos(2.0 * np.pi * x)
    s0 = np.sin(2.0 * np.pi * x)
    c[0] = 1.0
    s[0] = 0.0
    for a in range(1, nmax + 1):
        c[a] = c[a - 1] * c0 - s[a - 1] * s0
        s[a] = s[a - 1] * c0 + c[a - 1] * s0


@njit(cache=True)
def _basis_row(x1, x2, k1abs, k1sgn, k2abs, k2sgn, cosine, nmax, c1, s1, c2, s2, out):
    """``e_k(x)`` for all ``k`` via angle-addition tables."""
    _trig_tables(x1, nmax, c1, s1)
    _trig_tables(x2, nmax, c2, s2)
    sq2 = np.sqrt(2.0)
    for i in range(k1abs.shape[0]):
        ca = c1[k1abs[i]]
        sa = k1sgn[i] * s1[k1abs[i]]
        cb = c2[k2abs[i]]
        sb = k2sgn[i] * s2[k2abs[i]]
        if cosine[i]:
            out[i] = sq2 * (ca * cb - sa * sb)
        else:
            out[i] = sq2 * (sa * cb + ca * sb)


def _row_args(modes):
    modes = np.asarray(modes, dtype=np.int64)
    return (np.abs(modes[:, 0]), np.sign(modes[:, 0]).astype(float),
            np.abs(modes[:, 1]), np.sign(modes[:, 1]).astype(float),
            is_positive(modes))


@njit(cache=True)
def _r_batch(xi, X, rows, lm_rows, nmax, weights, delta, out):
    S, N = xi.shape
    k1a, k1s, k2a, k2s, cos_ = rows
    q1a, q1s, q2a, q2s, qcos = lm_rows
    L = k1a.shape[0]
    nt = max(nmax, q1a.max(), q2a.max())
    c1 = np.empty(nt + 1)
    s1 = np.empty(nt + 1)
    c2 = np.empty(nt + 1)
    s2 = np.empty(nt + 1)
    row = np.empty(L)
    lmrow = np.empty(2)
    A = np.empty(L)
    B = np.empty(L)
    inv = 1.0 / N
    for smp in range(S):
        A[:] = 0.0
        B[:] = 0.0
        for i in range(N):
            x1 = X[smp, i, 0]
            x2 = X[smp, i, 1]
            _basis_row(x1, x2, k1a, k1s, k2a, k2s, cos_, nt, c1, s1, c2, s2, row)
            _basis_row(x1, x2, q1a, q1s, q2a, q2s, qcos, nt, c1, s1, c2, s2, lmrow)
            wl = xi[smp, i] * lmrow[0]
            wm = xi[smp, i] * lmrow[1]
            for k in range(L):
                A[k] += wl * row[k]
                B[k] += wm * row[k]
        acc = 0.0
        for k in range(L):
            acc += weights[k] * (A[k] * B[k] * inv - delta)
        out[smp] = acc


def r_statistic_batch(intensities, positions, l, m, n: int,
                      variant: str = "direct") -> np.ndarray:
    """Vectorised :func:`r_statistic` over samples ``(S, N)``, ``(S, N, 2)``."""
    l, m = as_wave(l), as_wave(m)
    xi = np.ascontiguousarray(np.atleast_2d(intensities), dtype=float)
    X = np.ascontiguousarray(positions, dtype=float)
    if X.ndim == 2:
        X = X[None]
    ks = lambda_array(n)
    weights = c_matrix(ks, np.array([tuple(l), tuple(m)]))
    weights = weights[:, 0] * weights[:, 1]
    if variant == "direct":
        el, em, pref = l, m, 1.0
    elif variant == "ito":
        el, em, pref = -l, -m, 8.0 * np.pi ** 2
    else:
        raise ValueError(f"unknown variant {variant!r}")
    delta = 1.0 if l == m else 0.0
    keep = weights != 0
    out = np.empty(xi.shape[0])
    _r_batch(xi, X, _row_args(ks[keep]), _row_args([tuple(el), tuple(em)]), n,
             weights[keep], delta, out)
    return pref * out


def r_statistic(state: VortexState, l, m, n: int, variant: str = "direct") -> float:
    """``R_{l,m} = sum_k C_{k,l} C_{k,m} (<w, e_k e_l><w, e_k e_m> - delta_{lm})``.

    ``variant="ito"`` returns the quadratic-covariation form
    ``8 pi^2 sum_k C_{k,l} C_{k,m} (<w, e_k e_{-l}><w, e_k e_{-m}> - delta_{lm})``,
    which satisfies ``d<w,e_l> d<w,e_m> = (2 eps_n^2 R + 8 pi^2 delta |l|^2) dt``.
    """
    return float(r_statistic_batch(state.intensities[None], state.positions[None],
                                   l, m, n, variant)[0])


# -- cylindrical functions and the generator --------------------------------

@dataclass
class CylindricalFunction:
    """``F(w) = f(<w, e_l>, l in index)`` with explicit first and second derivatives."""

    index: tuple
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        self.index = tuple(as_wave(k) for k in self.index)
        if len(set(self.index)) != len(self.index):
            raise ValueError("repeated wave vector in index set")

    def coords(self, field: SpectralField) -> np.ndarray:
        idx = lambda_index(field.cutoff)
        try:
            return field.coeffs[[idx[tuple(k)] for k in self.index]]
        except KeyError as exc:
            raise ValueError(
                f"index set not contained in Lambda_{field.cutoff}: {exc}") from None

    def __call__(self, field: SpectralField) -> float:
        return float(self.f(self.coords(field)))

    def check_derivatives(self, v, h: float = 1e-4, tol: float = 1e-5) -> bool:
        """Central-difference check of ``grad`` and ``hess`` at ``v``."""
        v = np.asarray(v, dtype=float)
        d = len(v)
        g_fd = np.empty(d)
        H_fd = np.empty((d, d))
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            g_fd[i] = (self.f(v + e) - self.f(v - e)) / (2 * h)
            H_fd[i] = (np.asarray(self.grad(v + e)) - np.asarray(self.grad(v - e))) / (2 * h)
        ok_g = np.allclose(g_fd, self.grad(v), rtol=tol, atol=tol)
        ok_h = np.allclose(H_fd, self.hess(v), rtol=tol, atol=tol)
        return bool(ok_g and ok_h)

    @classmethod
    def linear(cls, l) -> "CylindricalFunction":
        return cls((l,), lambda v: v[0], lambda v: np.ones(1),
                   lambda v: np.zeros((1, 1)))

    @classmethod
    def square(cls, l) -> "CylindricalFunction":
        return cls((l,), lambda v: v[0] ** 2, lambda v: np.array([2 * v[0]]),
                   lambda v: np.full((1, 1), 2.0))

    @classmethod
    def product(cls, l, m) -> "CylindricalFunction":
        return cls((l, m), lambda v: v[0] * v[1], lambda v: np.array([v[1], v[0]]),
                   lambda v: np.array([[0.0, 1.0], [1.0, 0.0]]))


def generator_apply(F: CylindricalFunction, field: SpectralField,
                    state: VortexState | None = None,
                    cfg: KernelConfig | None = None,
                    nonlinear: np.ndarray | None = None) -> float:
    """Limiting generator ``L F(w)``.

    ``4 pi^2 sum_l |l|^2 (f_ll - f_l w_l) + sum_l f_l Q_l`` where ``Q_l`` is
    ``<w x w, H_{e_l}>`` on the atoms of ``state`` when given, otherwise the
    Galerkin nonlinearity of ``field`` (or an explicit ``nonlinear`` vector
    aligned with ``F.index``).
    """
    v = F.coords(field)
    modes = np.array([tuple(k) for k in F.index], dtype=np.int64)
    n2 = (modes ** 2).sum(axis=1)
    g = np.asarray(F.grad(v), dtype=float)
    H = np.asarray(F.hess(v), dtype=float)
    lin = 4 * np.pi ** 2 * np.sum(n2 * (np.diag(H) - g * v))
    if nonlinear is not None:
        Q = np.asarray(nonlinear, dtype=float)
    elif state is not None:
        Q = quadratic_forms(state, modes, cfg)
    else:
        from .galerkin import nonlinear_term
        B = nonlinear_term(field)
        Q = np.array([B[k] for k in F.index])
    return float(lin + g @ Q)


# -- time series output -----------------------------------------------------

def write_timeseries_csv(path, rows: Sequence[tuple[float, str, float]]) -> None:
    """Write ``t,name,value`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "name", "value"])
        for t, name, value in rows:
            w.writerow([repr(float(t)), name, repr(float(value))])


def read_timeseries_csv(path) -> list[tuple[float, str, float]]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != ["t", "name", "value"]:
            raise ValueError(f"unexpected header {header}")
        return [(float(t), name, float(v)) for t, name, v in rd]


def mode_label(l) -> str:
    l = as_wave(l)
    return f"w[{l.k1},{l.k2}]"


__all__ = [
    "pair", "pair_array", "spectral_coeffs", "sobolev_norm", "quadratic_form",
    "quadratic_forms", "quadratic_form_direct", "r_statistic",
    "r_statistic_batch", "CylindricalFunction", "generator_apply",
    "write_timeseries_csv", "read_timeseries_csv", "mode_label",
]
