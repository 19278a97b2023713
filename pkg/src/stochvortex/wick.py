"""Exact Gaussian moments of the initial point-vortex ensemble.

The initial ensemble has iid ``xi_r ~ N(0, 1)`` and iid uniform ``X_r``.  For
a symmetric kernel ``f`` the quadratic functional ``Q = <omega x omega, f>``
has

    E Q^2 = (3/N) int f(x,x)^2 + ((N-1)/N) (int f(x,x))^2 + (2(N-1)/N) iint f^2.

The ``R_{l,m}`` statistic is handled by three independent routes: a generic
pairing expansion, the split into pairing classes ``S1, S2, S3`` (``l != m``)
and the split ``J1, J2`` (``l == m``).  Every integral is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .basis import (SpectralCutoff, as_wave, c_matrix, e_k_eval,
                    eps_n, lambda_array, product_integral_batch,
                    trig_product_integral)
from .biot_savart import _kernel_exact_array

R_MOMENT_MAX_CUTOFF = 16


# -- Gaussian moments ---------------------------------------------------------

def gaussian_moment(power: int) -> int:
    """``E xi^p`` for a standard normal: ``(p-1)!!`` for even ``p``, else 0."""
    if power % 2:
        return 0
    return prod(range(power - 1, 0, -2)) if power else 1


def moment_by_enumeration(indices) -> int:
    """``E prod_i xi_{indices[i]}`` from the multiplicities of each index."""
    _, counts = np.unique(np.asarray(indices), return_counts=True)
    return prod(gaussian_moment(int(c)) for c in counts)


def isserlis_fourth(r, s, rp, sp) -> int:
    """Pairing formula for ``E xi_r xi_s xi_r' xi_s'``."""
    return int((r == s) * (rp == sp) + (r == rp) * (s == sp) + (r == sp) * (s == rp))


# -- symmetric separable kernels ----------------------------------------------

def _ids(*ks):
    return [tuple(k) for k in ks if k is not None]


@dataclass
class SymmetricKernelSpec:
    """``f(x, y) = sum_a c_a (e_p(x) e_q(y) + e_q(x) e_p(y)) / 2``.

    ``p`` or ``q`` may be ``None`` for the constant function 1, so the
    empty kernel ``f = 1`` is ``[(1.0, None, None)]``.
    """

    terms: list = field(default_factory=list)

    def __post_init__(self):
        self.terms = [(float(c), None if p is None else as_wave(p),
                       None if q is None else as_wave(q)) for c, p, q in self.terms]

    @classmethod
    def constant(cls, c: float = 1.0) -> "SymmetricKernelSpec":
        return cls([(c, None, None)])

    @classmethod
    def outer(cls, a, c: float = 1.0) -> "SymmetricKernelSpec":
        """``c e_a(x) e_a(y)``."""
        return cls([(c, a, a)])

    def scaled(self, factor: float) -> "SymmetricKernelSpec":
        return SymmetricKernelSpec([(factor * c, p, q) for c, p, q in self.terms])

    def evaluate(self, x, y) -> np.ndarray:
        def e(k, z):
            z = np.asarray(z, dtype=float)
            return np.ones(z.shape[:-1]) if k is None else e_k_eval(k, z)
        return sum(c * 0.5 * (e(p, x) * e(q, y) + e(q, x) * e(p, y))
                   for c, p, q in self.terms)

    def diagonal_integral(self) -> float:
        """``int f(x, x) dx``."""
        return sum(c * trig_product_integral(_ids(p, q)) for c, p, q in self.terms)

    def diagonal_square_integral(self) -> float:
        """``int f(x, x)^2 dx``."""
        return sum(ca * cb * trig_product_integral(_ids(pa, qa, pb, qb))
                   for ca, pa, qa in self.terms for cb, pb, qb in self.terms)

    def square_integral(self) -> float:
        """``iint f(x, y)^2 dx dy``; only matching factor pairs survive."""
        tot = 0.0
        for ca, pa, qa in self.terms:
            for cb, pb, qb in self.terms:
                tot += ca * cb * 0.5 * (int(pa == pb) * int(qa == qb)
                                        + int(pa == qb) * int(qa == pb))
        return tot


def quadratic_second_moment(diag_sq: float, diag: float, double_sq: float,
                        n_vortices: int) -> float:
    """The closed form above, from the three integrals of ``f``."""
    N = n_vortices
    return 3.0 / N * diag_sq + (N - 1) / N * diag ** 2 + 2.0 * (N - 1) / N * double_sq


def exact_second_moment(f: SymmetricKernelSpec, n_vortices: int) -> float:
    if n_vortices < 1:
        raise ValueError("n_vortices must be >= 1")
    return quadratic_second_moment(f.diagonal_square_integral(), f.diagonal_integral(),
                               f.square_integral(), n_vortices)


def _label_expectation(factors_by_label) -> float:
    """``E prod_labels prod_factors e(X_label)`` for independent uniform X."""
    out = 1.0
    for ks in factors_by_label.values():
        out *= trig_product_integral(ks)
        if out == 0.0:
            break
    return out


def second_moment_by_enumeration(f: SymmetricKernelSpec, n_vortices: int) -> float:
    """``E Q^2`` by summing over every index tuple ``(r, s, r', s')``.

    Independent of the closed form: the Gaussian factor comes from
    :func:`moment_by_enumeration` and the spatial factor groups basis
    functions by vortex label.  Cost ``N^4 * terms^2``; meant for small N.
    """
    N = n_vortices
    halves = []
    for c, p, q in f.terms:
        halves.append((0.5 * c, p, q))
        halves.append((0.5 * c, q, p))
    total = 0.0
    for r, s, rp, sp in itertools.product(range(N), repeat=4):
        g = moment_by_enumeration((r, s, rp, sp))
        if g == 0:
            continue
        acc = 0.0
        for ca, pa, qa in halves:
            for cb, pb, qb in halves:
                groups: dict = {}
                for lab, k in ((r, pa), (s, qa), (rp, pb), (sp, qb)):
                    groups.setdefault(lab, [])
                    if k is not None:
                        groups[lab].append(tuple(k))
                acc += ca * cb * _label_expectation(groups)
        total += g * acc
    return total / N ** 2


# -- R statistic moments --------------------------------------------------------

@dataclass
class RMoment:
    value: float
    method: str
    terms: dict = field(default_factory=dict)


def _check_budget(n: int, max_cutoff: int):
    if n > max_cutoff:
        L = len(lambda_array(n))
        raise ValueError(
            f"cutoff n={n} exceeds budget n<={max_cutoff}: needs {L * L} pair terms "
            f"(about {L * L * 256:.2e} sign patterns); raise max_cutoff to allow it")


def _active(l, m, n):
    """Wave vectors with ``C_{k,l} C_{k,m} != 0`` and their weights."""
    ks = lambda_array(n)
    C = c_matrix(ks, np.array([tuple(l), tuple(m)]))
    a = C[:, 0] * C[:, 1]
    keep = a != 0
    return ks[keep], a[keep]


def _pair_integrals(ks, factors):
    """``int e_k e_k' prod(factors)`` for every ordered pair, shape ``(K, K)``."""
    K = len(ks)
    A = np.repeat(ks, K, axis=0)
    B = np.tile(ks, (K, 1))
    rest = np.broadcast_to(np.array(factors, dtype=np.int64), (K * K, len(factors), 2))
    stack = np.concatenate([A[:, None], B[:, None], rest], axis=1)
    return product_integral_batch(stack).reshape(K, K)


def _eight(ks, l, m):
    """``int e_k^2 e_k'^2 e_l^2 e_m^2`` for every pair."""
    K = len(ks)
    A = np.repeat(ks, K, axis=0)
    B = np.tile(ks, (K, 1))
    lm = np.broadcast_to(np.array([l, l, m, m], dtype=np.int64), (K * K, 4, 2))
    stack = np.concatenate([A[:, None], A[:, None], B[:, None], B[:, None], lm], axis=1)
    return product_integral_batch(stack).reshape(K, K)


def _single(ks, factors):
    rest = np.broadcast_to(np.array(factors, dtype=np.int64), (len(ks), len(factors), 2))
    stack = np.concatenate([ks[:, None], ks[:, None], rest], axis=1)
    return product_integral_batch(stack)


def exact_r_mean(l, m, n: int) -> float:
    """``E R_{l,m}`` for the initial ensemble (zero by the sigma identity)."""
    l, m = tuple(as_wave(l)), tuple(as_wave(m))
    ks, a = _active(l, m, n)
    delta = float(l == m)
    return float(np.sum(a * (_single(ks, [l, m]) - delta))) if len(ks) else 0.0


def _r_generic(l, m, n, N):
    ks, a = _active(l, m, n)
    if len(ks) == 0:
        return 0.0, {}
    delta = float(l == m)
    gh = _single(ks, [l, m])                       # int g_k h_k
    gg = _pair_integrals(ks, [l, l])               # int g_k g_k'
    hh = _pair_integrals(ks, [m, m])
    gh_x = _pair_integrals(ks, [l, m])             # int g_k h_k' = int h_k g_k'
    full = _eight(ks, l, m)
    e4 = ((1 - 1 / N) * (np.outer(gh, gh) + gg * hh + gh_x * gh_x.T)
          + 3.0 / N * full)
    ww = np.outer(a, a)
    val = np.sum(ww * (e4 - delta * gh[None, :] - delta * gh[:, None] + delta ** 2))
    return float(val), {}


def _r_s_terms(l, m, n, N):
    ks, a = _active(l, m, n)
    if len(ks) == 0:
        return 0.0, dict(S11=0.0, S12=0.0, S21=0.0, S22=0.0, S31=0.0, S32=0.0)
    ww = np.outer(a, a)
    full = np.sum(ww * _eight(ks, l, m)) / N
    s11 = (1 - 1 / N) * np.sum(a * _single(ks, [l, m])) ** 2
    s21 = (1 - 1 / N) * np.sum(ww * _pair_integrals(ks, [l, l]) * _pair_integrals(ks, [m, m]))
    s31 = (1 - 1 / N) * np.sum(ww * _pair_integrals(ks, [l, m]) ** 2)
    terms = dict(S11=float(s11), S12=float(full), S21=float(s21), S22=float(full),
                 S31=float(s31), S32=float(full))
    terms.update(S1=s11 + full, S2=s21 + full, S3=s31 + full)
    return float(terms["S1"] + terms["S2"] + terms["S3"]), terms


def s1_closed_form(l, m, n: int, n_vortices: int) -> float:
    """``S1`` for ``l != m`` without the pair sum.

    ``sum_k C_{k,l} C_{k,m} e_k^2`` is the constant ``c0 = sum_k C_{k,l} C_{k,m}``,
    so ``S1,1`` vanishes and ``S1,2 = c0^2 int e_l^2 e_m^2 / N``.  Costs
    ``O(|Lambda_n|)`` and has no cutoff budget.
    """
    l, m = tuple(as_wave(l)), tuple(as_wave(m))
    if l == m:
        raise ValueError("S1 is defined for l != m")
    ks = lambda_array(n)
    c0 = float(np.sum(np.prod(c_matrix(ks, np.array([l, m])), axis=1)))
    return c0 ** 2 * trig_product_integral([l, l, m, m]) / n_vortices


def _r_j_terms(l, n, N):
    ks, c = _active(l, l, n)
    if len(ks) == 0:
        return 0.0, dict(J1=0.0, J2=0.0, shift=0.0)
    ww = np.outer(c, c)
    sq = _single(ks, [l, l])                       # int e_k^2 e_l^2
    full = _eight(ks, l, l)
    j11 = (1 - 1 / N) * np.sum(c * sq) ** 2
    j12 = np.sum(ww * full) / N
    j21 = 2 * (1 - 1 / N) * np.sum(ww * _pair_integrals(ks, [l, l]) ** 2)
    j22 = 2 * np.sum(ww * full) / N
    n2 = l[0] ** 2 + l[1] ** 2
    shift = 0.25 * eps_n(n) ** -4 * n2 ** 2
    terms = dict(J11=float(j11), J12=float(j12), J21=float(j21), J22=float(j22),
                 J1=float(j11 + j12), J2=float(j21 + j22), shift=float(shift))
    return float(j11 + j12 + j21 + j22 - shift), terms


def exact_r_second_moment(l, m, n: int, n_vortices: int, method: str = "auto",
                          max_cutoff: int = R_MOMENT_MAX_CUTOFF) -> RMoment:
    """Exact ``E R_{l,m}^2`` for the initial ensemble of ``n_vortices`` vortices.

    ``method`` is ``"generic"``, ``"split"`` (S-terms for ``l != m``, J-terms
    for ``l == m``) or ``"auto"`` (split, cross-checked against generic).
    """
    SpectralCutoff(n)
    if n_vortices < 1:
        raise ValueError("n_vortices must be >= 1")
    _check_budget(n, max_cutoff)
    l, m = tuple(as_wave(l)), tuple(as_wave(m))
    N = n_vortices
    if method == "generic":
        v, t = _r_generic(l, m, n, N)
        return RMoment(v, "generic", t)
    if method not in ("split", "auto"):
        raise ValueError(f"unknown method {method!r}")
    v, t = _r_j_terms(l, n, N) if l == m else _r_s_terms(l, m, n, N)
    name = "J" if l == m else "S"
    if method == "auto":
        g, _ = _r_generic(l, m, n, N)
        if not np.isclose(g, v, rtol=1e-9, atol=1e-9):
            raise ArithmeticError(f"split ({v!r}) and generic ({g!r}) routes disagree")
    return RMoment(v, name, t)


# -- quadrature for the nonlinear kernel -----------------------------------------

def h_phi_square_integral(l, resolution: int = 512) -> float:
    """``iint H_{e_l}(x, y)^2 dx dy`` by midpoint quadrature in ``z = x - y``.

    Integrating out ``x`` exactly leaves
    ``2 pi^2 int (K(z) . l)^2 (1 - cos 2 pi l.z) dz``, whose integrand is
    bounded at ``z = 0``.
    """
    l = as_wave(l)
    g = (np.arange(resolution) + 0.5) / resolution - 0.5
    Z = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    K = np.empty_like(Z)
    _kernel_exact_array(np.ascontiguousarray(Z), K)
    proj = K @ np.array([l.k1, l.k2], dtype=float)
    w = 1.0 - np.cos(2 * np.pi * (Z @ np.array([l.k1, l.k2], dtype=float)))
    return float(2 * np.pi ** 2 * np.mean(proj ** 2 * w))


__all__ = [
    "gaussian_moment", "moment_by_enumeration", "isserlis_fourth",
    "SymmetricKernelSpec", "quadratic_second_moment", "exact_second_moment",
    "second_moment_by_enumeration", "RMoment", "exact_r_mean",
    "exact_r_second_moment", "s1_closed_form", "h_phi_square_integral",
    "R_MOMENT_MAX_CUTOFF",
]
