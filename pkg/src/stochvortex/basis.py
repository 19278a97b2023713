"""Trigonometric basis on the unit torus, transport-noise fields and exact
integrals of products of basis functions.

Conventions
-----------
Wave vectors are nonzero integer pairs.  ``k`` is *positive* when
``k1 > 0`` or ``k1 == 0 and k2 > 0``; the basis function is

    e_k(x) = sqrt(2) cos(2 pi k.x)   for positive k,
    e_k(x) = sqrt(2) sin(2 pi k.x)   otherwise.

``k_perp = (k2, -k1)`` and ``sigma_k = k_perp / (sqrt(2) |k|^2) e_k``.
Lattice sets ``Lambda_n = {k != 0 : |k| <= n}`` are always listed in
lexicographic order on ``(k1, k2)``; array helpers return ``(L, 2)`` int64
arrays in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

SQRT2 = np.sqrt(2.0)
TWO_PI = 2.0 * np.pi
MAX_PRODUCT_FACTORS = 8


@dataclass(frozen=True, order=True)
class WaveVector:
    k1: int
    k2: int

    def __post_init__(self):
        if self.k1 == 0 and self.k2 == 0:
            raise ValueError("wave vector (0, 0) is excluded")
        object.__setattr__(self, "k1", int(self.k1))
        object.__setattr__(self, "k2", int(self.k2))

    @property
    def positive(self) -> bool:
        return self.k1 > 0 or (self.k1 == 0 and self.k2 > 0)

    @property
    def norm2(self) -> int:
        return self.k1 * self.k1 + self.k2 * self.k2

    @property
    def perp(self) -> tuple[int, int]:
        return (self.k2, -self.k1)

    def __neg__(self) -> "WaveVector":
        return WaveVector(-self.k1, -self.k2)

    def __iter__(self):
        yield self.k1
        yield self.k2

    def __repr__(self):
        return f"WaveVector({self.k1}, {self.k2})"


def as_wave(k) -> WaveVector:
    if isinstance(k, WaveVector):
        return k
    k1, k2 = k
    return WaveVector(int(k1), int(k2))


def is_positive(k: np.ndarray) -> np.ndarray:
    """Sign class of an integer array ``(..., 2)``; True for Z^2_+."""
    k = np.asarray(k)
    return (k[..., 0] > 0) | ((k[..., 0] == 0) & (k[..., 1] > 0))


@lru_cache(maxsize=None)
def _lambda_array(n: int) -> np.ndarray:
    r = np.arange(-n, n + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    k = np.stack([k1.ravel(), k2.ravel()], axis=1).astype(np.int64)
    n2 = (k ** 2).sum(axis=1)
    k = k[(n2 > 0) & (n2 <= n * n)]
    k.setflags(write=False)
    return k


def lambda_array(n: int) -> np.ndarray:
    """Members of ``Lambda_n`` as a read-only ``(L, 2)`` array."""
    if n < 0:
        raise ValueError(f"cutoff must be >= 0, got {n}")
    return _lambda_array(int(n))


def lambda_set(n: int) -> list[WaveVector]:
    """Every nonzero integer vector with ``|k| <= n``, lexicographic."""
    return [WaveVector(int(a), int(b)) for a, b in lambda_array(n)]


@lru_cache(maxsize=None)
def lambda_index(n: int) -> dict[tuple[int, int], int]:
    return {(int(a), int(b)): i for i, (a, b) in enumerate(lambda_array(n))}


def eps_n(n: int) -> float:
    """Noise normalisation ``(sum_{k in Lambda_n} |k|^-2)^(-1/2)``."""
    if n < 1:
        raise ValueError("eps_n needs n >= 1 (empty sum for n = 0)")
    k = lambda_array(n)
    return float(np.sum(1.0 / (k ** 2).sum(axis=1)) ** -0.5)


@dataclass(frozen=True)
class SpectralCutoff:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("cutoff n must be a positive integer")

    @property
    def members(self) -> np.ndarray:
        return lambda_array(self.n)

    @property
    def size(self) -> int:
        return len(lambda_array(self.n))

    @property
    def eps(self) -> float:
        return eps_n(self.n)


# -- pointwise evaluation ---------------------------------------------------

def _phase(k, x):
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    return TWO_PI * (x[..., 0] * k[..., 0] + x[..., 1] * k[..., 1])


def e_k_eval(k, x) -> np.ndarray:
    """Evaluate ``e_k`` at points ``x`` of shape ``(..., 2)``."""
    k = as_wave(k)
    th = _phase(np.array([k.k1, k.k2]), x)
    return SQRT2 * (np.cos(th) if k.positive else np.sin(th))


def e_k_grad(k, x) -> np.ndarray:
    """Closed-form gradient ``(..., 2)``; equals ``2 pi k e_{-k}``."""
    k = as_wave(k)
    kv = np.array([k.k1, k.k2], dtype=float)
    return TWO_PI * e_k_eval(-k, x)[..., None] * kv


def e_k_hess(k, x) -> np.ndarray:
    """Closed-form Hessian ``-4 pi^2 (k outer k) e_k``, shape ``(..., 2, 2)``."""
    k = as_wave(k)
    kv = np.array([k.k1, k.k2], dtype=float)
    return -(TWO_PI ** 2) * e_k_eval(k, x)[..., None, None] * np.outer(kv, kv)


def basis_matrix(ks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``e_k(x)`` for many wave vectors: ``(..., P, 2) x (L, 2) -> (..., P, L)``."""
    ks = np.asarray(ks)
    x = np.asarray(x, dtype=float)
    kf = ks.astype(float)
    # elementwise rather than matmul so a column never depends on the others
    th = TWO_PI * (x[..., 0, None] * kf[:, 0] + x[..., 1, None] * kf[:, 1])
    return SQRT2 * np.where(is_positive(ks), np.cos(th), np.sin(th))


def sigma_k_eval(k, x) -> np.ndarray:
    k = as_wave(k)
    coef = np.array(k.perp, dtype=float) / (SQRT2 * k.norm2)
    return e_k_eval(k, x)[..., None] * coef


def sigma_k_jacobian(k, x) -> np.ndarray:
    """``J[..., i, j] = d sigma_k^i / d x_j`` in closed form."""
    k = as_wave(k)
    coef = np.array(k.perp, dtype=float) / (SQRT2 * k.norm2)
    return coef[:, None] * e_k_grad(k, x)[..., None, :]


def c_coeff(k, l) -> float:
    """``C_{k,l} = k_perp . l / |k|^2``."""
    k, l = as_wave(k), as_wave(l)
    kp = k.perp
    return (kp[0] * l.k1 + kp[1] * l.k2) / k.norm2


def c_matrix(ks: np.ndarray, ls: np.ndarray) -> np.ndarray:
    """Vectorised ``C[i, j] = C_{ks[i], ls[j]}``."""
    ks = np.asarray(ks, dtype=float)
    ls = np.asarray(ls, dtype=float)
    kperp = np.stack([ks[:, 1], -ks[:, 0]], axis=1)
    return (kperp @ ls.T) / (ks ** 2).sum(axis=1)[:, None]


# -- exact integrals of products -------------------------------------------

@njit(cache=True)
def _signed_counts(ks, out):
    P, m, _ = ks.shape
    for p in range(P):
        total = 0
        for pat in range(1 << m):
            a = 0
            b = 0
            w = 1
            for i in range(m):
                k1 = ks[p, i, 0]
                k2 = ks[p, i, 1]
                neg = (pat >> i) & 1
                if neg:
                    a -= k1
                    b -= k2
                else:
                    a += k1
                    b += k2
                # sine factors carry the sign of their exponent
                if neg and not (k1 > 0 or (k1 == 0 and k2 > 0)):
                    w = -w
            if a == 0 and b == 0:
                total += w
        out[p] = total


def product_integral_batch(ks: np.ndarray) -> np.ndarray:
    """Exact ``int_{T^2} prod_i e_{k_i}(x) dx`` for a batch of products.

    ``ks`` has shape ``(P, m, 2)``.  Every factor is written as a sum of two
    complex exponentials; a sign pattern contributes iff the signed wave
    vectors sum to zero.  The value is ``2^{-m/2}`` times an integer.
    """
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    if ks.ndim != 3 or ks.shape[-1] != 2:
        raise ValueError("expected an array of shape (P, m, 2)")
    P, m, _ = ks.shape
    if m > MAX_PRODUCT_FACTORS:
        raise ValueError(f"at most {MAX_PRODUCT_FACTORS} factors, got {m}")
    if m == 0:
        return np.ones(P)
    if np.any((ks == 0).all(axis=-1)):
        raise ValueError("zero wave vector in product")
    counts = np.empty(P, dtype=np.int64)
    _signed_counts(ks, counts)
    # cos = (z + 1/z)/2, sin = (z - 1/z)/(2i): q sine factors give (-i)^q
    q = (~is_positive(ks)).sum(axis=1)
    sign = np.where(q % 2 == 0, np.where((q // 2) % 2 == 0, 1, -1), 0)
    return sign * counts * 2.0 ** (-m / 2)


def trig_product_integral(ids: Sequence) -> float:
    """Exact integral over the torus of a product of basis functions.

    >>> trig_product_integral([(1, 0), (1, 0)])
    1.0
    >>> trig_product_integral([(1, 0)] * 4)
    1.5
    """
    if len(ids) > MAX_PRODUCT_FACTORS:
        raise ValueError(f"at most {MAX_PRODUCT_FACTORS} factors, got {len(ids)}")
    if len(ids) == 0:
        return 1.0
    ks = np.array([tuple(as_wave(k)) for k in ids], dtype=np.int64)[None]
    return float(product_integral_batch(ks)[0])


# -- spectral fields --------------------------------------------------------

@dataclass
class SpectralField:
    """Real coefficients ``<omega, e_l>`` for every ``l`` in ``Lambda_M``.

    ``coeffs`` is aligned with :func:`lambda_array` of ``cutoff``.
    """

    cutoff: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if self.coeffs.shape != (len(lambda_array(self.cutoff)),):
            raise ValueError(
                f"expected {len(lambda_array(self.cutoff))} coefficients for "
                f"cutoff {self.cutoff}, got shape {self.coeffs.shape}")

    @classmethod
    def zeros(cls, cutoff: int) -> "SpectralField":
        return cls(cutoff, np.zeros(len(lambda_array(cutoff))))

    @classmethod
    def from_mapping(cls, cutoff: int, coeffs: Mapping) -> "SpectralField":
        index = lambda_index(cutoff)
        keys = {tuple(as_wave(k)) for k in coeffs}
        missing = set(index) - keys
        extra = keys - set(index)
        if missing:
            raise KeyError(f"missing coefficients for {sorted(missing)[:5]}...")
        if extra:
            raise KeyError(f"modes outside Lambda_{cutoff}: {sorted(extra)[:5]}")
        arr = np.empty(len(index))
        for k, v in coeffs.items():
            arr[index[tuple(as_wave(k))]] = v
        return cls(cutoff, arr)

    @property
    def modes(self) -> np.ndarray:
        return lambda_array(self.cutoff)

    def __getitem__(self, k) -> float:
        return float(self.coeffs[lambda_index(self.cutoff)[tuple(as_wave(k))]])

    def items(self) -> Iterable[tuple[WaveVector, float]]:
        for k, v in zip(self.modes, self.coeffs):
            yield WaveVector(int(k[0]), int(k[1])), float(v)

    def evaluate(self, x) -> np.ndarray:
        return basis_matrix(self.modes, x) @ self.coeffs
