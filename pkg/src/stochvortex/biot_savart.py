"""Periodic Biot-Savart kernel on the unit torus.

``K = grad_perp G`` with ``Delta G = delta - 1`` and ``a_perp = (a2, -a1)``,
so that ``u = K * omega`` has vorticity ``d2 u1 - d1 u2 = omega``.  The
Fourier form is

    K(x) = sum_{k in Z^2_+} k_perp / (pi |k|^2) sin(2 pi k.x).

Two evaluation routes are provided.  With ``fourier_cutoff=M`` the series
above is truncated at ``|k| <= M``.  With ``fourier_cutoff=None`` (default)
the untruncated kernel is summed row by row in closed form: each horizontal
row of images has gradient ``1/2 (sin 2pi a, sinh 2pi b) / (cosh 2pi b -
cos 2pi a)``, rows converge exponentially and the neutralising background
contributes ``-x2`` to ``d2 G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .basis import (SpectralField, TWO_PI, WaveVector, as_wave, basis_matrix,
                    e_k_grad, is_positive, lambda_array)

_ROWS = 6                 # image rows |n| <= _ROWS; tail below 1e-15


@dataclass(frozen=True)
class KernelConfig:
    """Kernel evaluation settings.

    fourier_cutoff
        ``None`` selects the untruncated kernel; an integer ``M`` selects the
        sine series truncated at ``|k| <= M``.
    grid_resolution
        Size of the interpolation table used by the pair-interaction loops,
        or ``None`` to evaluate the kernel directly for every pair.
    """

    fourier_cutoff: int | None = None
    grid_resolution: int | None = 256

    def __post_init__(self):
        if self.fourier_cutoff is not None and self.fourier_cutoff < 1:
            raise ValueError("fourier_cutoff must be >= 1")
        if self.grid_resolution is not None:
            if self.grid_resolution < 4:
                raise ValueError("grid_resolution must be >= 4")
            if (self.fourier_cutoff is not None
                    and self.grid_resolution < 4 * self.fourier_cutoff):
                raise ValueError("grid_resolution must be >= 4 * fourier_cutoff")


def wrap_displacement(x) -> np.ndarray:
    """Map displacements to the canonical cell ``[-1/2, 1/2)^2``."""
    x = np.asarray(x, dtype=float)
    return x - np.floor(x + 0.5)


# -- closed form ------------------------------------------------------------

@njit(cache=True)
def _kernel_exact_scalar(d1, d2):
    """Untruncated kernel at a wrapped displacement; (0, 0) at the origin."""
    if d1 == 0.0 and d2 == 0.0:
        return 0.0, 0.0
    s2a = math.sin(2.0 * math.pi * d1)
    sa = math.sin(math.pi * d1)
    sa2 = sa * sa
    # row n = 0
    sb = math.sinh(math.pi * d2)
    den = 2.0 * (sb * sb + sa2)
    g1 = 0.5 * s2a / den
    g2 = 0.5 * math.sinh(2.0 * math.pi * d2) / den
    # symmetric pairs n, -n summed together keep the result exactly odd
    for n in range(1, _ROWS + 1):
        bp = d2 - n
        bm = d2 + n
        sp = math.sinh(math.pi * bp)
        sm = math.sinh(math.pi * bm)
        dp = 2.0 * (sp * sp + sa2)
        dm = 2.0 * (sm * sm + sa2)
        g1 += 0.5 * s2a / dp + 0.5 * s2a / dm
        g2 += (0.5 * math.sinh(2.0 * math.pi * bp) / dp
               + 0.5 * math.sinh(2.0 * math.pi * bm) / dm)
    g2 -= d2
    return g2, -g1


@njit(cache=True)
def _kernel_exact_array(x, out):
    for p in range(x.shape[0]):
        d1 = x[p, 0] - math.floor(x[p, 0] + 0.5)
        d2 = x[p, 1] - math.floor(x[p, 1] + 0.5)
        k1, k2 = _kernel_exact_scalar(d1, d2)
        out[p, 0] = k1
        out[p, 1] = k2


@njit(cache=True)
def _green_exact_scalar(d1, d2):
    c2a = math.cos(2.0 * math.pi * d1)
    sa = math.sin(math.pi * d1)
    sa2 = sa * sa
    sb = math.sinh(math.pi * d2)
    g = math.log(2.0 * (sb * sb + sa2)) / (4.0 * math.pi)
    for n in range(1, _ROWS + 1):
        for b in (d2 - n, d2 + n):
            # log(cosh 2pi b - cos 2pi a) - 2 pi |b| + log 2, stable for large |b|
            ab = abs(b)
            t = 1.0 + math.exp(-4.0 * math.pi * ab) - 2.0 * c2a * math.exp(-2.0 * math.pi * ab)
            g += math.log(t) / (4.0 * math.pi)
    return g - 0.5 * d2 * d2


def green_function(x) -> np.ndarray:
    """Stream function ``G`` with ``grad_perp G = K``, up to an additive constant."""
    x = wrap_displacement(x)
    flat = x.reshape(-1, 2)
    out = np.array([_green_exact_scalar(a, b) for a, b in flat])
    return out.reshape(x.shape[:-1])


def _kernel_truncated(x: np.ndarray, M: int) -> np.ndarray:
    ks = lambda_array(M)
    ks = ks[is_positive(ks)].astype(float)
    coef = np.stack([ks[:, 1], -ks[:, 0]], axis=1) / (np.pi * (ks ** 2).sum(1))[:, None]
    flat = x.reshape(-1, 2)
    out = np.empty_like(flat)
    for a in range(0, len(flat), 4096):
        s = np.sin(TWO_PI * flat[a:a + 4096] @ ks.T)
        out[a:a + 4096] = s @ coef
    return out.reshape(x.shape)


def kernel_eval(cfg: KernelConfig, x) -> np.ndarray:
    """Biot-Savart kernel at torus displacements ``x`` of shape ``(..., 2)``."""
    x = wrap_displacement(x)
    if cfg.fourier_cutoff is not None:
        return _kernel_truncated(x, cfg.fourier_cutoff)
    flat = np.ascontiguousarray(x.reshape(-1, 2))
    out = np.empty_like(flat)
    _kernel_exact_array(flat, out)
    return out.reshape(x.shape)


def singular_part(x, wrap: bool = True) -> np.ndarray:
    """Free-space kernel ``x_perp / (2 pi |x|^2)``, by default on the wrapped displacement."""
    x = wrap_displacement(x) if wrap else np.asarray(x, dtype=float)
    r2 = (x ** 2).sum(-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.stack([x[..., 1], -x[..., 0]], -1) / (TWO_PI * r2)
    return np.where(r2 > 0, out, 0.0)


# -- interpolation table ----------------------------------------------------

@lru_cache(maxsize=8)
def _table(fourier_cutoff, resolution):
    g = -0.5 + np.arange(resolution + 1) / resolution
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1)
    if fourier_cutoff is None:
        flat = np.ascontiguousarray(X.reshape(-1, 2))
        K = np.empty_like(flat)
        for p in range(len(flat)):
            K[p] = _kernel_exact_scalar(flat[p, 0], flat[p, 1])
        K = K.reshape(X.shape)
        # table holds the smooth remainder; the origin value is its limit 0
        K = K - singular_part(X, wrap=False)
        c = resolution // 2
        K[c, c] = 0.0
    else:
        K = _kernel_truncated(X, fourier_cutoff)
    K = np.ascontiguousarray(K)
    K.setflags(write=False)
    return K


def kernel_table(cfg: KernelConfig):
    """``(table, add_singular)`` for the pair loops, or ``None`` if disabled."""
    if cfg.grid_resolution is None:
        return None
    return _table(cfg.fourier_cutoff, cfg.grid_resolution), cfg.fourier_cutoff is None


@njit(cache=True)
def _kernel_from_table(d1, d2, table, add_singular):
    if d1 == 0.0 and d2 == 0.0:
        return 0.0, 0.0
    # evaluate on the half-plane d1 > 0 so the result is exactly odd
    sgn = 1.0
    if d1 < 0.0 or (d1 == 0.0 and d2 < 0.0):
        sgn = -1.0
        d1 = -d1
        d2 = -d2
    G = table.shape[0] - 1
    u = (d1 + 0.5) * G
    v = (d2 + 0.5) * G
    i = min(int(u), G - 1)
    j = min(int(v), G - 1)
    fu = u - i
    fv = v - j
    w00 = (1 - fu) * (1 - fv)
    w10 = fu * (1 - fv)
    w01 = (1 - fu) * fv
    w11 = fu * fv
    k1 = (w00 * table[i, j, 0] + w10 * table[i + 1, j, 0]
          + w01 * table[i, j + 1, 0] + w11 * table[i + 1, j + 1, 0])
    k2 = (w00 * table[i, j, 1] + w10 * table[i + 1, j, 1]
          + w01 * table[i, j + 1, 1] + w11 * table[i + 1, j + 1, 1])
    if add_singular:
        r2 = 2.0 * math.pi * (d1 * d1 + d2 * d2)
        k1 += d2 / r2
        k2 -= d1 / r2
    return sgn * k1, sgn * k2


@njit(cache=True)
def _kernel_table_array(x, table, add_singular, out):
    for p in range(x.shape[0]):
        d1 = x[p, 0] - math.floor(x[p, 0] + 0.5)
        d2 = x[p, 1] - math.floor(x[p, 1] + 0.5)
        k1, k2 = _kernel_from_table(d1, d2, table, add_singular)
        out[p, 0] = k1
        out[p, 1] = k2


def kernel_eval_cached(cfg: KernelConfig, x) -> np.ndarray:
    """Kernel through the interpolation table (what the pair loops see)."""
    tab = kernel_table(cfg)
    if tab is None:
        return kernel_eval(cfg, x)
    x = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(x.reshape(-1, 2))
    out = np.empty_like(flat)
    _kernel_table_array(flat, tab[0], tab[1], out)
    return out.reshape(x.shape)


# -- H_phi and velocity synthesis ------------------------------------------

def h_phi_eval(cfg: KernelConfig, l, x, y) -> np.ndarray:
    """``H(x, y) = 1/2 K(x - y) . (grad e_l(x) - grad e_l(y))``, zero on the diagonal."""
    l = as_wave(l)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    K = kernel_eval(cfg, x - y)
    dg = e_k_grad(l, x) - e_k_grad(l, y)
    return 0.5 * (K * dg).sum(-1)


def mode_velocity(l) -> tuple[np.ndarray, WaveVector]:
    """``K * e_l = v e_{-l}``; returns ``(v, -l)`` with ``v = -l_perp / (2 pi |l|^2)``."""
    l = as_wave(l)
    v = -np.array(l.perp, dtype=float) / (TWO_PI * l.norm2)
    return v, -l


def _check_support(cfg: KernelConfig, field: SpectralField):
    if cfg.fourier_cutoff is not None and field.cutoff > cfg.fourier_cutoff:
        raise ValueError(f"field cutoff {field.cutoff} exceeds kernel "
                         f"fourier_cutoff {cfg.fourier_cutoff}")


def _velocity_coefficients(field: SpectralField):
    ls = field.modes.astype(float)
    vel = -np.stack([ls[:, 1], -ls[:, 0]], 1) / (TWO_PI * (ls ** 2).sum(1))[:, None]
    return vel * field.coeffs[:, None]


def velocity_from_spectral(cfg: KernelConfig, field: SpectralField, x) -> np.ndarray:
    """Velocity ``u = K * omega`` of a spectral field at points ``(..., 2)``."""
    _check_support(cfg, field)
    coef = _velocity_coefficients(field)
    E = basis_matrix(-field.modes, x)           # e_{-l}(x)
    return E @ coef


def velocity_gradient_from_spectral(cfg: KernelConfig, field: SpectralField, x) -> np.ndarray:
    """``J[..., i, j] = d u_i / d x_j`` via closed-form derivatives of ``e_{-l}``."""
    _check_support(cfg, field)
    coef = _velocity_coefficients(field)
    ls = field.modes.astype(float)
    # grad e_{-l} = -2 pi l e_l
    E = basis_matrix(field.modes, x)
    return -TWO_PI * np.einsum("...p,pi,pj->...ij", E, coef, ls)
