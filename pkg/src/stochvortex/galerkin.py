"""Spectral Galerkin truncation of the vorticity equation with white-noise forcing.

Per mode ``l`` in ``Lambda_M``::

    d w_l = (B_l(w) - 4 pi^2 |l|^2 w_l) dt + 2 sqrt(2) pi |l| d beta_l

with ``B_l = -<u(w) . grad w, e_l>`` assembled from exact triad integrals.
The noise amplitude makes the linear part an Ornstein-Uhlenbeck process with
unit stationary variance, so white noise is invariant for the linear flow;
the truncated nonlinearity is enstrophy-orthogonal and divergence-free in
coefficient space, so it preserves white noise too.

The integrator is a splitting: explicit Euler for ``B`` followed by the exact
OU transition for the linear and noise part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .basis import SpectralField, c_matrix, lambda_array, lambda_index, product_integral_batch
from .streams import init_rng, noise_rng

NOISE_CHUNK = 512


class NumericalFailure(FloatingPointError):
    """Raised when a trajectory produces non-finite values."""


@dataclass(frozen=True)
class GalerkinConfig:
    cutoff: int
    dt: float
    seed: int = 0
    nonlinear: bool = True

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        # the OU part is exact for any dt; only the explicit nonlinear substep
        # needs the bound
        stiff = self.dt * 4 * np.pi ** 2 * self.cutoff ** 2
        if self.nonlinear and stiff >= 1:
            raise ValueError(
                f"dt * 4 pi^2 M^2 = {stiff:.3g} >= 1; reduce dt below "
                f"{1 / (4 * np.pi ** 2 * self.cutoff ** 2):.3g}")

    @property
    def modes(self) -> np.ndarray:
        return lambda_array(self.cutoff)

    @property
    def size(self) -> int:
        return len(self.modes)


@lru_cache(maxsize=8)
def triad_tensor(M: int):
    """Sparse symmetric tensor with ``B_l = sum T[l, j, k] w_j w_k``.

    Returns index arrays ``(l, j, k)`` and coefficients.  Since
    ``u . grad w = -sum_{j,k} C_{j,k} w_j w_k e_{-j} e_{-k}``, the tensor is
    ``C_{j,k} int e_{-j} e_{-k} e_l``, symmetrised in ``(j, k)``.
    """
    modes = lambda_array(M)
    idx = lambda_index(M)
    L = len(modes)
    C = c_matrix(modes, modes)
    Cs = 0.5 * (C + C.T)
    J, K = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    J, K = J.ravel(), K.ravel()
    keep = np.abs(Cs[J, K]) > 0
    J, K = J[keep], K[keep]
    cand_l, cand_j, cand_k = [], [], []
    for sj in (1, -1):
        for sk in (1, -1):
            lv = sj * modes[J] + sk * modes[K]
            inside = ((lv ** 2).sum(1) <= M * M) & (lv != 0).any(1)
            lidx = np.array([idx.get((int(a), int(b)), -1) for a, b in lv[inside]],
                            dtype=np.int64)
            cand_l.append(lidx)
            cand_j.append(J[inside])
            cand_k.append(K[inside])
    # the integral vanishes unless l = +-j +-k; sign combos overlap, dedupe
    tl = np.concatenate(cand_l)
    tj = np.concatenate(cand_j)
    tk = np.concatenate(cand_k)
    trip = np.unique(np.stack([tl, tj, tk], axis=1), axis=0)
    tl, tj, tk = trip[:, 0], trip[:, 1], trip[:, 2]
    ks = np.stack([-modes[tj], -modes[tk], modes[tl]], axis=1)
    integral = product_integral_batch(ks)
    coef = Cs[tj, tk] * integral
    nz = coef != 0
    out = tuple(np.ascontiguousarray(a) for a in (tl[nz], tj[nz], tk[nz], coef[nz]))
    for a in out:
        a.setflags(write=False)
    return out


@njit(cache=True)
def _nonlinear(w, tl, tj, tk, tc, out):
    out[:] = 0.0
    for i in range(tl.shape[0]):
        out[tl[i]] += tc[i] * w[tj[i]] * w[tk[i]]


def nonlinear_coeffs(coeffs: np.ndarray, M: int) -> np.ndarray:
    tl, tj, tk, tc = triad_tensor(M)
    out = np.empty(len(lambda_array(M)))
    _nonlinear(np.ascontiguousarray(coeffs, dtype=float), tl, tj, tk, tc, out)
    return out


def nonlinear_term(field: SpectralField) -> SpectralField:
    """``B_l = -<u . grad w, e_l>`` for every ``l`` in the field's cutoff."""
    return SpectralField(field.cutoff, nonlinear_coeffs(field.coeffs, field.cutoff))


def init_white_noise(M: int, rng: np.random.Generator) -> SpectralField:
    return SpectralField(M, rng.standard_normal(len(lambda_array(M))))


def _ou_factors(M: int, dt: float):
    n2 = (lambda_array(M) ** 2).sum(axis=1).astype(float)
    lam = 4 * np.pi ** 2 * n2
    decay = np.exp(-lam * dt)
    return decay, np.sqrt(-np.expm1(-2 * lam * dt))


def galerkin_step(field: SpectralField, cfg: GalerkinConfig,
                  rng: np.random.Generator) -> SpectralField:
    if field.cutoff != cfg.cutoff:
        raise ValueError("field cutoff differs from config cutoff")
    decay, amp = _ou_factors(cfg.cutoff, cfg.dt)
    w = field.coeffs
    drift = nonlinear_coeffs(w, cfg.cutoff) if cfg.nonlinear else 0.0
    new = decay * (w + cfg.dt * drift) + amp * rng.standard_normal(len(w))
    if not np.all(np.isfinite(new)):
        raise NumericalFailure("non-finite Galerkin coefficients")
    return SpectralField(cfg.cutoff, new)


@njit(cache=True)
def _loop(w, Z, step0, decay, amp, dt, tl, tj, tk, tc, nonlinear,
          rec_slot, rec_out, track, track_w, track_b, B):
    n = Z.shape[0]
    L = w.shape[0]
    for s in range(n):
        if nonlinear:
            _nonlinear(w, tl, tj, tk, tc, B)
        else:
            B[:] = 0.0
        gs = step0 + s
        for t in range(track.shape[0]):
            track_w[gs, t] = w[track[t]]
            track_b[gs, t] = B[track[t]]
        ok = True
        for i in range(L):
            w[i] = decay[i] * (w[i] + dt * B[i]) + amp[i] * Z[s, i]
            if not np.isfinite(w[i]):
                ok = False
        if not ok:
            return gs + 1, False
        slot = rec_slot[gs + 1]
        if slot >= 0:
            rec_out[slot, :] = w
    return step0 + n, True


@dataclass
class GalerkinTrajectory:
    times: np.ndarray
    coeffs: np.ndarray                      # (R, L) at recorded times
    finite: bool
    steps: int
    track_modes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), np.int64))
    track_w: np.ndarray | None = None       # (n_steps + 1, T) every step
    track_b: np.ndarray | None = None       # nonlinearity at every step


def simulate(cfg: GalerkinConfig, n_steps: int, record_steps=None, run: int = 0,
             init: SpectralField | None = None, track=()) -> GalerkinTrajectory:
    """Integrate run ``run`` of seed ``cfg.seed``.

    The initial field is white noise from the run's init stream unless given.
    ``track`` lists wave vectors whose coefficient and nonlinearity are kept
    at every step (for martingale checks).  Non-finite values stop the run
    and clear ``finite``.
    """
    M, L = cfg.cutoff, cfg.size
    w = (init_white_noise(M, init_rng(cfg.seed, run)).coeffs if init is None
         else np.array(init.coeffs, dtype=float))
    if record_steps is None:
        record_steps = range(n_steps + 1)
    record_steps = sorted(set(int(s) for s in record_steps))
    if record_steps and (record_steps[0] < 0 or record_steps[-1] > n_steps):
        raise ValueError("record steps outside [0, n_steps]")
    rec_slot = np.full(n_steps + 1, -1, dtype=np.int64)
    rec_slot[record_steps] = np.arange(len(record_steps))
    rec = np.full((len(record_steps), L), np.nan)
    if rec_slot[0] >= 0:
        rec[rec_slot[0]] = w
    idx = lambda_index(M)
    track_modes = np.array([tuple(k) for k in track], dtype=np.int64).reshape(-1, 2)
    tidx = np.array([idx[tuple(k)] for k in track_modes], dtype=np.int64)
    track_w = np.full((n_steps + 1, len(tidx)), np.nan)
    track_b = np.full((n_steps + 1, len(tidx)), np.nan)
    decay, amp = _ou_factors(M, cfg.dt)
    tl, tj, tk, tc = triad_tensor(M)
    g = noise_rng(cfg.seed, run)
    B = np.empty(L)
    done, ok = 0, True
    while done < n_steps and ok:
        m = min(NOISE_CHUNK, n_steps - done)
        Z = g.standard_normal((m, L))
        done, ok = _loop(w, Z, done, decay, amp, cfg.dt, tl, tj, tk, tc,
                         cfg.nonlinear, rec_slot, rec, tidx, track_w, track_b, B)
    if ok and len(tidx):
        track_w[n_steps] = w[tidx]
        track_b[n_steps] = nonlinear_coeffs(w, M)[tidx] if cfg.nonlinear else 0.0
    return GalerkinTrajectory(np.asarray(record_steps) * cfg.dt, rec, ok, done,
                              track_modes, track_w, track_b)


def martingale_increment(traj: GalerkinTrajectory, dt: float, kind: str,
                         which=(0,)) -> float:
    """``M_t = F(w_t) - F(w_0) - int_0^t L F ds`` along a tracked trajectory.

    ``kind`` is ``"linear"`` (``F = w_l``), ``"square"`` (``F = w_l^2``) or
    ``"product"`` (``F = w_l w_m``, ``which = (i, j)``); indices refer to
    ``traj.track_modes``.  The time integral uses the trapezoidal rule.
    """
    n2 = (traj.track_modes ** 2).sum(axis=1).astype(float)
    a = 4 * np.pi ** 2 * n2
    w, b = traj.track_w, traj.track_b
    if kind == "linear":
        i = which[0]
        F = w[:, i]
        LF = -a[i] * w[:, i] + b[:, i]
    elif kind == "square":
        i = which[0]
        F = w[:, i] ** 2
        LF = 2 * a[i] * (1 - w[:, i] ** 2) + 2 * w[:, i] * b[:, i]
    elif kind == "product":
        i, j = which
        F = w[:, i] * w[:, j]
        LF = (-(a[i] + a[j]) * F + b[:, i] * w[:, j] + w[:, i] * b[:, j]
              + (2 * a[i] if i == j else 0.0))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    integral = dt * (0.5 * LF[0] + LF[1:-1].sum() + 0.5 * LF[-1])
    return float(F[-1] - F[0] - integral)
