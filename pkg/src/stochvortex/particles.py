"""Stochastic point vortices with common transport noise on the torus.

Each vortex moves by

    dX_i = N^{-1/2} sum_{j != i} xi_j K(X_i - X_j) dt
           + 2 sqrt(2) eps_n sum_{k in Lambda_n} sigma_k(X_i) o dW^k,

with the same Brownian motions ``W^k`` for every vortex.  Because
``sigma_k . grad sigma_k = 0`` the Ito and Stratonovich forms coincide, so
Euler-Maruyama is consistent; a Heun scheme is kept for cross-checks.

Positions are always wrapped to ``[0, 1)^2``.  Pairs closer than
``COLLISION_DISTANCE`` mark a run as degenerate; the run continues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .basis import SQRT2, eps_n, is_positive, lambda_array, lambda_index
from .biot_savart import KernelConfig, _kernel_exact_scalar, _kernel_from_table, kernel_table
from .streams import init_rng, noise_increments

COLLISION_DISTANCE = 1e-5
CLOSE_DISTANCE = 1e-4


class CollisionError(ValueError):
    """Two vortices occupy the same point."""

    def __init__(self, i, j):
        super().__init__(f"vortices {i} and {j} coincide")
        self.pair = (i, j)


@dataclass(frozen=True)
class VortexState:
    intensities: np.ndarray
    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        xi = np.array(self.intensities, dtype=float).reshape(-1)
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        if len(xi) != len(pos):
            raise ValueError("intensities and positions differ in length")
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        pos = pos - np.floor(pos)
        xi.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "intensities", xi)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return len(self.intensities)


@dataclass(frozen=True)
class NoiseConfig:
    """Transport-noise settings for one run.

    ``amplitude`` defaults to ``2 sqrt(2) eps_n``; pass ``0.0`` to switch the
    noise off while keeping the stream layout.
    """

    cutoff: int
    master_seed: int
    dt: float
    run: int = 0
    amplitude: float | None = None

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("noise cutoff must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def scale(self) -> float:
        if self.amplitude is not None:
            return float(self.amplitude)
        return 2.0 * SQRT2 * eps_n(self.cutoff)


@lru_cache(maxsize=None)
def half_modes(n: int):
    """Positive half of ``Lambda_n`` with indices of ``k`` and ``-k`` in ``Lambda_n``.

    Returns ``(k, coef, idx_pos, idx_neg)`` where ``coef = k_perp / |k|^2``.
    """
    lam = lambda_array(n)
    index = lambda_index(n)
    k = lam[is_positive(lam)]
    coef = np.stack([k[:, 1], -k[:, 0]], 1) / (k ** 2).sum(1)[:, None].astype(float)
    ip = np.array([index[(a, b)] for a, b in k])
    im = np.array([index[(-a, -b)] for a, b in k])
    return (np.ascontiguousarray(k), np.ascontiguousarray(coef), ip, im)


def sample_initial(n_vortices: int, rng: np.random.Generator) -> VortexState:
    """i.i.d. standard normal intensities and uniform positions."""
    if n_vortices < 1:
        raise ValueError("need at least one vortex")
    xi = rng.standard_normal(n_vortices)
    pos = rng.random((n_vortices, 2))
    return VortexState(xi, pos, 0.0)


# -- numba kernels ----------------------------------------------------------

@njit(cache=True)
def _drift(xi, pos, table, add_singular, use_table, out):
    """Pair-interaction drift; returns (min distance, i, j) of the closest pair."""
    N = xi.shape[0]
    for i in range(N):
        out[i, 0] = 0.0
        out[i, 1] = 0.0
    dmin = np.inf
    imin = -1
    jmin = -1
    for i in range(N):
        for j in range(i + 1, N):
            d1 = pos[i, 0] - pos[j, 0]
            d2 = pos[i, 1] - pos[j, 1]
            d1 -= math.floor(d1 + 0.5)
            d2 -= math.floor(d2 + 0.5)
            r2 = d1 * d1 + d2 * d2
            if r2 < dmin:
                dmin = r2
                imin = i
                jmin = j
            if use_table:
                k1, k2 = _kernel_from_table(d1, d2, table, add_singular)
            else:
                k1, k2 = _kernel_exact_scalar(d1, d2)
            out[i, 0] += xi[j] * k1
            out[i, 1] += xi[j] * k2
            out[j, 0] -= xi[i] * k1
            out[j, 1] -= xi[i] * k2
    s = 1.0 / math.sqrt(N)
    for i in range(N):
        out[i, 0] *= s
        out[i, 1] *= s
    return math.sqrt(dmin), imin, jmin


@njit(cache=True)
def _noise_velocity(pos, hk, hcoef, a, b, nmax, out):
    """``sum_{k in H} k_perp/|k|^2 (cos(2pi k.x) a_k + sin(2pi k.x) b_k)``."""
    N = pos.shape[0]
    H = hk.shape[0]
    c1 = np.empty(nmax + 1)
    s1 = np.empty(nmax + 1)
    c2 = np.empty(2 * nmax + 1)
    s2 = np.empty(2 * nmax + 1)
    for p in range(N):
        for m in range(nmax + 1):
            t = 2.0 * math.pi * m * pos[p, 0]
            c1[m] = math.cos(t)
            s1[m] = math.sin(t)
        for m in range(-nmax, nmax + 1):
            t = 2.0 * math.pi * m * pos[p, 1]
            c2[m + nmax] = math.cos(t)
            s2[m + nmax] = math.sin(t)
        vx = 0.0
        vy = 0.0
        for h in range(H):
            i1 = hk[h, 0]
            i2 = hk[h, 1] + nmax
            cr = c1[i1] * c2[i2] - s1[i1] * s2[i2]
            si = s1[i1] * c2[i2] + c1[i1] * s2[i2]
            w = cr * a[h] + si * b[h]
            vx += hcoef[h, 0] * w
            vy += hcoef[h, 1] * w
        out[p, 0] = vx
        out[p, 1] = vy


@njit(cache=True)
def _run(xi, pos, disp, dW, idx_pos, idx_neg, hk, hcoef, nmax, scale, dt,
         table, add_singular, use_table, with_drift, heun, record,
         rec_pos, rec_disp):
    """Advance ``pos`` in place over ``dW.shape[0]`` steps.

    ``record[s]`` is the slot for the state after step ``s`` (-1: skip); slot
    for the initial state is filled by the caller.  Returns
    ``(min distance, close steps, collision pair i, j, finite flag)``.
    """
    N = xi.shape[0]
    H = hk.shape[0]
    b = np.zeros((N, 2))
    v = np.zeros((N, 2))
    bt = np.zeros((N, 2))
    vt = np.zeros((N, 2))
    trial = np.empty((N, 2))
    ca = np.empty(H)
    cb = np.empty(H)
    dmin_all = np.inf
    n_close = 0
    ci = -1
    cj = -1
    finite = True
    for s in range(dW.shape[0]):
        for h in range(H):
            ca[h] = dW[s, idx_pos[h]]
            cb[h] = dW[s, idx_neg[h]]
        if with_drift and N > 1:
            dmin, i0, j0 = _drift(xi, pos, table, add_singular, use_table, b)
            if dmin < dmin_all:
                dmin_all = dmin
            if dmin < CLOSE_DISTANCE:
                n_close += 1
            if dmin < COLLISION_DISTANCE and ci < 0:
                ci = i0
                cj = j0
        _noise_velocity(pos, hk, hcoef, ca, cb, nmax, v)
        if heun:
            for i in range(N):
                trial[i, 0] = pos[i, 0] + b[i, 0] * dt + scale * v[i, 0]
                trial[i, 1] = pos[i, 1] + b[i, 1] * dt + scale * v[i, 1]
                trial[i, 0] -= math.floor(trial[i, 0])
                trial[i, 1] -= math.floor(trial[i, 1])
            if with_drift and N > 1:
                _drift(xi, trial, table, add_singular, use_table, bt)
            _noise_velocity(trial, hk, hcoef, ca, cb, nmax, vt)
            for i in range(N):
                for c in range(2):
                    b[i, c] = 0.5 * (b[i, c] + bt[i, c])
                    v[i, c] = 0.5 * (v[i, c] + vt[i, c])
        for i in range(N):
            for c in range(2):
                inc = b[i, c] * dt + scale * v[i, c]
                disp[i, c] += inc
                x = pos[i, c] + inc
                pos[i, c] = x - math.floor(x)
                if not math.isfinite(x):
                    finite = False
        if not finite:
            break
        r = record[s]
        if r >= 0:
            for i in range(N):
                for c in range(2):
                    rec_pos[r, i, c] = pos[i, c]
                    rec_disp[r, i, c] = disp[i, c]
    if with_drift and N > 1 and finite:
        dmin, i0, j0 = _drift(xi, pos, table, add_singular, use_table, b)
        if dmin < dmin_all:
            dmin_all = dmin
        if dmin < COLLISION_DISTANCE and ci < 0:
            ci = i0
            cj = j0
    return dmin_all, n_close, ci, cj, finite


# -- Python-level API -------------------------------------------------------

_DUMMY_TABLE = np.zeros((2, 2, 2))


def _table_args(cfg: KernelConfig):
    if cfg.fourier_cutoff is not None and cfg.grid_resolution is None:
        raise ValueError("a truncated kernel in the pair loop needs grid_resolution")
    tab = kernel_table(cfg)
    if tab is None:
        return _DUMMY_TABLE, True, False
    return tab[0], tab[1], True


def interaction_drift(state: VortexState, cfg: KernelConfig | None = None) -> np.ndarray:
    """``b_i = N^{-1/2} sum_{j != i} xi_j K(X_i - X_j)``, shape ``(N, 2)``."""
    cfg = cfg or KernelConfig()
    out = np.zeros((state.n, 2))
    if state.n == 1:
        return out
    table, add_sing, use_table = _table_args(cfg)
    dmin, i, j = _drift(state.intensities, np.ascontiguousarray(state.positions),
                        table, add_sing, use_table, out)
    if dmin == 0.0:
        raise CollisionError(i, j)
    return out


def transport_velocity(positions, dW, cutoff: int) -> np.ndarray:
    """``sum_{k in Lambda_n} sigma_k(x) dW_k`` at each position, shape ``(N, 2)``.

    ``dW`` is indexed like ``lambda_array(cutoff)``.
    """
    k, coef, ip, im = half_modes(cutoff)
    out = np.empty((len(positions), 2))
    dW = np.asarray(dW, dtype=float)
    _noise_velocity(np.ascontiguousarray(positions, dtype=float), k, coef,
                    np.ascontiguousarray(dW[ip]), np.ascontiguousarray(dW[im]),
                    cutoff, out)
    return out


def step(state: VortexState, noise: NoiseConfig, rng: np.random.Generator,
         kernel: KernelConfig | None = None, scheme: str = "euler") -> VortexState:
    """One step of size ``noise.dt``; the increments ``dW^k`` come from ``rng``."""
    L = len(lambda_array(noise.cutoff))
    dW = rng.standard_normal((1, L)) * math.sqrt(noise.dt)
    traj = _simulate_arrays(state.intensities, state.positions, dW, noise,
                            kernel or KernelConfig(), scheme, True, [1])
    return VortexState(state.intensities, traj.positions[-1], state.time + noise.dt)


@dataclass
class Trajectory:
    """Recorded states of one run plus collision diagnostics."""

    times: np.ndarray
    intensities: np.ndarray
    positions: np.ndarray          # (S, N, 2), wrapped
    displacement: np.ndarray       # (S, N, 2), unwrapped X_t - X_0
    min_distance: float
    close_fraction: float
    collision_pair: tuple[int, int] | None
    finite: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.collision_pair is not None or not self.finite


def _simulate_arrays(xi, pos0, dW, noise: NoiseConfig, kernel: KernelConfig,
                     scheme, with_drift, record_steps) -> Trajectory:
    if scheme not in ("euler", "heun"):
        raise ValueError(f"unknown scheme {scheme!r}")
    xi = np.ascontiguousarray(xi, dtype=float)
    pos = np.ascontiguousarray(pos0, dtype=float).copy()
    nsteps = dW.shape[0]
    record = np.full(nsteps, -1, dtype=np.int64)
    rec_steps = sorted(set(int(s) for s in record_steps))
    if rec_steps and (rec_steps[0] < 0 or rec_steps[-1] > nsteps):
        raise ValueError("record step out of range")
    S = len(rec_steps)
    rec_pos = np.empty((S, len(xi), 2))
    rec_disp = np.zeros((S, len(xi), 2))
    for slot, s in enumerate(rec_steps):
        if s == 0:
            rec_pos[slot] = pos
        else:
            record[s - 1] = slot
    k, coef, ip, im = half_modes(noise.cutoff)
    table, add_sing, use_table = _table_args(kernel)
    disp = np.zeros_like(pos)
    dmin, n_close, ci, cj, finite = _run(
        xi, pos, disp, np.ascontiguousarray(dW), ip, im, k, coef, noise.cutoff,
        noise.scale, noise.dt, table, add_sing, use_table, with_drift,
        scheme == "heun", record, rec_pos, rec_disp)
    return Trajectory(
        times=np.array(rec_steps) * noise.dt,
        intensities=xi,
        positions=rec_pos,
        displacement=rec_disp,
        min_distance=float(dmin),
        close_fraction=n_close / max(nsteps, 1),
        collision_pair=(int(ci), int(cj)) if ci >= 0 else None,
        finite=bool(finite),
    )


def simulate(state: VortexState, noise: NoiseConfig, n_steps: int,
             record_steps=None, kernel: KernelConfig | None = None,
             scheme: str = "euler", drift: bool = True) -> Trajectory:
    """Run ``n_steps`` steps with the noise stream of ``(noise.master_seed, noise.run)``.

    ``record_steps`` lists step indices (0 = initial state) to keep; by
    default every step is kept.
    """
    L = len(lambda_array(noise.cutoff))
    dW = noise_increments(noise.master_seed, noise.run, n_steps, L, noise.dt)
    if record_steps is None:
        record_steps = range(n_steps + 1)
    traj = _simulate_arrays(state.intensities, state.positions, dW, noise,
                            kernel or KernelConfig(), scheme, drift, record_steps)
    traj.times = traj.times + state.time
    return traj


def simulate_run(n_vortices: int, noise: NoiseConfig, n_steps: int,
                 record_steps=None, kernel: KernelConfig | None = None,
                 scheme: str = "euler", drift: bool = True) -> Trajectory:
    """Sample the initial state of run ``noise.run`` and simulate it."""
    state = sample_initial(n_vortices, init_rng(noise.master_seed, noise.run))
    return simulate(state, noise, n_steps, record_steps, kernel, scheme, drift)


def torus_distance(a, b) -> np.ndarray:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d -= np.floor(d + 0.5)
    return np.sqrt((d ** 2).sum(-1))


def min_pair_distance(state: VortexState) -> float:
    if state.n < 2:
        raise ValueError("need at least two vortices")
    X = state.positions
    i, j = np.triu_indices(state.n, 1)
    return float(torus_distance(X[i], X[j]).min())


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Dump as CSV with header ``t,i,xi,x1,x2``."""
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "i", "xi", "x1", "x2"])
        for t, X in zip(traj.times, traj.positions):
            for i, (x, p) in enumerate(zip(traj.intensities, X)):
                w.writerow([repr(float(t)), i, repr(float(x)),
                            repr(float(p[0])), repr(float(p[1]))])


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: ``(times, xi, positions)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    n = int(data[:, 1].max()) + 1
    pos = data[:, 3:5].reshape(len(times), n, 2)
    return times, data[:n, 2], pos
