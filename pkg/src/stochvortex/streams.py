"""Reproducible random streams.

Every run owns two independent streams derived from ``(master_seed, run)``:
one for the initial condition and one for the noise increments.  Increments
of step ``s`` are the ``s``-th block of the noise stream, so a run's noise
never depends on the vortex count, on other runs or on worker scheduling.
"""

import numpy as np

INIT_STREAM = 0
NOISE_STREAM = 1


def _rng(master_seed: int, run: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(run), stream))
    return np.random.Generator(np.random.Philox(ss))


def init_rng(master_seed: int, run: int) -> np.random.Generator:
    return _rng(master_seed, run, INIT_STREAM)


def noise_rng(master_seed: int, run: int) -> np.random.Generator:
    return _rng(master_seed, run, NOISE_STREAM)


def noise_increments(master_seed: int, run: int, n_steps: int, n_modes: int,
                     dt: float) -> np.ndarray:
    """Brownian increments ``(n_steps, n_modes)`` with variance ``dt``."""
    g = noise_rng(master_seed, run)
    return g.standard_normal((n_steps, n_modes)) * np.sqrt(dt)
