"""Stochastic point vortices with common transport noise on the 2-torus.

Submodules: ``basis`` (trigonometric basis and exact integrals),
``biot_savart`` (periodic kernel), ``particles`` (the vortex SDE),
``observables``, ``galerkin`` (spectral oracle), ``wick`` (exact Gaussian
moments), ``ensemble`` (configs and statistics), ``acceptance`` and ``cli``.
"""

from .basis import (SpectralCutoff, SpectralField, WaveVector, c_coeff, e_k_eval,
                    eps_n, lambda_set, sigma_k_eval, trig_product_integral)
from .biot_savart import KernelConfig, h_phi_eval, kernel_eval, velocity_from_spectral
from .ensemble import (EnsembleSummary, ExperimentConfig, compare_autocovariance,
                       run_ensemble)
from .galerkin import (GalerkinConfig, galerkin_step, init_white_noise,
                       nonlinear_term)
from .observables import (CylindricalFunction, generator_apply, pair, quadratic_form,
                          r_statistic, sobolev_norm, spectral_coeffs)
from .particles import (NoiseConfig, VortexState, interaction_drift, min_pair_distance,
                        sample_initial, step)
from .wick import SymmetricKernelSpec, exact_r_second_moment, exact_second_moment

__all__ = [
    "SpectralCutoff", "SpectralField", "WaveVector", "c_coeff", "e_k_eval", "eps_n",
    "lambda_set", "sigma_k_eval", "trig_product_integral", "KernelConfig", "h_phi_eval",
    "kernel_eval", "velocity_from_spectral", "EnsembleSummary", "ExperimentConfig",
    "compare_autocovariance", "run_ensemble", "GalerkinConfig", "galerkin_step",
    "init_white_noise", "nonlinear_term", "CylindricalFunction", "generator_apply",
    "pair", "quadratic_form", "r_statistic", "sobolev_norm", "spectral_coeffs",
    "NoiseConfig", "VortexState", "interaction_drift", "min_pair_distance",
    "sample_initial", "step", "SymmetricKernelSpec", "exact_r_second_moment",
    "exact_second_moment",
]

__version__ = "0.1.0"
