"""Simulation and verification toolkit for mean-field jump particle systems in a random environment."""

__version__ = "0.1.0"

from .environment import DisorderLaw, EnvironmentDraw, environment_statistics, sample_environment
from .coupling import CoupledEnvironment, couple, k_tail_profile
from .model import Drift, InitialLaw, ModelSpec, Rate, constant_rate_model, tanh_model
from .operators import TestFunction, generator_gap_bound
from .pdmp import simulate_ensemble, simulate_pdmp
from .limit import simulate_annealed, simulate_limit_ensemble, simulate_limit_given_w
from .metrics import fidi_gap, rate_fit, w1_empirical

__all__ = [
    "CoupledEnvironment", "DisorderLaw", "Drift", "EnvironmentDraw", "InitialLaw", "ModelSpec", "Rate",
    "TestFunction", "constant_rate_model", "couple", "environment_statistics", "fidi_gap",
    "generator_gap_bound", "k_tail_profile", "rate_fit", "sample_environment", "simulate_annealed",
    "simulate_ensemble", "simulate_limit_ensemble", "simulate_limit_given_w", "simulate_pdmp",
    "tanh_model", "w1_empirical",
]
