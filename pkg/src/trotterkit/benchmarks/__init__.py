"""Numerical experiments: Heisenberg chain and harmonic oscillator."""

from .heisenberg import (
    HeisenbergConfig,
    HeisenbergModel,
    build_heisenberg,
    exact_propagator,
    frobenius_error,
    trotter_propagator,
)
from .oscillator import OscillatorConfig, OscillatorModel, oscillator_evolve, oscillator_exact
from .sweeps import (
    BenchmarkResult,
    chain_length_sweep,
    cost_sweep,
    n_steps,
    penalty_correlation_study,
    scaling_window,
)

__all__ = [
    "BenchmarkResult",
    "HeisenbergConfig",
    "HeisenbergModel",
    "OscillatorConfig",
    "OscillatorModel",
    "build_heisenberg",
    "chain_length_sweep",
    "cost_sweep",
    "exact_propagator",
    "frobenius_error",
    "n_steps",
    "oscillator_evolve",
    "oscillator_exact",
    "penalty_correlation_study",
    "scaling_window",
    "trotter_propagator",
]
