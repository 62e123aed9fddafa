"""Harmonic oscillator on a periodic grid: split-step Fourier evolution
against a truncated eigen-expansion.

The splitting uses A = potential (diagonal in x) and B = kinetic (diagonal
in k).  Grid points sit at x_j = -x0 + (j + 1/2) dx, symmetric about zero,
and the box [-x0, x0) is periodic with the standard discrete wavenumbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from ..errors import ConfigurationError
from ..scheme_core import TrotterScheme


@dataclass(frozen=True)
class OscillatorConfig:
    x0: float = 10.0
    N_x: int = 2000
    m: float = 1.0
    omega: float = 1.0
    N_cut: int = 23
    N_phi: int = 5
    t: float = 200.0
    costs: tuple = field(default_factory=lambda: (2000, 3000, 4000, 6000, 8000, 12000,
                                                   16000, 24000, 32000))

    def __post_init__(self):
        if self.N_phi > self.N_cut + 1:
            raise ConfigurationError("N_phi must not exceed the number of kept eigenstates")
        if self.N_phi < 1 or self.N_cut < 0:
            raise ConfigurationError("N_phi >= 1 and N_cut >= 0 required")
        if self.N_x < 2 or self.x0 <= 0:
            raise ConfigurationError("grid needs N_x >= 2 and x0 > 0")

    @property
    def tag(self) -> str:
        return "oscillator"


def grid(config: OscillatorConfig):
    """(x, dx, k)."""
    dx = 2.0 * config.x0 / config.N_x
    x = -config.x0 + (np.arange(config.N_x) + 0.5) * dx
    k = 2.0 * np.pi * np.fft.fftfreq(config.N_x, dx)
    return x, dx, k


def eigenstates(config: OscillatorConfig, count: int | None = None) -> np.ndarray:
    """Rows phi_0 .. phi_{count-1} sampled on the grid, normalized in the
    discrete norm sum |phi|^2 dx = 1."""
    count = config.N_cut + 1 if count is None else count
    x, dx, _ = grid(config)
    s = np.sqrt(config.m * config.omega)
    y = s * x
    out = np.empty((count, x.size))
    # normalized Hermite functions by the three-term recurrence
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if count > 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for n in range(2, count):
        out[n] = np.sqrt(2.0 / n) * y * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    out *= np.sqrt(s)
    out /= np.sqrt(np.sum(out ** 2, axis=1) * dx)[:, None]
    return out


def energies(config: OscillatorConfig, count: int | None = None) -> np.ndarray:
    count = config.N_cut + 1 if count is None else count
    return config.omega * (np.arange(count) + 0.5)


def oscillator_exact(config: OscillatorConfig, t: float, states) -> np.ndarray:
    """Evolve each row of ``states`` through the truncated expansion over
    phi_0 .. phi_{N_cut}."""
    _, dx, _ = grid(config)
    phi = eigenstates(config)
    psi = np.atleast_2d(np.asarray(states, dtype=complex))
    amps = psi @ phi.T * dx
    return (amps * np.exp(-1j * energies(config) * t)) @ phi


def oscillator_evolve(scheme: TrotterScheme, config: OscillatorConfig, h: float, N_t: int,
                      states) -> np.ndarray:
    """N_t split-step steps of size h applied to each row of ``states``."""
    if N_t < 1:
        raise ConfigurationError("N_t must be positive")
    x, _, k = grid(config)
    V = 0.5 * config.m * config.omega ** 2 * x ** 2
    T = k ** 2 / (2.0 * config.m)
    psi = np.atleast_2d(np.array(states, dtype=complex))
    a, b = scheme.stage_a, scheme.stage_b
    # merge the last A of one step with the first A of the next
    pa = [np.exp(-1j * ai * h * V) for ai in a[1:-1]]
    pb = [np.exp(-1j * bi * h * T) for bi in b]
    first = np.exp(-1j * a[0] * h * V)
    joint = np.exp(-1j * (a[0] + a[-1]) * h * V)
    last = np.exp(-1j * a[-1] * h * V)
    psi = psi * first
    for step in range(N_t):
        for j in range(len(b)):
            psi = sfft.ifft(sfft.fft(psi, axis=1) * pb[j], axis=1)
            if j < len(pa):
                psi = psi * pa[j]
        psi = psi * (joint if step < N_t - 1 else last)
    return psi


def state_error(exact: np.ndarray, approx: np.ndarray, dx: float) -> float:
    """sqrt(mean over states of ||exact - approx||^2) in the grid norm."""
    diff = np.sum(np.abs(exact - approx) ** 2, axis=1) * dx
    return float(np.sqrt(diff.mean()))


class OscillatorModel:
    """Lowest N_phi eigenstates evolved to time t; exact path cached."""

    def __init__(self, config: OscillatorConfig = OscillatorConfig()):
        self.config = config
        self.x, self.dx, _ = grid(config)
        self.states = eigenstates(config, config.N_phi).astype(complex)
        self.exact = oscillator_exact(config, config.t, self.states)

    @property
    def t(self) -> float:
        return self.config.t

    @property
    def tag(self) -> str:
        return "oscillator"

    @property
    def grouping(self) -> str:
        return "split-step"

    def delta(self, scheme: TrotterScheme, N_t: int) -> float:
        approx = oscillator_evolve(scheme, self.config, self.t / N_t, N_t, self.states)
        return state_error(self.exact, approx, self.dx)
