"""Periodic Heisenberg chain in a random longitudinal field, dense.

Basis states are integers whose bit i is the z state of site i (bit 0 means
spin up, Z = +1).  Every local term is either a signed permutation
(sigma^x sigma^x, sigma^y sigma^y) or diagonal (sigma^z sigma^z plus the
field), so a single exponential factor is applied to a matrix in O(N^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, DomainError
from ..scheme_core import TrotterScheme

MAX_DENSE_L = 12
GROUPINGS = ("local", "global")
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class HeisenbergConfig:
    L: int = 6
    couplings: tuple = (1.0, 1.0, 1.0)
    field_range: tuple = (-0.1, 0.1)
    rng_seed: int = 0
    grouping: str = "local"
    t: float = 10.0
    costs: tuple = field(default_factory=lambda: (100, 150, 200, 300, 400, 500, 700, 1000,
                                                   1500, 2000, 3000, 4000, 6000, 8000, 10000))

    def __post_init__(self):
        if self.L < 2:
            raise ConfigurationError("chain needs L >= 2")
        if self.grouping not in GROUPINGS:
            raise ConfigurationError(f"grouping must be one of {GROUPINGS}")
        if len(self.couplings) != 3:
            raise ConfigurationError("couplings are (Jx, Jy, Jz)")
        lo, hi = self.field_range
        if lo > hi:
            raise ConfigurationError("field_range must be (low, high)")

    @property
    def tag(self) -> str:
        return "heisenberg"


@dataclass(frozen=True)
class Term:
    """One local operator H_i^alpha.

    ``kind`` "flip": H = J * S with (S U)[r] = phase[r] * U[r ^ mask];
    ``kind`` "diag": H = diag(values).
    """

    site: int
    axis: str
    kind: str
    coupling: float = 0.0
    mask: int = 0
    phase: np.ndarray | None = None
    values: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return (self.values if self.kind == "diag" else self.phase).size

    def matrix(self, n: int) -> np.ndarray:
        if self.kind == "diag":
            return np.diag(self.values).astype(complex)
        r = np.arange(n)
        M = np.zeros((n, n), dtype=complex)
        M[r, r ^ self.mask] = self.coupling * self.phase
        return M

    def apply_exp(self, theta: complex, U: np.ndarray) -> np.ndarray:
        """exp(-i theta H) @ U."""
        if self.kind == "diag":
            return np.exp(-1j * theta * self.values)[:, None] * U
        # S^2 = 1
        x = theta * self.coupling
        r = np.arange(U.shape[0])
        return np.cos(x) * U - 1j * np.sin(x) * (self.phase[:, None] * U[r ^ self.mask])


def sample_fields(config: HeisenbergConfig) -> np.ndarray:
    """h_i ~ Uniform(field_range), one draw per site, from ``rng_seed``."""
    rng = np.random.default_rng(config.rng_seed)
    return rng.uniform(*config.field_range, size=config.L)


def _bits(n: int, L: int) -> np.ndarray:
    r = np.arange(n)
    return (r[:, None] >> np.arange(L)) & 1


def site_terms(config: HeisenbergConfig, fields=None) -> list[Term]:
    """The 3L terms H_i^alpha ordered by site, then axis x, y, z."""
    L = config.L
    if L > MAX_DENSE_L:
        raise ConfigurationError(f"dense mode supports L <= {MAX_DENSE_L}, got {L}")
    h = sample_fields(config) if fields is None else np.asarray(fields, dtype=float)
    if h.shape != (L,):
        raise ConfigurationError(f"need {L} field values")
    n = 1 << L
    z = 1 - 2 * _bits(n, L)  # +1 for bit 0
    jx, jy, jz = config.couplings
    terms = []
    for i in range(L):
        k = (i + 1) % L
        mask = (1 << i) | (1 << k)
        parity = z[:, i] * z[:, k]
        terms.append(Term(i, "x", "flip", jx, mask, np.ones(n)))
        terms.append(Term(i, "y", "flip", jy, mask, -parity.astype(float)))
        terms.append(Term(i, "z", "diag", values=jz * parity + h[i] * z[:, i]))
    return terms


def groups(terms: list[Term], grouping: str) -> list[list[Term]]:
    """Operators of the splitting: one per term (local) or one per axis
    (global).  Terms inside a global group commute."""
    if grouping == "local":
        return [[t] for t in terms]
    if grouping == "global":
        return [[t for t in terms if t.axis == a] for a in AXES]
    raise ConfigurationError(f"grouping must be one of {GROUPINGS}")


def build_heisenberg(config: HeisenbergConfig, fields=None):
    """Dense H and its term list."""
    terms = site_terms(config, fields)
    n = 1 << config.L
    H = np.zeros((n, n), dtype=complex)
    for t in terms:
        H += t.matrix(n)
    return H, terms


def exact_propagator(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) by eigendecomposition."""
    H = np.asarray(H)
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if H.ndim != 2 or H.shape[0] != H.shape[1] or np.max(np.abs(H - H.conj().T), initial=0) > 1e-13 * scale:
        raise DomainError("exact propagator needs a Hermitian matrix")
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def step_factors(scheme: TrotterScheme, n_groups: int):
    """(group index, coefficient) in application order for one step.

    Each cycle is a forward pass over the groups with c_i followed by a
    backward pass with d_i; neighbouring factors of the same group merge.
    """
    c, d = scheme.ramp
    seq = []
    for ci, di in zip(c, d):
        seq.extend((g, ci) for g in range(n_groups))
        seq.extend((g, di) for g in reversed(range(n_groups)))
    merged = []
    for g, x in seq:
        if merged and merged[-1][0] == g:
            merged[-1] = (g, merged[-1][1] + x)
        else:
            merged.append((g, x))
    return [(g, x) for g, x in merged if x != 0]


def trotter_step(scheme: TrotterScheme, grouped: list[list[Term]], h: float) -> np.ndarray:
    U = np.eye(grouped[0][0].dim, dtype=complex)
    for g, x in step_factors(scheme, len(grouped)):
        for term in grouped[g]:
            U = term.apply_exp(x * h, U)
    return U


def trotter_propagator(scheme: TrotterScheme, config: HeisenbergConfig, h: float, N_t: int,
                       terms=None) -> np.ndarray:
    """Step propagator raised to the N_t-th power."""
    if N_t < 1:
        raise ConfigurationError("N_t must be positive")
    terms = site_terms(config) if terms is None else terms
    step = trotter_step(scheme, groups(terms, config.grouping), h)
    return np.linalg.matrix_power(step, N_t)


def frobenius_error(U_exact: np.ndarray, U_trotter: np.ndarray, N: int | None = None) -> float:
    """||U_exact - U_trotter||_F / sqrt(N)."""
    if U_exact.shape != U_trotter.shape:
        raise DomainError("propagators differ in shape")
    N = U_exact.shape[0] if N is None else N
    return float(np.linalg.norm(U_exact - U_trotter) / np.sqrt(N))


class HeisenbergModel:
    """Exact propagator computed once; Delta for any (scheme, N_t)."""

    def __init__(self, config: HeisenbergConfig = HeisenbergConfig(), fields=None):
        self.config = config
        self.fields = sample_fields(config) if fields is None else np.asarray(fields, float)
        self.H, self.terms = build_heisenberg(config, self.fields)
        self.grouped = groups(self.terms, config.grouping)
        self.U = exact_propagator(self.H, config.t)
        self.dim = self.H.shape[0]

    @property
    def t(self) -> float:
        return self.config.t

    @property
    def tag(self) -> str:
        return "heisenberg"

    @property
    def grouping(self) -> str:
        return self.config.grouping

    def propagator(self, scheme: TrotterScheme, N_t: int) -> np.ndarray:
        h = self.t / N_t
        return np.linalg.matrix_power(trotter_step(scheme, self.grouped, h), N_t)

    def delta(self, scheme: TrotterScheme, N_t: int) -> float:
        return frobenius_error(self.U, self.propagator(scheme, N_t))
