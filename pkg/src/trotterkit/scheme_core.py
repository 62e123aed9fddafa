"""Splitting schemes: data model, parameter transformations and error
coefficients.

A scheme with q cycles is stored in stage form, the ordered product

    exp(a_1 h A) exp(b_1 h B) exp(a_2 h A) ... exp(b_q h B) exp(a_{q+1} h A)

The ramp form (c_i, d_i) describes the same product as q forward/backward
passes and is derived from the stage form on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DomainError
from .lie_series import (
    DEFAULT_MAX_DEGREE,
    NON_LIE_FLOOR,
    TruncatedSeries,
    build_commutator_basis,
    exp_generator,
    offset,
    project_component,
    series_log,
    series_mul,
)

SYMMETRY_TOL = 1e-14

# order n -> (number of constraints, valid cycle range)
ORDER_TABLE = {
    2: (2, (1, 2)),
    4: (4, (3, 6)),
    6: (10, (7, 14)),
    8: (28, (15, 30)),
    10: (84, (31, 62)),
}


def _as_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if np.iscomplexobj(arr) and not np.any(arr.imag):
        arr = arr.real
    return np.array(arr, dtype=complex if np.iscomplexobj(arr) else float)


@dataclass(frozen=True)
class TrotterScheme:
    """Immutable scheme value.

    ``stage_a`` has q+1 entries and ``stage_b`` has q entries.  ``order`` is
    the declared order n (0 when unknown).
    """

    stage_a: np.ndarray
    stage_b: np.ndarray
    order: int = 0
    name: str = ""
    source: str = ""
    # exact ramp values when the scheme was built from them
    ramp_values: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        a = _as_array(self.stage_a)
        b = _as_array(self.stage_b)
        if a.ndim != 1 or b.ndim != 1 or a.size != b.size + 1 or b.size < 1:
            raise DomainError(
                f"stage lists need lengths q+1 and q with q >= 1, got {a.size} and {b.size}"
            )
        if np.iscomplexobj(a) != np.iscomplexobj(b):
            a, b = a.astype(complex), b.astype(complex)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "stage_a", a)
        object.__setattr__(self, "stage_b", b)
        if self.ramp_values is not None:
            c, d = (_as_array(v) for v in self.ramp_values)
            if c.size != b.size or d.size != b.size:
                raise DomainError("ramp values must have q entries each")
            c.setflags(write=False)
            d.setflags(write=False)
            object.__setattr__(self, "ramp_values", (c, d))

    @classmethod
    def from_stage(cls, a: Sequence, b: Sequence, **meta) -> "TrotterScheme":
        return cls(np.asarray(a), np.asarray(b), **meta)

    @classmethod
    def from_ramp(cls, c: Sequence, d: Sequence | None = None, **meta) -> "TrotterScheme":
        """Build from ramp parameters; ``d`` defaults to reversed ``c``
        (the symmetric case)."""
        c = np.asarray(c)
        d = c[::-1] if d is None else np.asarray(d)
        a, b = ramp_to_stage(c, d)
        return cls(a, b, ramp_values=(c, d), **meta)

    @property
    def q(self) -> int:
        return int(self.stage_b.size)

    @property
    def ramp(self) -> tuple[np.ndarray, np.ndarray]:
        if self.ramp_values is not None:
            return self.ramp_values
        return stage_to_ramp(self.stage_a, self.stage_b)

    @property
    def ramp_c(self) -> np.ndarray:
        return self.ramp[0]

    @property
    def ramp_d(self) -> np.ndarray:
        return self.ramp[1]

    @property
    def symmetric(self) -> bool:
        a, b = self.stage_a, self.stage_b
        return bool(np.allclose(a, a[::-1], rtol=0, atol=SYMMETRY_TOL)
                    and np.allclose(b, b[::-1], rtol=0, atol=SYMMETRY_TOL))

    @property
    def real_only(self) -> bool:
        return not np.iscomplexobj(self.stage_a)

    @property
    def sums(self) -> tuple[complex, complex]:
        """(sum of A exponents, sum of B exponents); both equal 1 for a
        consistent scheme, i.e. ramp sums of 1/2 each."""
        return self.stage_a.sum(), self.stage_b.sum()

    def factors(self, h: complex = 1.0):
        """(exponents, letters) of the product, letters 0 = A and 1 = B."""
        q = self.q
        x = np.empty(2 * q + 1, dtype=self.stage_a.dtype)
        x[0::2] = self.stage_a
        x[1::2] = self.stage_b
        letters = np.zeros(2 * q + 1, dtype=np.int64)
        letters[1::2] = 1
        return x * h, letters

    def reversed(self) -> "TrotterScheme":
        rv = None
        if self.ramp_values is not None:
            c, d = self.ramp_values
            rv = (d[::-1], c[::-1])
        return TrotterScheme(self.stage_a[::-1], self.stage_b[::-1], self.order,
                             self.name, self.source, rv)

    def swapped(self) -> "TrotterScheme":
        """Same product with the roles of A and B exchanged.

        The B-first product is rewritten in A-first form by inserting a zero
        A exponent at the front, so q grows by one.
        """
        a = np.concatenate([[0.0], self.stage_b, [0.0]])
        b = np.array(self.stage_a)
        return TrotterScheme(a, b, self.order, self.name, self.source)

    def with_meta(self, **meta) -> "TrotterScheme":
        fields = dict(order=self.order, name=self.name, source=self.source,
                      ramp_values=self.ramp_values)
        fields.update(meta)
        return TrotterScheme(self.stage_a, self.stage_b, **fields)

    def __eq__(self, other):
        if not isinstance(other, TrotterScheme):
            return NotImplemented
        return (self.order == other.order and self.name == other.name
                and np.array_equal(self.stage_a, other.stage_a)
                and np.array_equal(self.stage_b, other.stage_b))

    __hash__ = None


LEAPFROG = TrotterScheme(np.array([0.5, 0.5]), np.array([1.0]), order=2, name="leapfrog")


def stage_to_ramp(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Ramp parameters from stage parameters.

    c_1 = a_1, d_i = b_i - c_i, c_{i+1} = a_{i+1} - d_i.  The last stage
    a_{q+1} equals d_q for consistent schemes and is not needed.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    q = b.size
    dtype = np.result_type(a, b, float)
    c = np.empty(q, dtype=dtype)
    d = np.empty(q, dtype=dtype)
    c[0] = a[0]
    for i in range(q):
        d[i] = b[i] - c[i]
        if i + 1 < q:
            c[i + 1] = a[i + 1] - d[i]
    return c, d


def ramp_to_stage(c, d) -> tuple[np.ndarray, np.ndarray]:
    """Stage parameters from ramp parameters (inverse of stage_to_ramp)."""
    c = np.asarray(c)
    d = np.asarray(d)
    q = c.size
    dtype = np.result_type(c, d, float)
    a = np.zeros(q + 1, dtype=dtype)
    a[0] = c[0]
    a[1:q] = d[:-1] + c[1:]
    a[q] = d[-1]
    b = c + d
    return a, b


def build_product(scheme: TrotterScheme, h: complex = 1.0,
                  max_degree: int = DEFAULT_MAX_DEGREE) -> TruncatedSeries:
    """The truncated series of the scheme's product at step ``h``."""
    x, letters = scheme.factors(h)
    out = TruncatedSeries.one(max_degree)
    for t, l in zip(x, letters):
        out = series_mul(out, exp_generator("AB"[l], t, max_degree))
    return out


def scheme_log(scheme: TrotterScheme, h: complex = 1.0,
               max_degree: int = DEFAULT_MAX_DEGREE, engine: str = "kernel") -> np.ndarray:
    """Flat word coefficients of log(product)."""
    if engine == "series":
        return series_log(build_product(scheme, h, max_degree)).coeffs
    if engine != "kernel":
        raise DomainError(f"unknown engine {engine!r}")
    x, letters = scheme.factors(h)
    L, _ = _kernels.log_of_product(x, letters, max_degree)
    return L


@dataclass(frozen=True)
class ErrorCoefficients:
    """Lie-basis coordinates of log(product) at h = 1, by odd degree.

    ``nu``/``sigma`` are the coefficients of A and B; ``alpha``/``beta`` sit
    on [A,[A,B]] and [B,[B,A]]; ``gamma`` and ``degree7`` use the bases from
    :func:`trotterkit.lie_series.build_commutator_basis`.
    """

    nu: complex
    sigma: complex
    alpha: complex
    beta: complex
    gamma: np.ndarray
    degree7: np.ndarray
    basis_id: str = ""
    residuals: dict = field(default_factory=dict, compare=False)
    even_norms: dict = field(default_factory=dict, compare=False)

    def degree(self, d: int) -> np.ndarray:
        if d == 1:
            return np.array([self.nu, self.sigma])
        if d == 3:
            return np.array([self.alpha, self.beta])
        if d == 5:
            return np.asarray(self.gamma)
        if d == 7:
            return np.asarray(self.degree7)
        raise DomainError(f"no coefficients stored for degree {d}")

    def leading(self, n: int) -> np.ndarray:
        """Coefficients of the leading error of an order-n scheme (degree n+1)."""
        if n not in (2, 4, 6):
            raise DomainError(f"leading error available for n in (2, 4, 6), got {n}")
        return self.degree(n + 1)

    def stacked(self, degrees=(1, 3, 5, 7)) -> np.ndarray:
        """(nu-1, sigma-1, alpha, beta, gamma_1.., degree-7 ...)."""
        parts = []
        for d in degrees:
            v = self.degree(d)
            parts.append(v - 1 if d == 1 else v)
        return np.concatenate(parts)

    @property
    def is_real(self) -> bool:
        return not np.any(np.imag(self.stacked()))


def _coefficients_from_log(L: np.ndarray, max_degree: int, check: bool,
                           scale: float = 1.0) -> ErrorCoefficients:
    res = {}
    blocks = {}
    for d in (1, 3, 5, 7):
        if d > max_degree:
            blocks[d] = np.zeros(build_commutator_basis(d).size, dtype=L.dtype)
            continue
        blocks[d], res[d] = project_component(L[offset(d):offset(d + 1)], d, check=check,
                                              floor=NON_LIE_FLOOR * max(1.0, scale) ** d)
    evens = {d: float(np.linalg.norm(L[offset(d):offset(d + 1)]))
             for d in range(2, max_degree + 1, 2)}
    ids = ";".join(build_commutator_basis(d).basis_id for d in (3, 5, 7))

    def clean(v):
        v = np.asarray(v)
        return v.real.copy() if np.iscomplexobj(v) and not np.any(v.imag) else v

    return ErrorCoefficients(
        nu=blocks[1][0], sigma=blocks[1][1],
        alpha=blocks[3][0], beta=blocks[3][1],
        gamma=clean(blocks[5]), degree7=clean(blocks[7]),
        basis_id=ids, residuals=res, even_norms=evens,
    )


def compute_error_coefficients(scheme: TrotterScheme, h: complex = 1.0,
                               max_degree: int = DEFAULT_MAX_DEGREE,
                               engine: str = "kernel", check: bool = True) -> ErrorCoefficients:
    """Error coefficients of a scheme, by log of the product and projection.

    Even-degree components (nonzero only for non-symmetric schemes) are
    reported as norms in ``even_norms``; they are not part of the basis data.
    """
    L = scheme_log(scheme, h, max_degree, engine)
    # round-off in degree d grows like (sum of |exponents|)^d
    scale = abs(h) * float(np.sum(np.abs(scheme.stage_a)) + np.sum(np.abs(scheme.stage_b)))
    return _coefficients_from_log(L, max_degree, check, scale)


def constraint_count(n: int) -> int:
    """Number of coefficient equations an order-n scheme must satisfy."""
    if n not in ORDER_TABLE:
        raise DomainError(f"order must be one of {sorted(ORDER_TABLE)}, got {n}")
    return ORDER_TABLE[n][0]


def cycle_range(n: int) -> tuple[int, int]:
    if n not in ORDER_TABLE:
        raise DomainError(f"order must be one of {sorted(ORDER_TABLE)}, got {n}")
    return ORDER_TABLE[n][1]


def free_parameter_range(n: int, q: int) -> int:
    """Free parameters left at (n, q) once the order constraints are imposed."""
    lo, hi = cycle_range(n)
    if not lo <= q <= hi:
        ranges = ", ".join(f"n={k}: q in [{v[1][0]}, {v[1][1]}]" for k, v in ORDER_TABLE.items())
        raise DomainError(f"order {n} needs q in [{lo}, {hi}], got q = {q} (valid: {ranges})")
    return max(0, q + 1 - constraint_count(n))


def validate_order_cycles(n: int, q: int) -> None:
    free_parameter_range(n, q)


# Symmetric parameterization

def n_symmetric_params(q: int) -> int:
    return q + 1


def symmetric_to_stage(p, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Stage lists of the symmetric scheme described by ``p``.

    Even q: p = (a_1, ..., a_{q/2+1}, b_1, ..., b_{q/2}) where a_1 is half of
    the central A exponent and the remaining entries run outwards.
    Odd q: p = (a_1, ..., a_{(q+1)/2}, b_1, ..., b_{(q+1)/2}) where b_1 is
    half of the central B exponent.
    """
    p = np.asarray(p)
    if p.size != q + 1:
        raise DomainError(f"symmetric parameter vector for q={q} needs {q + 1} entries")
    if q % 2 == 0:
        m = q // 2
        a, b = p[:m + 1], p[m + 1:]
        ast = np.concatenate([a[:0:-1], [2 * a[0]], a[1:]])
        bst = np.concatenate([b[::-1], b])
    else:
        m = (q + 1) // 2
        a, b = p[:m], p[m:]
        ast = np.concatenate([a[::-1], a])
        bst = np.concatenate([b[:0:-1], [2 * b[0]], b[1:]])
    return ast, bst


def stage_to_symmetric(a, b) -> np.ndarray:
    """Inverse of :func:`symmetric_to_stage` (reads the second half)."""
    a = np.asarray(a)
    b = np.asarray(b)
    q = b.size
    if q % 2 == 0:
        m = q // 2
        return np.concatenate([[a[m] / 2], a[m + 1:], b[m:]])
    m = (q + 1) // 2
    return np.concatenate([a[m:], [b[m - 1] / 2], b[m:]])
