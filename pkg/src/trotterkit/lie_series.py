"""Truncated noncommutative power series in two generators A and B.

Words over {A, B} are stored densely.  A word of length d sits at slot
``2**d - 1 + code`` where ``code`` reads the word as a binary number with
A = 0, B = 1 and the first letter most significant.  At the default
truncation degree 7 this gives 255 slots.

The module also builds right-nested commutator bases for odd degrees and
projects homogeneous components of a series onto them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigurationError, DomainError, NonLieComponentError

DEFAULT_MAX_DEGREE = 7
LETTERS = "AB"
SUPPORTED_BASIS_DEGREES = (1, 3, 5, 7)
NON_LIE_TOLERANCE = 1e-10
# components that cancel to round-off have no meaningful relative residual
NON_LIE_FLOOR = 1e-13


def offset(d: int) -> int:
    """First slot of the degree-``d`` block."""
    return (1 << d) - 1


def n_slots(max_degree: int) -> int:
    return (1 << (max_degree + 1)) - 1


def word_index(word: str) -> int:
    code = 0
    for ch in word:
        if ch not in LETTERS:
            raise DomainError(f"letter {ch!r} is not one of {LETTERS}")
        code = 2 * code + (ch == "B")
    return offset(len(word)) + code


def word_at(index: int) -> str:
    d = (index + 1).bit_length() - 1
    code = index - offset(d)
    return "".join(LETTERS[(code >> (d - 1 - k)) & 1] for k in range(d))


def words_of_degree(d: int) -> list[str]:
    return [word_at(offset(d) + k) for k in range(1 << d)]


def swap_letters(word: str) -> str:
    return word.translate(str.maketrans("AB", "BA"))


class TruncatedSeries:
    """Element of the free associative algebra on {A, B} modulo words longer
    than ``max_degree``.

    Coefficients are complex.  Instances are treated as immutable values;
    arithmetic returns new objects.
    """

    __slots__ = ("max_degree", "coeffs")

    def __init__(self, coeffs=None, max_degree: int = DEFAULT_MAX_DEGREE):
        if max_degree < 0:
            raise ConfigurationError("max_degree must be nonnegative")
        size = n_slots(max_degree)
        if coeffs is None:
            arr = np.zeros(size, dtype=complex)
        else:
            arr = np.array(coeffs, dtype=complex)
            if arr.shape != (size,):
                raise ConfigurationError(
                    f"expected {size} coefficients for max_degree {max_degree}, got {arr.shape}"
                )
        self.max_degree = max_degree
        self.coeffs = arr

    # constructors
    @classmethod
    def zero(cls, max_degree: int = DEFAULT_MAX_DEGREE) -> "TruncatedSeries":
        return cls(None, max_degree)

    @classmethod
    def one(cls, max_degree: int = DEFAULT_MAX_DEGREE) -> "TruncatedSeries":
        s = cls(None, max_degree)
        s.coeffs[0] = 1.0
        return s

    @classmethod
    def word(cls, word: str, coefficient: complex = 1.0,
             max_degree: int = DEFAULT_MAX_DEGREE) -> "TruncatedSeries":
        s = cls(None, max_degree)
        if len(word) <= max_degree:
            s.coeffs[word_index(word)] = coefficient
        return s

    @classmethod
    def from_dict(cls, terms: Mapping[str, complex],
                  max_degree: int = DEFAULT_MAX_DEGREE) -> "TruncatedSeries":
        s = cls(None, max_degree)
        for w, c in terms.items():
            if len(w) <= max_degree:
                s.coeffs[word_index(w)] += c
        return s

    @classmethod
    def from_component(cls, degree: int, values,
                       max_degree: int = DEFAULT_MAX_DEGREE) -> "TruncatedSeries":
        s = cls(None, max_degree)
        s.coeffs[offset(degree):offset(degree + 1)] = values
        return s

    # access
    def __getitem__(self, word: str) -> complex:
        if len(word) > self.max_degree:
            return 0j
        return complex(self.coeffs[word_index(word)])

    @property
    def constant(self) -> complex:
        return complex(self.coeffs[0])

    def component(self, d: int) -> np.ndarray:
        """Copy of the homogeneous degree-``d`` coefficients."""
        if d > self.max_degree:
            return np.zeros(1 << d, dtype=complex)
        return self.coeffs[offset(d):offset(d + 1)].copy()

    def to_dict(self, tol: float = 0.0) -> dict[str, complex]:
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        return {word_at(int(i)): complex(self.coeffs[i]) for i in nz}

    def allclose(self, other: "TruncatedSeries", atol: float = 1e-14) -> bool:
        _check_same(self, other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) <= atol)

    # arithmetic
    def _wrap(self, arr) -> "TruncatedSeries":
        return TruncatedSeries(arr, self.max_degree)

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            _check_same(self, other)
            return self._wrap(self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[0] += other
        return self._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return self._wrap(self.coeffs * other)

    def __rmul__(self, other):
        return self._wrap(other * self.coeffs)

    def __truediv__(self, other):
        return self._wrap(self.coeffs / other)

    def __repr__(self):
        terms = self.to_dict(tol=0.0)
        if not terms:
            return f"TruncatedSeries(0, max_degree={self.max_degree})"
        body = " + ".join(f"({c:.6g})*{w or '1'}" for w, c in list(terms.items())[:8])
        more = " + ..." if len(terms) > 8 else ""
        return f"TruncatedSeries({body}{more}, max_degree={self.max_degree})"


def _check_same(u: TruncatedSeries, v: TruncatedSeries) -> None:
    if u.max_degree != v.max_degree:
        raise ConfigurationError(
            f"series truncated at different degrees ({u.max_degree} vs {v.max_degree})"
        )


def _mul_arrays(u: np.ndarray, v: np.ndarray, max_degree: int) -> np.ndarray:
    # concatenating a length-i word with a length-j word gives code
    # code_u * 2**j + code_v, which is exactly the row-major outer product
    out = np.zeros_like(u, dtype=np.result_type(u, v))
    for i in range(max_degree + 1):
        ui = u[offset(i):offset(i + 1)]
        if not ui.any():
            continue
        for j in range(max_degree + 1 - i):
            vj = v[offset(j):offset(j + 1)]
            out[offset(i + j):offset(i + j + 1)] += np.outer(ui, vj).ravel()
    return out


def series_mul(u: TruncatedSeries, v: TruncatedSeries) -> TruncatedSeries:
    """Concatenation product, dropping words longer than ``max_degree``."""
    _check_same(u, v)
    return TruncatedSeries(_mul_arrays(u.coeffs, v.coeffs, u.max_degree), u.max_degree)


def series_exp(x: TruncatedSeries) -> TruncatedSeries:
    """Exponential of a series without constant term."""
    if x.coeffs[0] != 0:
        raise DomainError("series_exp needs a zero constant term")
    D = x.max_degree
    out = np.zeros_like(x.coeffs)
    out[0] = 1.0
    term = out.copy()
    for k in range(1, D + 1):
        term = _mul_arrays(term, x.coeffs, D) / k
        out += term
    return TruncatedSeries(out, D)


def series_log(s: TruncatedSeries, tol: float = 1e-12) -> TruncatedSeries:
    """Logarithm of a series whose constant term is 1."""
    if abs(s.coeffs[0] - 1.0) > tol:
        raise DomainError(f"series_log needs constant term 1, got {s.coeffs[0]}")
    D = s.max_degree
    X = s.coeffs.copy()
    X[0] = 0.0
    out = np.zeros_like(X)
    power = X.copy()
    for k in range(1, D + 1):
        out += ((-1) ** (k + 1) / k) * power
        power = _mul_arrays(power, X, D)
    return TruncatedSeries(out, D)


def generator(letter: str, coefficient: complex = 1.0,
              max_degree: int = DEFAULT_MAX_DEGREE) -> TruncatedSeries:
    return TruncatedSeries.word(letter, coefficient, max_degree)


def exp_generator(letter: str, t: complex,
                  max_degree: int = DEFAULT_MAX_DEGREE) -> TruncatedSeries:
    """exp(t * letter), written down directly."""
    s = TruncatedSeries(None, max_degree)
    for k in range(max_degree + 1):
        s.coeffs[word_index(letter * k)] = t ** k / factorial(k)
    return s


def commutator(u: TruncatedSeries, v: TruncatedSeries) -> TruncatedSeries:
    return series_mul(u, v) - series_mul(v, u)


def right_nested(word: str, max_degree: int | None = None) -> TruncatedSeries:
    """Expand [w1, [w2, ... [w_{k-1}, w_k]]] into words."""
    if not word:
        raise DomainError("empty bracket word")
    D = len(word) if max_degree is None else max_degree
    e = generator(word[-1], 1.0, D)
    for ch in reversed(word[:-1]):
        e = commutator(generator(ch, 1.0, D), e)
    return e


# Lyndon words and the commutator bases

def lyndon_words(n: int, alphabet: str = LETTERS) -> list[str]:
    """Lyndon words of length exactly ``n`` in lexicographic order (Duval)."""
    k = len(alphabet)
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        m = len(w)
        if m == n:
            out.append("".join(alphabet[i] for i in w))
        while len(w) < n:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()
    return out


def witt_dimension(d: int) -> int:
    """Dimension of the degree-d part of the free Lie algebra on 2 letters."""
    total = 0
    for e in range(1, d + 1):
        if d % e == 0:
            total += _mobius(e) * 2 ** (d // e)
    return total // d


def _mobius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def basis_words(degree: int) -> tuple[str, ...]:
    """Bracket words for the symmetric right-nested basis of an odd degree.

    Each Lyndon word with more A's than B's is replaced by one of its
    rotations ending in "AB" (so the innermost bracket is [A, B]).  The
    rotations are chosen as the lexicographically first choice vector, over
    the Lyndon words in order, for which the chosen elements together with
    their A<->B images are linearly independent.  The chosen words are then
    sorted and their images follow in reverse order, which makes the letter
    swap act as a reversal of the coefficient vector.
    """
    if degree not in SUPPORTED_BASIS_DEGREES:
        raise DomainError(
            f"commutator basis is defined for odd degrees {SUPPORTED_BASIS_DEGREES}, got {degree}"
        )
    if degree == 1:
        return ("A", "B")
    options = []
    for w in lyndon_words(degree):
        if w.count("A") > w.count("B"):
            rotations = sorted({w[k:] + w[:k] for k in range(degree)})
            options.append([r for r in rotations if r.endswith("AB")])

    def rows_for(r):
        return [right_nested(r).component(degree).real,
                right_nested(swap_letters(r)).component(degree).real]

    def search(k, rows, chosen):
        if k == len(options):
            return chosen
        for r in options[k]:
            trial = rows + rows_for(r)
            if np.linalg.matrix_rank(np.array(trial)) == len(trial):
                found = search(k + 1, trial, chosen + [r])
                if found is not None:
                    return found
        return None

    chosen = search(0, [], [])
    if chosen is None:
        raise ArithmeticError(f"no independent right-nested basis at degree {degree}")
    chosen.sort()
    return tuple(chosen) + tuple(swap_letters(w) for w in reversed(chosen))


@dataclass(frozen=True)
class CommutatorBasis:
    """Right-nested commutator basis of one homogeneous degree.

    ``expansion`` has one row per element holding its word coefficients;
    ``solver`` is the pseudo-inverse used for projection.
    """

    degree: int
    elements: tuple[str, ...]
    expansion: np.ndarray = field(repr=False)
    solver: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def basis_id(self) -> str:
        return f"rn{self.degree}:" + ",".join(self.elements)

    def expand(self, coefficients) -> np.ndarray:
        """Word-coefficient vector of sum_k coefficients[k] * element_k."""
        return np.asarray(coefficients) @ self.expansion

    def label(self, k: int) -> str:
        w = self.elements[k]
        inner = w[-1]
        for ch in reversed(w[:-1]):
            inner = f"[{ch},{inner}]"
        return inner


@lru_cache(maxsize=None)
def build_commutator_basis(degree: int) -> CommutatorBasis:
    words = basis_words(degree)
    E = np.array([right_nested(w).component(degree).real for w in words])
    if np.linalg.matrix_rank(E) != len(words):
        raise ArithmeticError(f"degree-{degree} basis is rank deficient")
    E.setflags(write=False)
    P = np.linalg.pinv(E.T)
    P.setflags(write=False)
    return CommutatorBasis(degree, words, E, P)


def project_component(values, degree: int, check: bool = True,
                      tol: float = NON_LIE_TOLERANCE, floor: float = NON_LIE_FLOOR):
    """Coordinates of a homogeneous word vector in the degree basis.

    Returns ``(coefficients, residual_norm)``.  ``floor`` is the absolute
    residual tolerated on top of ``tol * norm``.
    """
    basis = build_commutator_basis(degree)
    v = np.asarray(values)
    coef = basis.solver @ v
    residual = float(np.linalg.norm(coef @ basis.expansion - v))
    norm = float(np.linalg.norm(v))
    if check and residual > tol * norm + floor:
        raise NonLieComponentError(degree, residual, norm)
    return coef, residual


def project_onto_basis(s: TruncatedSeries, degree: int, check: bool = True):
    """Project the degree-``degree`` part of ``s`` onto the commutator basis.

    Returns ``(coefficients, residual_norm)``; raises NonLieComponentError when
    the component is not a Lie element.
    """
    return project_component(s.component(degree), degree, check=check)


def product_of_exponentials(factors: Iterable[tuple[str, complex]],
                            max_degree: int = DEFAULT_MAX_DEGREE) -> TruncatedSeries:
    """Ordered product of exp(t * letter) over (letter, t) pairs."""
    out = TruncatedSeries.one(max_degree)
    for letter, t in factors:
        out = series_mul(out, exp_generator(letter, t, max_degree))
    return out
