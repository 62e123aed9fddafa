import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import random_symmetric_stage
from trotterkit.errors import DomainError
from trotterkit.scheme_core import (
    LEAPFROG,
    TrotterScheme,
    compute_error_coefficients,
    constraint_count,
    cycle_range,
    free_parameter_range,
    ramp_to_stage,
    scheme_log,
    stage_to_ramp,
    stage_to_symmetric,
    symmetric_to_stage,
)

finite = st.floats(-3, 3, allow_nan=False)


@given(st.integers(1, 14).flatmap(lambda q: arrays(float, 2 * q, elements=finite)))
def test_ramp_stage_round_trip(cd):
    q = cd.size // 2
    c, d = cd[:q], cd[q:]
    a, b = ramp_to_stage(c, d)
    c2, d2 = stage_to_ramp(a, b)
    assert np.allclose(c2, c, atol=1e-12) and np.allclose(d2, d, atol=1e-12)


@given(st.integers(1, 14).flatmap(lambda q: arrays(float, q + 1, elements=finite)))
def test_symmetric_round_trip(p):
    q = p.size - 1
    a, b = symmetric_to_stage(p, q)
    assert np.allclose(a, a[::-1]) and np.allclose(b, b[::-1])
    assert np.allclose(stage_to_symmetric(a, b), p, atol=1e-12)


def test_ramp_sums_follow_stage_sums():
    s = TrotterScheme.from_ramp([0.1, 0.3, 0.1])
    assert np.isclose(s.ramp_c.sum(), 0.5)
    assert np.allclose(s.sums, (1.0, 1.0))
    assert s.symmetric


def test_stage_lengths_validated():
    with pytest.raises(DomainError):
        TrotterScheme(np.array([0.5, 0.5]), np.array([0.5, 0.5]))


def test_scheme_is_immutable():
    with pytest.raises(ValueError):
        LEAPFROG.stage_a[0] = 1.0


def test_ramp_values_kept_exactly():
    c = [0.123456789012345678, 0.376543210987654322]
    s = TrotterScheme.from_ramp(c)
    assert s.ramp_c[0] == c[0]
    r = s.reversed()
    assert np.allclose(r.stage_a, s.stage_a[::-1])


def test_leapfrog_coefficients():
    co = compute_error_coefficients(LEAPFROG)
    assert co.nu == pytest.approx(1) and co.sigma == pytest.approx(1)
    assert abs(co.alpha + 1 / 24) < 1e-15
    assert abs(co.beta - 1 / 12) < 1e-15
    assert co.is_real
    assert co.basis_id.startswith("rn3:AAB,BBA;rn5:AAAAB,AABAB,BAAAB,ABBBA,BBABA,BBBBA;rn7:")


def test_kernel_and_series_engines_agree(rng):
    a, b = random_symmetric_stage(rng, 5)
    s = TrotterScheme(a, b)
    assert np.allclose(scheme_log(s), scheme_log(s, engine="series"), atol=1e-13)
    with pytest.raises(DomainError):
        scheme_log(s, engine="other")


def test_nonsymmetric_scheme_has_even_part():
    s = TrotterScheme(np.array([0.3, 0.7]), np.array([1.0]))
    co = compute_error_coefficients(s)
    assert co.even_norms[2] > 0.1
    assert compute_error_coefficients(LEAPFROG).even_norms[2] < 1e-15


@pytest.mark.parametrize("seed", range(10))
def test_recursion_oracle(seed):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(1, 15))
    a, b = random_symmetric_stage(rng, q)
    nu, sigma, alpha, beta = oracles.recursion_coefficients(a, b)
    co = compute_error_coefficients(TrotterScheme(a, b))
    assert abs(co.alpha - alpha) < 1e-12 and abs(co.beta - beta) < 1e-12
    assert abs(co.nu - nu) < 1e-12 and abs(co.sigma - sigma) < 1e-12


def test_degree_scaling():
    rng = np.random.default_rng(3)
    s = TrotterScheme(*random_symmetric_stage(rng, 4))
    c1 = compute_error_coefficients(s)
    h = 0.5
    c2 = compute_error_coefficients(s, h=h)
    assert np.allclose(c2.degree(3), h ** 3 * c1.degree(3), atol=1e-15)
    assert np.allclose(c2.degree(5), h ** 5 * c1.degree(5), atol=1e-15)
    assert np.allclose(c2.degree(7), h ** 7 * c1.degree(7), atol=1e-15)


def test_letter_swap_reverses_coefficients():
    rng = np.random.default_rng(11)
    s = TrotterScheme(*random_symmetric_stage(rng, 3))
    c = compute_error_coefficients(s)
    sw = compute_error_coefficients(s.swapped())
    for d in (3, 5, 7):
        assert np.allclose(sw.degree(d), c.degree(d)[::-1], atol=1e-13)


def test_complex_scheme():
    lam = 0.25 + 0.1j
    s = TrotterScheme(np.array([lam, 1 - 2 * lam, lam]), np.array([0.5, 0.5]))
    co = compute_error_coefficients(s)
    assert not s.real_only and not co.is_real


def test_leading_and_stacked():
    co = compute_error_coefficients(LEAPFROG)
    assert co.leading(2).shape == (2,)
    assert co.stacked().shape == (2 + 2 + 6 + 18,)
    with pytest.raises(DomainError):
        co.leading(8)


def test_order_table():
    assert [constraint_count(n) for n in (2, 4, 6, 8, 10)] == [2, 4, 10, 28, 84]
    assert cycle_range(6) == (7, 14)
    assert free_parameter_range(4, 6) == 3
    assert free_parameter_range(6, 14) == 5
    assert free_parameter_range(6, 7) == 0
    with pytest.raises(DomainError, match=r"valid: n=2: q in \[1, 2\]"):
        free_parameter_range(6, 2)
