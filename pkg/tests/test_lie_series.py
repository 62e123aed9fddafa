import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

import oracles
from trotterkit.errors import ConfigurationError, DomainError, NonLieComponentError
from trotterkit.lie_series import (
    TruncatedSeries,
    basis_words,
    build_commutator_basis,
    commutator,
    exp_generator,
    generator,
    lyndon_words,
    n_slots,
    offset,
    product_of_exponentials,
    project_component,
    project_onto_basis,
    right_nested,
    series_exp,
    series_log,
    series_mul,
    swap_letters,
    witt_dimension,
    word_at,
    word_index,
    words_of_degree,
)

words = st.text(alphabet="AB", max_size=7)


def random_series(rng, max_degree=7, constant=0.0, scale=0.3):
    c = rng.normal(scale=scale, size=n_slots(max_degree)) + 1j * rng.normal(scale=scale, size=n_slots(max_degree))
    c[0] = constant
    return TruncatedSeries(c, max_degree)


def test_slot_count():
    assert n_slots(7) == 255
    assert len(TruncatedSeries().coeffs) == 255
    assert offset(3) == 7


@given(words)
def test_word_index_round_trip(w):
    assert word_at(word_index(w)) == w


def test_word_layout():
    assert word_index("") == 0
    assert word_index("A") == 1 and word_index("B") == 2
    assert word_index("AB") == 4
    assert words_of_degree(2) == ["AA", "AB", "BA", "BB"]
    with pytest.raises(DomainError):
        word_index("AC")


def test_product_truncates():
    s = TruncatedSeries.word("AAAA")
    t = TruncatedSeries.word("BBBB")
    assert not np.any((s * t).coeffs)
    u = TruncatedSeries.word("AAA") * TruncatedSeries.word("BBBB")
    assert u["AAABBBB"] == 1.0


def test_mismatched_degrees():
    with pytest.raises(ConfigurationError):
        TruncatedSeries(max_degree=5) + TruncatedSeries(max_degree=7)
    with pytest.raises(ConfigurationError):
        TruncatedSeries(np.zeros(10))


def test_product_matches_dict_convolution(rng):
    u = random_series(rng, 5, constant=0.7)
    v = random_series(rng, 5, constant=-0.2)
    expected = {}
    for w1, c1 in u.to_dict().items():
        for w2, c2 in v.to_dict().items():
            if len(w1 + w2) <= 5:
                expected[w1 + w2] = expected.get(w1 + w2, 0) + c1 * c2
    got = series_mul(u, v)
    for w, c in expected.items():
        assert got[w] == pytest.approx(c, abs=1e-13)


def test_associativity(rng):
    u, v, w = (random_series(rng, 6, constant=1.0) for _ in range(3))
    assert ((u * v) * w).allclose(u * (v * w), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_exp_log_round_trip(seed):
    rng = np.random.default_rng(seed)
    x = random_series(rng)
    assert series_log(series_exp(x)).allclose(x, atol=1e-13)
    s = series_exp(x)
    assert series_exp(series_log(s)).allclose(s, atol=1e-13)


def test_exp_generator_matches_series_exp():
    assert exp_generator("B", 0.3).allclose(series_exp(generator("B", 0.3)), atol=1e-16)


def test_exp_log_domain():
    with pytest.raises(DomainError):
        series_exp(TruncatedSeries.one())
    with pytest.raises(DomainError):
        series_log(TruncatedSeries.zero())


def test_bch_second_and_third_degree():
    L = series_log(series_mul(exp_generator("A", 1.0), exp_generator("B", 1.0)))
    A, B = generator("A"), generator("B")
    AB = commutator(A, B)
    assert (L.component(2) == pytest.approx((0.5 * AB).component(2)))
    third = (commutator(A, AB) - commutator(B, AB)) / 12
    assert np.allclose(L.component(3), third.component(3), atol=1e-15)


def test_bch_against_matrix_logarithm():
    rng = np.random.default_rng(7)
    n = 4
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, n))
    A -= A.T
    B -= B.T
    h = 0.04
    factors = [("A", 0.3), ("B", 0.7), ("A", -0.2), ("B", 0.3), ("A", 0.9)]
    L = series_log(product_of_exponentials([(l, h * t) for l, t in factors]))
    U = np.eye(n, dtype=complex)
    for l, t in factors:
        U = U @ scipy.linalg.expm(h * t * (A if l == "A" else B))
    ref = scipy.linalg.logm(U)
    approx = oracles.evaluate_words(L.to_dict(), A, B)
    # the truncation error is O(h^8)
    assert np.max(np.abs(approx - ref)) < 1e-10


def test_lyndon_words():
    assert lyndon_words(3) == ["AAB", "ABB"]
    assert [len(lyndon_words(d)) for d in range(1, 8)] == [2, 1, 2, 3, 6, 9, 18]


@pytest.mark.parametrize("d,dim", [(1, 2), (2, 1), (3, 2), (4, 3), (5, 6), (6, 9), (7, 18)])
def test_witt_dimension(d, dim):
    assert witt_dimension(d) == dim


def test_basis_sizes_and_ids():
    sizes = {d: build_commutator_basis(d).size for d in (1, 3, 5, 7)}
    assert sizes == {1: 2, 3: 2, 5: 6, 7: 18}
    assert build_commutator_basis(3).elements == ("AAB", "BBA")
    assert build_commutator_basis(5).elements == ("AAAAB", "AABAB", "BAAAB", "ABBBA", "BBABA", "BBBBA")
    assert build_commutator_basis(3).label(0) == "[A,[A,B]]"


@pytest.mark.parametrize("d", [3, 5, 7])
def test_basis_swap_symmetry(d):
    w = basis_words(d)
    assert tuple(swap_letters(x) for x in reversed(w)) == w


def test_basis_only_for_odd_degrees():
    with pytest.raises(DomainError):
        basis_words(4)


@pytest.mark.parametrize("d", [3, 5, 7])
def test_projection_recovers_coefficients(d, rng):
    basis = build_commutator_basis(d)
    coef = rng.normal(size=basis.size)
    got, res = project_component(basis.expand(coef), d)
    assert np.allclose(got, coef, atol=1e-12)
    assert res < 1e-12


def test_non_lie_component_rejected():
    s = TruncatedSeries.word("AAB") + TruncatedSeries.word("BBA")
    with pytest.raises(NonLieComponentError):
        project_onto_basis(s, 3)
    _, res = project_onto_basis(s, 3, check=False)
    assert res > 0.1


def test_right_nested_expansion():
    e = right_nested("AB")
    assert e.to_dict() == {"AB": 1, "BA": -1}
    with pytest.raises(DomainError):
        right_nested("")


def test_log_of_symmetric_product_has_no_even_part():
    L = series_log(product_of_exponentials([("A", 0.2), ("B", 0.5), ("A", 0.6), ("B", 0.5), ("A", 0.2)]))
    for d in (2, 4, 6):
        assert np.max(np.abs(L.component(d))) < 1e-15
