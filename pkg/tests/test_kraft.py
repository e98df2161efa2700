import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kraftlab.corpus import random_prefix_encoder
from kraftlab.dyadic import DyadicMatrix, matrix_power
from kraftlab.encoder import Encoder, check_il
from kraftlab.kraft import (
    block_kraft_consistency,
    collatz_wielandt,
    gelfand_radius,
    gki_check,
    kraft_matrix,
    min_state_kraft_sum,
    perron_vectors,
    prefix_repair_lengths,
    spectral_radius,
    irreducible_entry_bound,
    zl_baseline,
    zl_checks,
)

F = Fraction
THREE_STATE_K = [[0, 1, F(1, 4)], [F(3, 4), 0, 0], [1, 0, 0]]


def eig_radius(M):
    return float(max(abs(np.linalg.eigvals(np.asarray(M, dtype=float)))))


def random_encoder(seed, irreducible=False):
    rng = random.Random(seed)
    return random_prefix_encoder(rng, rng.randint(1, 4), rng.randint(1, 3), irreducible=irreducible)


def test_three_state_matrix(three_state):
    assert kraft_matrix(three_state) == THREE_STATE_K


def test_scalar_case():
    e = Encoder([["0", "10", "11"]], [[0, 0, 0]])
    assert kraft_matrix(e) == [[1]]


def test_empty_sum_is_zero():
    e = Encoder([["0", "1"], ["0", "1"]], [[0, 0], [0, 0]])
    assert kraft_matrix(e)[0, 1] == 0


def test_three_state_powers(three_state):
    K = kraft_matrix(three_state)
    K100 = [[1, 0, 0], [0, F(3, 4), F(3, 16)], [0, 1, F(1, 4)]]
    assert matrix_power(K, 100) == K100
    assert matrix_power(K, 2) == K100


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_row_sums_are_single_symbol_kraft_sums(seed):
    e = random_encoder(seed)
    rows = kraft_matrix(e).row_sums()
    for z in range(e.s):
        assert rows[z] == sum(F(1, 2 ** len(y)) for y in e.out[z])


@pytest.mark.parametrize("ell", [1, 2, 3, 4])
def test_block_consistency_three_state(three_state, ell):
    assert block_kraft_consistency(three_state, ell)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6))
def test_block_consistency_random(seed, ell):
    rng = random.Random(seed)
    e = random_prefix_encoder(rng, rng.randint(1, 4), 2)
    assert block_kraft_consistency(e, ell)


def test_spectral_examples(three_state):
    assert spectral_radius(kraft_matrix(three_state)).rho == pytest.approx(1.0, abs=1e-9)
    assert spectral_radius([[1.0]]).rho == 1.0
    eps = 0.1
    A = np.array([[eps, 1 / eps], [0, eps]])
    B = np.array([[eps, 0], [1 / eps, eps]])
    closed = eps**2 + 1 / (2 * eps**2) + math.sqrt(1 + 1 / (4 * eps**4))
    assert spectral_radius(A @ B).rho == pytest.approx(closed, rel=1e-9)


def test_spectral_rejects_bad_input():
    with pytest.raises(ValueError):
        spectral_radius([[1.0, -1.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        spectral_radius([[1.0, 0.0]])


def test_gelfand_on_reducible():
    assert gelfand_radius(np.array([[1.0, 0.0], [0.0, 0.5]])).rho == pytest.approx(1.0, rel=1e-12)
    assert gelfand_radius(np.array([[0.0, 1.0], [0.0, 0.0]])).rho == 0.0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_spectral_radius_matches_eigvals(seed):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(1, 6))
    M = rng.random((s, s)) * (rng.random((s, s)) < 0.6)
    assert spectral_radius(M).rho == pytest.approx(eig_radius(M), rel=1e-8, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8))
def test_spectral_radius_of_powers(seed, ell):
    e = random_encoder(seed, irreducible=True)
    K = kraft_matrix(e)
    r = spectral_radius(K).rho
    assert spectral_radius(matrix_power(K, ell)).rho == pytest.approx(r**ell, rel=1e-6, abs=1e-12)


def test_perron_vectors_three_state(three_state):
    K = kraft_matrix(three_state)
    u, v = perron_vectors(K)
    M = K.to_float()
    assert np.all(u > 0) and np.all(v > 0)
    assert np.allclose(M @ v, v, atol=1e-8) and np.allclose(u @ M, u, atol=1e-8)
    # (K - I) v = 0 solved directly: v proportional to (4, 3, 4)
    assert np.allclose(v, np.array([4, 3, 4]) / 11, atol=1e-8)


def test_perron_trivial_and_symmetric():
    u, v = perron_vectors([[1.0]])
    assert list(u) == [1.0] and list(v) == [1.0]
    S = np.array([[0.2, 0.5, 0.0], [0.5, 0.1, 0.25], [0.0, 0.25, 0.3]])
    u, v = perron_vectors(S)
    assert np.allclose(u, v, atol=1e-10)


def test_perron_requires_irreducible():
    with pytest.raises(ValueError):
        perron_vectors([[1.0, 1.0], [0.0, 1.0]])


def test_collatz_wielandt_examples(three_state):
    K = kraft_matrix(three_state)
    _, v = perron_vectors(K)
    assert collatz_wielandt(K, v, "lower") == pytest.approx(1.0, abs=1e-8)
    assert collatz_wielandt(K, v, "upper") == pytest.approx(1.0, abs=1e-8)
    assert collatz_wielandt(K, [1, 1, 1], "lower") == 0.75
    assert collatz_wielandt([[1.0]], [1.0], "upper") == 1.0
    with pytest.raises(ValueError):
        collatz_wielandt(K, [0, 0, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.floats(0.01, 10), min_size=4, max_size=4))
def test_collatz_wielandt_brackets(seed, w):
    e = random_encoder(seed)
    K = kraft_matrix(e)
    w = w[: e.s]
    r = eig_radius(K.to_float())
    assert collatz_wielandt(K, w, "lower") <= r + 1e-9
    assert collatz_wielandt(K, w, "upper") >= r - 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_rho_is_monotone(seed_a, seed_b):
    rng = np.random.default_rng(seed_a)
    s = int(rng.integers(1, 5))
    M = rng.random((s, s)) * (rng.random((s, s)) < 0.5)
    M2 = M + np.random.default_rng(seed_b).random((s, s))
    assert spectral_radius(M).rho <= spectral_radius(M2).rho + 1e-9


def test_gki_three_state(three_state):
    rep = gki_check(three_state, [1, 10, 64])
    assert rep.all_hold
    first = next(c for c in rep.checks if c.name.startswith("min_z Kraft sum of K^1 "))
    assert first.witness == "O" and first.lhs == F(3, 4)
    assert irreducible_entry_bound(three_state) == 16
    for n in range(65):
        assert matrix_power(kraft_matrix(three_state), n).max_entry()[0] <= 1


def test_gki_scalar_reduces_to_kraft_sum():
    rep = gki_check(Encoder([["0", "10", "11"]], [[0, 0, 0]]), [1])
    assert rep.all_hold and rep.info["rho"] == 1.0


def test_gki_flags_lossy_encoder():
    rep = gki_check(Encoder([["", ""]], [[0, 0]]), [1])
    assert not rep.all_hold
    assert rep.failures[0].name == "rho(K) <= 1"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_entry_cap_and_linear_growth_on_verified_encoders(seed):
    e = random_encoder(seed, irreducible=True)
    N = 4
    assert check_il(e, N).is_il_up_to_depth
    K = kraft_matrix(e)
    cap = irreducible_entry_bound(e)
    P = DyadicMatrix.identity(e.s)
    for n in range(1, 4 * N + 1):
        P = P @ K
        assert P.max_entry()[0] <= cap
        assert max(P.row_sums(), key=lambda d: d.to_fraction()) <= e.s * (1 + n * e.l_max)


def test_zl_baseline_values():
    assert zl_baseline(1, 2, 1) == pytest.approx(1 + math.log2(3))
    assert zl_baseline(3, 2, 2) == pytest.approx(9 * (1 + math.log2(1 + 4 / 9)))
    assert zl_baseline(3, 2, 2) == pytest.approx(13.77, abs=0.01)
    assert zl_baseline(1, 2, 10) == pytest.approx(11.0, abs=0.01)


def test_min_state_sum_by_brute_force(three_state):
    import itertools

    for ell in range(1, 5):
        expected = sum(
            F(1, 2 ** min(len(three_state.run(z, w)[0]) for z in range(3))) for w in itertools.product((0, 1), repeat=ell)
        )
        assert min_state_kraft_sum(three_state, ell) == expected
    assert all(c.holds for c in zl_checks(three_state, range(1, 5)))


def test_prefix_repair_three_state(three_state):
    r = prefix_repair_lengths(three_state, 0, 2)
    assert r.is_prefix_feasible
    assert r.pad_bits == math.ceil(math.log2(3 * 5)) and r.header_bits == 2


def test_prefix_repair_single_state():
    e = Encoder([["0", "10", "11"]], [[0, 0, 0]])
    r = prefix_repair_lengths(e, 0, 1)
    assert r.header_bits == 0 and r.pad_bits == math.ceil(math.log2(3))
    assert r.lengths[(1,)] == 2 + r.pad_bits
    assert r.is_prefix_feasible


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_prefix_repair_random(seed):
    e = random_encoder(seed, irreducible=True)
    assert prefix_repair_lengths(e, 0, 3).is_prefix_feasible
