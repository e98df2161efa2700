from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kraftlab._budget import BudgetExceeded
from kraftlab.dyadic import Dyadic, DyadicMatrix, matrix_power

dyadics = st.builds(Dyadic, st.integers(0, 10**6), st.integers(0, 40))


def frac_matmul(A, B):
    n = len(A)
    return [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def dyadic_matrices(size):
    return st.lists(
        st.lists(st.builds(Fraction, st.integers(0, 64), st.sampled_from([1, 2, 4, 8, 16])), min_size=size, max_size=size),
        min_size=size,
        max_size=size,
    )


def test_canonical_form():
    assert Dyadic(4, 3) == Dyadic(1, 1)
    assert (Dyadic(4, 3).mantissa, Dyadic(4, 3).exponent) == (1, 1)
    assert (Dyadic(0, 7).mantissa, Dyadic(0, 7).exponent) == (0, 0)
    assert Dyadic(6, 0).exponent == 0
    assert Dyadic.pow2(-3) == Fraction(1, 8)
    assert Dyadic.pow2(2) == 4


def test_negative_rejected():
    with pytest.raises(ValueError):
        Dyadic(-1)


def test_coerce_rejects_non_dyadic():
    assert Dyadic.coerce(0.375) == Fraction(3, 8)
    with pytest.raises(ValueError):
        Dyadic.coerce(Fraction(1, 3))


@given(dyadics, dyadics)
def test_arithmetic_matches_fractions(a, b):
    assert (a + b).to_fraction() == a.to_fraction() + b.to_fraction()
    assert (a * b).to_fraction() == a.to_fraction() * b.to_fraction()
    assert (a <= b) == (a.to_fraction() <= b.to_fraction())


@given(dyadics)
def test_json_round_trip(a):
    assert Dyadic.from_json(a.to_json()) == a


@given(dyadic_matrices(3), dyadic_matrices(3))
def test_matmul_matches_fraction_oracle(A, B):
    P = DyadicMatrix.from_entries(A) @ DyadicMatrix.from_entries(B)
    assert P.to_fractions() == frac_matmul(A, B)


@settings(max_examples=40)
@given(dyadic_matrices(3), st.integers(0, 6), st.integers(0, 6))
def test_power_is_additive_in_exponent(A, a, b):
    K = DyadicMatrix.from_entries(A)
    assert matrix_power(K, a + b) == matrix_power(K, a) @ matrix_power(K, b)


def test_power_zero_is_identity():
    K = DyadicMatrix.from_entries([[Fraction(1, 2), 1], [0, 3]])
    assert matrix_power(K, 0) == [[1, 0], [0, 1]]


def test_power_budget():
    K = DyadicMatrix.from_entries([[3, 1], [1, 3]])
    with pytest.raises(BudgetExceeded):
        matrix_power(K, 1000, max_bits=64)


def test_row_col_sums_and_max():
    K = DyadicMatrix.from_entries([[0, 1, Fraction(1, 4)], [Fraction(3, 4), 0, 0], [1, 0, 0]])
    assert K.row_sums() == [Fraction(5, 4), Fraction(3, 4), 1]
    assert K.col_sums() == [Fraction(7, 4), 1, Fraction(1, 4)]
    assert K.total() == 3
    assert K.max_entry() == (Dyadic(1), (0, 1))
    assert DyadicMatrix.from_json(K.to_json()) == K


def test_entrywise_order():
    A = DyadicMatrix.from_entries([[Fraction(1, 2), 0], [0, 1]])
    B = DyadicMatrix.from_entries([[1, 0], [Fraction(1, 8), 1]])
    assert A <= B
    assert not B <= A


def test_non_square_rejected():
    with pytest.raises(ValueError):
        DyadicMatrix([[1, 2]])
