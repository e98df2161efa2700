import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kraftlab.corpus import random_prefix_encoder, random_sequence
from kraftlab.converse import (
    LossFunction,
    PredictorSpec,
    best_lz_bound,
    best_stochastic_bound,
    delta_function,
    empirical_cond_entropy,
    empirical_joint,
    heuristic_epsilon,
    individual_rate_bound,
    lz78_parse,
    lz_rate_bound,
    parse_predictor,
    partition_function,
    prediction_lower_bound,
    predictive_code_length,
    read_sequence,
    run_predictor,
    sequence_distribution,
    stochastic_rate_bound,
)
from kraftlab.encoder import Encoder, EncoderFormatError

from oracles import binary_entropy, grid_delta

ONE_STATE = Encoder([["0", "1"]], [[0, 0]])


# -- empirical distributions -------------------------------------------------


def test_point_mass():
    P = empirical_joint(ONE_STATE, 0, [0] * 10, 2)
    assert P.weights() == {(0, (0, 0)): 1}
    assert empirical_cond_entropy(P) == 0.0


def test_alternating_is_uniform():
    P = empirical_joint(ONE_STATE, 0, [0, 1] * 5, 1)
    assert P.weights() == {(0, (0,)): Fraction(1, 2), (0, (1,)): Fraction(1, 2)}
    assert empirical_cond_entropy(P) == 1.0


def test_three_state_state_masses(three_state):
    P = empirical_joint(three_state, 0, (0, 0, 1, 1), 1)
    states = P.state_counts()
    assert {z: Fraction(c, P.n) for z, c in states.items()} == {0: Fraction(1, 2), 1: Fraction(1, 4), 2: Fraction(1, 4)}


def test_reducible_encoder_rejected():
    e = Encoder([["0", "1"], ["0", "1"]], [[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        empirical_joint(e, 0, [0, 1], 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_shift_invariance_and_mass(seed, ell):
    rng = random.Random(seed)
    e = random_prefix_encoder(rng, rng.randint(1, 4), 2, irreducible=True)
    x = random_sequence(rng, 2, rng.randint(ell + 1, 60))
    P = empirical_joint(e, 0, x, ell)
    assert P.total() == 1
    assert P.is_shift_invariant()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=8, max_size=80))
def test_conditional_entropy_non_increasing(x):
    hs = [empirical_cond_entropy(sequence_distribution(x, ell)) for ell in range(1, 6)]
    assert all(b <= a + 1e-12 for a, b in zip(hs, hs[1:]))


def test_bernoulli_entropy():
    rng = random.Random(1)
    x = random_sequence(rng, 2, 100_000, bias=0.2)
    h = empirical_cond_entropy(sequence_distribution(x, 1))
    assert abs(h - binary_entropy(0.2)) < 0.02


# -- rate bounds -------------------------------------------------------------


def test_stochastic_bound_values():
    assert stochastic_rate_bound(0.7, 1, 5, 3) == 0.7
    assert stochastic_rate_bound(1.0, 3, 2, 10) == pytest.approx(1 - (2 * math.log2(3) + 4) / 10)
    assert stochastic_rate_bound(1.0, 3, 2, 10) == pytest.approx(0.283, abs=1e-3)
    vals = [stochastic_rate_bound(1.0, 3, 2, ell) for ell in (1, 10, 100, 10_000)]
    assert vals == sorted(vals) and vals[-1] == pytest.approx(1.0, abs=1e-3)
    assert best_stochastic_bound({1: 1.0, 10: 0.9}, 3, 2) == (pytest.approx(0.9 - 0.717, abs=1e-3), 10)


def test_individual_bound_three_state(three_state):
    b = individual_rate_bound(three_state, 0, (0, 0) * 500)
    assert b.lhs == 0.5 and b.rhs <= 0.5 and b.holds


def test_individual_bound_single_state():
    rng = random.Random(4)
    x = random_sequence(rng, 2, 400)
    b = individual_rate_bound(ONE_STATE, 0, x, [1, 2])
    assert b.correction == 0
    assert b.rhs == pytest.approx(max(b.entropies.values()), abs=1e-12) or b.rhs == max(b.entropies.values())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_individual_bound_holds(seed):
    rng = random.Random(seed)
    e = random_prefix_encoder(rng, rng.randint(1, 4), rng.randint(2, 3), irreducible=True)
    x = random_sequence(rng, e.alpha, rng.randint(2, 200))
    assert individual_rate_bound(e, rng.randrange(e.s), x).holds


# -- LZ78 --------------------------------------------------------------------


def test_lz78_textbook_parse():
    p = lz78_parse([0, 1, 0, 0, 0, 1])
    assert p.phrases == ((0,), (1,), (0, 0), (0, 1)) and p.c == 4
    assert lz78_parse([]).c == 0


def test_lz78_constant_sequence():
    n = 10_000
    c = lz78_parse([0] * n).c
    assert c * (c + 1) // 2 <= n < (c + 1) * (c + 2) // 2 + c
    assert c * math.log2(c) / n == pytest.approx(0.10, abs=0.005)


@settings(max_examples=100)
@given(st.lists(st.integers(0, 3), max_size=200))
def test_lz78_round_trip(x):
    p = lz78_parse(x)
    assert p.joined() == tuple(x)
    assert len(set(p.phrases[:-1])) == len(p.phrases[:-1])


def test_lz_bound_values():
    assert lz_rate_bound(0, 100, 4, 3, 2, 0.1) == pytest.approx(-(0.1 + (2 * math.log2(3) + 4) / 4) - 4 / 100)
    assert lz_rate_bound(50, 1000, 10**9, 1, 0, 0.0) == pytest.approx(50 * math.log2(50) / 1000)
    value, ell = best_lz_bound(50, 1000, [1, 5, 50], 3, 2)
    assert ell == 50 and value == lz_rate_bound(50, 1000, 50, 3, 2, heuristic_epsilon(1000))


# -- prediction --------------------------------------------------------------


def test_partition_function_values():
    L = LossFunction.hamming(2)
    assert partition_function(L, 1.0) == pytest.approx(1 + math.exp(-1))
    assert partition_function(L, 1e-3) == pytest.approx(1.0)
    assert partition_function(L, 1e9) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        partition_function(L, 0.0)


def test_delta_at_zero():
    assert delta_function(LossFunction.hamming(2), 0.0) == 0.0
    assert delta_function(LossFunction((0.0, 2.0, 0.5)), 0.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=1, max_size=3), st.floats(0.0, 0.9))
def test_delta_matches_grid(tail, frac):
    loss = LossFunction((0.0, *tail))
    rate = frac * math.log2(loss.alpha)
    assert delta_function(loss, rate) == pytest.approx(grid_delta(loss.values, rate), abs=1e-4)


def test_delta_is_monotone_and_convex():
    loss = LossFunction((0.0, 1.0, 0.3))
    rates = np.linspace(0, 0.95 * math.log2(3), 25)
    vals = [delta_function(loss, r) for r in rates]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    second = np.diff(vals, 2)
    assert np.all(second >= -1e-7)


def test_delta_binary_hamming_approaches_half():
    assert delta_function(LossFunction.hamming(2), 1.0) == pytest.approx(0.5, abs=1e-5)


def repeat_last():
    return PredictorSpec([[0], [1]], [[0], [0]])


def test_predictor_examples():
    L = LossFunction.hamming(2)
    x = [0, 1] * 50
    flip = PredictorSpec([[1], [0]], [[0], [0]], initial_prediction=0)
    assert run_predictor(flip, L, x) == 0.0
    const = PredictorSpec([[0], [0]], [[0], [0]])
    assert run_predictor(const, L, [0] * 30) == 0.0
    rng = random.Random(2)
    assert run_predictor(repeat_last(), L, random_sequence(rng, 2, 100_000)) == pytest.approx(0.5, abs=0.01)


def test_parse_predictor(data_dir):
    p = parse_predictor((data_dir / "repeat_predictor.json").read_text())
    assert (p.predict, p.next, p.initial_prediction) == (repeat_last().predict, repeat_last().next, 0)
    with pytest.raises(EncoderFormatError):
        parse_predictor({"alphabet": ["0"], "states": ["p"], "initial": "p", "transitions": []})


def test_prediction_bound_examples():
    L = LossFunction.hamming(2)
    assert prediction_lower_bound(1, 1, 4, 100, 0.2, 3, 2, L) == 0.0
    expected = delta_function(L, 0.9 - 2 / 1000 - 1.0 / 50)
    assert prediction_lower_bound(1, 50, 10**9, 1000, 0.9, 2, 1, L) == pytest.approx(expected, abs=1e-6)
    assert prediction_lower_bound(1, 1, 8, 10**6, 1.0, 1, 2, L) == 0.0
    # long windows and blocks leave only the 1/k term
    got = prediction_lower_bound(1, 40, 2**80, 10**12, 1.0, 1, 2, L)
    assert got == pytest.approx(delta_function(L, 1.0 - 1 / 40), abs=1e-6)


def test_code_length_perfect_predictor():
    L = LossFunction.hamming(2)
    flip = PredictorSpec([[1], [0]], [[0], [0]])
    x = [0, 1] * 20
    cl = predictive_code_length(flip, L, 0.05, 4, x)
    per = math.log2(partition_function(L, 0.05))
    assert cl.loss_sum == 0
    assert cl.bits == len(x) // 4 * math.ceil(4 * per)
    assert cl.holds


def test_code_length_single_block():
    L = LossFunction.hamming(2)
    x = [0, 1, 1, 0, 1]
    cl = predictive_code_length(repeat_last(), L, 0.7, 5, x)
    assert len(cl.block_bits) == 1 and cl.bits == cl.block_bits[0]
    with pytest.raises(ValueError):
        predictive_code_length(repeat_last(), L, 0.7, 2, x)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 5.0), st.integers(1, 6), st.sampled_from(["natural", "binary"]))
def test_code_length_bound(seed, theta, k, regime):
    rng = random.Random(seed)
    x = random_sequence(rng, 3, k * rng.randint(1, 20))
    loss = LossFunction((0.0, rng.random(), rng.random() * 2))
    p = PredictorSpec([[rng.randrange(3) for _ in range(2)] for _ in range(3)], [[rng.randrange(2) for _ in range(2)] for _ in range(3)])
    cl = predictive_code_length(p, loss, theta, k, x, regime)
    assert cl.holds
    # each block ceiling adds less than one bit
    assert cl.bits >= cl.upper_bound - len(x) / k - 1e-9


def test_read_sequence(tmp_path):
    (tmp_path / "a.json").write_text("[0, 1, 2]")
    (tmp_path / "b.bin").write_bytes(bytes([0, 1, 1, 3]))
    assert read_sequence(tmp_path / "a.json") == [0, 1, 2]
    assert read_sequence(tmp_path / "b.bin") == [0, 1, 1, 3]
    (tmp_path / "c.json").write_text("[0, -1]")
    with pytest.raises(EncoderFormatError):
        read_sequence(tmp_path / "c.json")
