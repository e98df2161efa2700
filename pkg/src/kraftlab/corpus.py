"""Seeded generators for random prefix codes, encoders and sequences."""

from __future__ import annotations

import random

from .encoder import Encoder
from .si import SIEncoder


def random_prefix_code(rng: random.Random, size: int, max_len: int = 6) -> list[str]:
    """``size`` distinct leaves of a random binary tree, in random order.

    Leaves are split at random until there are enough of them; surplus leaves
    are dropped, so the Kraft sum is often strictly below 1.
    """
    if size < 1 or size > 2**max_len:
        raise ValueError("cannot fit that many codewords under max_len")
    leaves = [""]
    extra = rng.randint(0, 2)
    while len(leaves) < size + extra:
        splittable = [i for i, w in enumerate(leaves) if len(w) < max_len]
        if not splittable:
            break
        w = leaves.pop(rng.choice(splittable))
        leaves += [w + "0", w + "1"]
    rng.shuffle(leaves)
    return leaves[:size]


def random_next_map(rng: random.Random, s: int, alpha: int, irreducible: bool = False) -> list[list[int]]:
    nxt = [[rng.randrange(s) for _ in range(alpha)] for _ in range(s)]
    if irreducible and s > 1:
        # thread a random Hamiltonian cycle through the states
        order = list(range(s))
        rng.shuffle(order)
        for i, z in enumerate(order):
            nxt[z][rng.randrange(alpha)] = order[(i + 1) % s]
    return nxt


def random_prefix_encoder(
    rng: random.Random, s: int, alpha: int, max_len: int = 4, irreducible: bool = False
) -> Encoder:
    """Each state applies its own prefix code, which makes the encoder lossless."""
    out = [random_prefix_code(rng, alpha, max_len) for _ in range(s)]
    return Encoder(out, random_next_map(rng, s, alpha, irreducible))


def random_prefix_si_encoder(rng: random.Random, s: int, alpha: int, beta: int, max_len: int = 4) -> SIEncoder:
    """A separate prefix code for every (state, SI symbol) pair."""
    codes = [[random_prefix_code(rng, alpha, max_len) for _ in range(beta)] for _ in range(s)]
    out = [[[codes[z][w][x] for w in range(beta)] for x in range(alpha)] for z in range(s)]
    nxt = [[[rng.randrange(s) for _ in range(beta)] for _ in range(alpha)] for _ in range(s)]
    return SIEncoder(out, nxt)


def random_sequence(rng: random.Random, alpha: int, n: int, bias: float | None = None) -> list[int]:
    """Uniform symbols, or binary with P(1) = bias when ``bias`` is given."""
    if bias is not None:
        return [int(rng.random() < bias) for _ in range(n)]
    return [rng.randrange(alpha) for _ in range(n)]
