"""Lossy coding: distortion balls, lossy Kraft matrices and the Phi(D) bound.

A quantizer maps source blocks x^ell to reproduction blocks within distortion
ell*D, and an ordinary encoder then codes reproduction blocks as single
super-symbols.  The Kraft matrix of the whole pipeline is dominated entrywise
by B_ell times the reproduction-level Kraft matrix, and B_ell is at most
2^(ell*Phi(D)).

The distortion constraint inside Phi is read as an expectation, E d <= D.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ._budget import BudgetExceeded, enumeration_budget
from .dyadic import DyadicMatrix
from .encoder import Encoder, EncoderFormatError, _load_document, _require
from .kraft import kraft_matrix, spectral_radius
from .report import Check, Report, compare

DIST_TOL = 1e-9


@dataclass(frozen=True)
class Distortion:
    """Per-letter distortion table d[x][x_hat], extended additively to blocks."""

    table: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        t = tuple(tuple(float(v) for v in row) for row in self.table)
        if not t or not t[0] or any(len(r) != len(t[0]) for r in t):
            raise ValueError("distortion table must be a non-empty rectangle")
        if any(v < 0 or not math.isfinite(v) for r in t for v in r):
            raise ValueError("distortions must be finite and non-negative")
        object.__setattr__(self, "table", t)

    @property
    def alpha(self) -> int:
        return len(self.table)

    @property
    def alpha_hat(self) -> int:
        return len(self.table[0])

    def __call__(self, x: Sequence[int], x_hat: Sequence[int]) -> float:
        return sum(self.table[a][b] for a, b in zip(x, x_hat))

    @classmethod
    def hamming(cls, alpha: int) -> "Distortion":
        return cls(tuple(tuple(float(i != j) for j in range(alpha)) for i in range(alpha)))

    @property
    def min_value(self) -> float:
        return min(v for r in self.table for v in r)

    @property
    def max_value(self) -> float:
        return max(v for r in self.table for v in r)


def parse_distortion(spec, alpha: int | None = None) -> Distortion:
    """``"hamming"`` (needs ``alpha``) or a JSON matrix."""
    if spec == "hamming":
        if alpha is None:
            raise EncoderFormatError("hamming distortion needs an alphabet size")
        return Distortion.hamming(alpha)
    try:
        return Distortion(spec)
    except (TypeError, ValueError) as exc:
        raise EncoderFormatError(f"bad distortion table: {exc}") from None


def _word(v) -> tuple[int, ...]:
    if isinstance(v, str):
        return tuple(int(c) for c in v)
    return tuple(int(c) for c in v)


def _words(alpha: int, ell: int):
    return itertools.product(range(alpha), repeat=ell)


def word_index(word: Sequence[int], alpha: int) -> int:
    idx = 0
    for a in word:
        idx = idx * alpha + a
    return idx


@dataclass(frozen=True)
class Quantizer:
    ell: int
    mapping: Mapping[tuple[int, ...], tuple[int, ...]]
    D: float
    distortion: Distortion

    def __post_init__(self):
        d = self.distortion
        if self.ell < 1:
            raise ValueError("block length must be >= 1")
        expected = d.alpha**self.ell
        if len(self.mapping) != expected:
            raise ValueError(f"quantizer defines {len(self.mapping)} of {expected} source blocks")
        limit = self.ell * self.D + DIST_TOL
        for x, xh in self.mapping.items():
            if len(x) != self.ell or len(xh) != self.ell or any(not 0 <= b < d.alpha_hat for b in xh):
                raise ValueError(f"block {x} -> {xh} has the wrong shape")
            if d(x, xh) > limit:
                raise ValueError(f"block {x} -> {xh} exceeds distortion ell*D = {self.ell * self.D:g}")

    def __call__(self, x: Sequence[int]) -> tuple[int, ...]:
        return self.mapping[tuple(x)]

    def max_distortion(self) -> float:
        return max(self.distortion(x, xh) for x, xh in self.mapping.items())

    @classmethod
    def nearest(cls, ell: int, codebook: Sequence[Sequence[int]], D: float, distortion: Distortion) -> "Quantizer":
        """Map each block to its nearest codeword; ties go to the earliest one."""
        book = [_word(c) for c in codebook]
        if not book:
            raise ValueError("empty codebook")
        mapping = {x: min(book, key=lambda c: distortion(x, c)) for x in _words(distortion.alpha, ell)}
        return cls(ell, mapping, D, distortion)

    @classmethod
    def identity(cls, ell: int, alpha: int) -> "Quantizer":
        return cls(ell, {x: x for x in _words(alpha, ell)}, 0.0, Distortion.hamming(alpha))


def parse_quantizer(document, D: float | None = None) -> Quantizer:
    """JSON with ``ell``, ``alphabet_size``, ``distortion`` and either ``map`` or ``codebook``.

    Blocks are digit strings ("010") or integer arrays.  ``D`` overrides the
    document's own ``"D"``.
    """
    doc = _load_document(document)
    ell = _require(doc, "ell", int)
    alpha = _require(doc, "alphabet_size", int)
    dist = parse_distortion(doc.get("distortion", "hamming"), alpha)
    if dist.alpha != alpha:
        raise EncoderFormatError("distortion table does not match alphabet_size")
    level = D if D is not None else doc.get("D")
    if level is None:
        raise EncoderFormatError("distortion level D missing (document or --D)")
    try:
        if "codebook" in doc:
            return Quantizer.nearest(ell, doc["codebook"], float(level), dist)
        raw = _require(doc, "map", (dict, list))
        pairs = raw.items() if isinstance(raw, dict) else raw
        mapping = {_word(k): _word(v) for k, v in pairs}
        return Quantizer(ell, mapping, float(level), dist)
    except ValueError as exc:
        raise EncoderFormatError(str(exc)) from None


def ball_size(d: Distortion, x_hat: Sequence[int], D: float, method: str = "auto", budget: int | None = None) -> int:
    """|{x^ell : d(x^ell, x_hat) <= ell*D}|, by enumeration or by counting distortion sums."""
    ell = len(x_hat)
    if method == "auto":
        method = "dp"
    if method == "enumerate":
        if d.alpha**ell > enumeration_budget(budget):
            raise BudgetExceeded(f"{d.alpha}^{ell} words exceed the enumeration budget")
        limit = ell * D + DIST_TOL
        return sum(1 for x in _words(d.alpha, ell) if d(x, x_hat) <= limit)
    if method != "dp":
        raise ValueError("method must be 'auto', 'enumerate' or 'dp'")
    limit = Fraction(ell * D) + Fraction(DIST_TOL)
    sums: Counter = Counter({Fraction(0): 1})
    for b in x_hat:
        steps = Counter(Fraction(d.table[a][b]) for a in range(d.alpha))
        nxt: Counter = Counter()
        for acc, n in sums.items():
            for v, m in steps.items():
                t = acc + v
                if t <= limit:
                    nxt[t] += n * m
        sums = nxt
    return sum(sums.values())


def b_ell(d: Distortion, ell: int, D: float) -> tuple[int, tuple[int, ...]]:
    """Largest ball over reproduction words, with a maximising word.

    Additive distortion makes the ball size depend only on the multiset of
    reproduction letters, so only sorted words are examined.
    """
    best, arg = -1, ()
    for word in itertools.combinations_with_replacement(range(d.alpha_hat), ell):
        size = ball_size(d, word, D, "dp")
        if size > best:
            best, arg = size, word
    return best, arg


def _coder_index(e: Encoder, ell: int, alpha_hat: int) -> dict[tuple[int, ...], int]:
    """Super-symbol id of each reproduction block, by name when names spell the block."""
    if e.alpha != alpha_hat**ell:
        raise ValueError(f"coder alphabet has {e.alpha} symbols, expected {alpha_hat}^{ell}")
    names = e.symbol_names
    if all(len(n) == ell and n.isdigit() for n in names) and len(set(names)) == len(names):
        by_name = {_word(n): i for i, n in enumerate(names)}
        if all(max(w) < alpha_hat for w in by_name):
            return by_name
    return {w: word_index(w, alpha_hat) for w in _words(alpha_hat, ell)}


@dataclass(frozen=True)
class LossyKraft:
    K: DyadicMatrix
    K_hat: DyadicMatrix
    B: int
    dominated: bool  # K <= B * K_hat entrywise, exactly


def lossy_kraft_matrix(q: Quantizer, e: Encoder, budget: int | None = None) -> LossyKraft:
    d = q.distortion
    if d.alpha**q.ell > enumeration_budget(budget):
        raise BudgetExceeded("source blocks exceed the enumeration budget")
    index = _coder_index(e, q.ell, d.alpha_hat)
    preimages = Counter(index[q(x)] for x in _words(d.alpha, q.ell))
    lm = e.l_max
    nums = [[0] * e.s for _ in range(e.s)]
    for z in range(e.s):
        for sym, count in preimages.items():
            nums[z][e.next[z][sym]] += count << (lm - len(e.out[z][sym]))
    K = DyadicMatrix(nums, lm)
    K_hat = kraft_matrix(e)
    B, _ = b_ell(d, q.ell, q.D)
    return LossyKraft(K, K_hat, B, K <= K_hat.scale(B))


def golden_min(f, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


LAMBDA_MAX = 1e6


def phi_of_D(d: Distortion, D: float) -> float:
    """max H(X | X_hat) in bits over joint laws with E d(X, X_hat) <= D.

    Solved through its dual: min over lambda >= 0 of
    lambda*D + max_{x_hat} log2 sum_x 2^(-lambda d(x, x_hat)), a convex
    function of lambda, minimised by golden section on log(1 + lambda).
    """
    if D < d.min_value - DIST_TOL:
        raise ValueError(f"D = {D:g} is below the smallest distortion {d.min_value:g}")
    if D >= d.max_value:
        return math.log2(d.alpha)
    T = np.asarray(d.table)

    def dual(lam: float) -> float:
        a = -lam * T * math.log(2.0)
        top = a.max(axis=0)
        lse = top + np.log(np.exp(a - top).sum(axis=0))
        return lam * D + float(lse.max()) / math.log(2.0)

    f = lambda u: dual(math.expm1(u))
    _, best = golden_min(f, 0.0, math.log1p(LAMBDA_MAX))
    return max(0.0, min(best, dual(0.0), dual(LAMBDA_MAX)))


def lossy_gki_check(q: Quantizer, e: Encoder, D: float | None = None, tol: float = 1e-9) -> Report:
    """The chain rho(K_hat) <= 1, rho(K) <= B_ell, B_ell <= 2^(ell*Phi(D))."""
    D = q.D if D is None else D
    lk = lossy_kraft_matrix(q, e)
    rho_hat = spectral_radius(lk.K_hat).rho
    rho = spectral_radius(lk.K).rho
    phi = phi_of_D(q.distortion, D)
    cap = 2.0 ** (q.ell * phi)
    rep = Report(
        "lossy",
        {
            "ell": q.ell,
            "D": D,
            "B_ell": lk.B,
            "phi_D_bits": phi,
            "rho_K": rho,
            "rho_K_hat": rho_hat,
            "max_block_distortion": q.max_distortion(),
            "distortion_reading": "expected distortion E d <= D",
        },
    )
    rep.add(compare("rho(K_hat) <= 1", rho_hat, 1.0, tol=tol))
    rep.add(Check("K <= B_ell * K_hat entrywise", None, None, lk.dominated, regime="exact"))
    rep.add(compare("rho(K) <= B_ell", rho, float(lk.B), tol=tol))
    rep.add(compare("B_ell <= 2^(ell*Phi(D))", float(lk.B), cap, tol=tol))
    return rep
