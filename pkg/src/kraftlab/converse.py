"""Compression lower bounds for finite-state encoders.

Units: entropies, rates and code lengths are in bits; the partition function
Z(theta) and the inner logarithm of Delta use natural logarithms, and
``delta_function`` takes its rate argument in bits and converts internally.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .encoder import (
    Encoder,
    EncoderFormatError,
    _load_document,
    _name_table,
    _require,
    cyclic_extend,
    encode,
    is_irreducible,
)

LOG2E = 1.0 / math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
THETA_BRACKET = (1e-6, 1e6)


# -- empirical distributions -------------------------------------------------


@dataclass(frozen=True)
class EmpiricalDist:
    """Cyclic empirical distribution of (state, window) pairs.

    ``counts`` holds integer multiplicities over the extended sequence of
    length ``n``; weights are ``count / n``.  ``original_length`` and
    ``extension`` record how much was appended to close the state cycle.
    """

    ell: int
    n: int
    counts: Mapping[tuple[int, tuple[int, ...]], int]
    original_length: int
    extension: int = 0

    def weight(self, z: int, window: Sequence[int]) -> Fraction:
        return Fraction(self.counts.get((z, tuple(window)), 0), self.n)

    def weights(self) -> dict[tuple[int, tuple[int, ...]], Fraction]:
        return {k: Fraction(v, self.n) for k, v in self.counts.items()}

    def total(self) -> Fraction:
        return Fraction(sum(self.counts.values()), self.n)

    def window_counts(self) -> Counter:
        c: Counter = Counter()
        for (_, w), v in self.counts.items():
            c[w] += v
        return c

    def state_counts(self) -> Counter:
        c: Counter = Counter()
        for (z, _), v in self.counts.items():
            c[z] += v
        return c

    def prefix_counts(self) -> Counter:
        """Counts of the first ell-1 window coordinates."""
        c: Counter = Counter()
        for w, v in self.window_counts().items():
            c[w[:-1]] += v
        return c

    def suffix_counts(self) -> Counter:
        """Counts of the last ell-1 window coordinates."""
        c: Counter = Counter()
        for w, v in self.window_counts().items():
            c[w[1:]] += v
        return c

    def is_shift_invariant(self) -> bool:
        return self.prefix_counts() == self.suffix_counts()


def _cyclic_windows(x: Sequence[int], ell: int):
    n = len(x)
    wrapped = list(x) + list(x[: ell - 1]) if ell > 1 else list(x)
    # repeat the sequence when the window is longer than the cycle
    while len(wrapped) < n + ell - 1:
        wrapped += list(x)
    for i in range(n):
        yield tuple(wrapped[i : i + ell])


def empirical_joint(e: Encoder, z1: int, x: Sequence[int], ell: int) -> EmpiricalDist:
    """Counts of (z_i, x_i..x_{i+ell-1} mod n) over the cyclically extended input."""
    if ell < 1:
        raise ValueError("window length must be >= 1")
    if not is_irreducible(e):
        raise ValueError("empirical distributions need an irreducible encoder")
    ext, m = cyclic_extend(e, z1, x)
    n = len(ext)
    if n == 0:
        raise ValueError("empty sequence")
    if ell >= n and n > 1:
        raise ValueError(f"window length {ell} must be below the extended length {n}")
    states = encode(e, z1, ext).states[:-1]
    counts = Counter(zip(states, _cyclic_windows(ext, ell)))
    return EmpiricalDist(ell, n, dict(counts), len(x), m)


def sequence_distribution(x: Sequence[int], ell: int) -> EmpiricalDist:
    """Cyclic window distribution of a bare sequence (single-state view)."""
    if not x:
        raise ValueError("empty sequence")
    counts = Counter((0, w) for w in _cyclic_windows(x, ell))
    return EmpiricalDist(ell, len(x), dict(counts), len(x), 0)


def _entropy_bits(counts: Iterable[int], total: int) -> float:
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def empirical_cond_entropy(P: EmpiricalDist) -> float:
    """H(X_ell | X^{ell-1}) in bits with the state marginalised out."""
    h_window = _entropy_bits(P.window_counts().values(), P.n)
    if P.ell == 1:
        return h_window
    return h_window - _entropy_bits(P.prefix_counts().values(), P.n)


# -- rate bounds ---------------------------------------------------------------


def state_penalty(s: int, l_max: int) -> float:
    return 2.0 * math.log2(s) + (s - 1) * l_max


def stochastic_rate_bound(h_cond: float, s: int, l_max: int, ell: int) -> float:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return h_cond - state_penalty(s, l_max) / ell


def best_stochastic_bound(h_by_ell: Mapping[int, float], s: int, l_max: int) -> tuple[float, int]:
    """Maximise the stochastic bound over the supplied window lengths."""
    return max((stochastic_rate_bound(h, s, l_max, ell), ell) for ell, h in h_by_ell.items())


@dataclass(frozen=True)
class IndividualBound:
    lhs: float  # bits per source symbol actually spent
    rhs: float
    best_ell: int
    per_ell: dict[int, float]
    entropies: dict[int, float]
    n: int
    extended_length: int
    correction: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 1e-12


def individual_rate_bound(e: Encoder, z1: int, x: Sequence[int], ells: Iterable[int] | None = None) -> IndividualBound:
    """Compare the encoder's actual rate on ``x`` with the empirical-entropy lower bound."""
    if not x:
        raise ValueError("empty sequence")
    if not is_irreducible(e):
        raise ValueError("the individual-sequence bound needs an irreducible encoder")
    n = len(x)
    ext, _ = cyclic_extend(e, z1, x)
    ells = list(range(1, min(len(ext), 9))) if ells is None else sorted(set(ells))
    ells = [ell for ell in ells if 1 <= ell < max(len(ext), 2)]
    if not ells:
        raise ValueError("no admissible window length")
    lhs = encode(e, z1, x).total_bits / n
    entropies, per_ell = {}, {}
    for ell in ells:
        h = empirical_cond_entropy(empirical_joint(e, z1, x, ell))
        entropies[ell] = h
        per_ell[ell] = stochastic_rate_bound(h, e.s, e.l_max, ell)
    best = max(per_ell, key=lambda k: (per_ell[k], -k))
    correction = (e.s - 1) * e.l_max / n
    return IndividualBound(lhs, per_ell[best] - correction, best, per_ell, entropies, n, len(ext), correction)


# -- LZ78 ----------------------------------------------------------------------


@dataclass(frozen=True)
class LZ78Parse:
    phrases: tuple[tuple[int, ...], ...]

    @property
    def c(self) -> int:
        """Number of distinct phrases (a trailing repeat is not counted twice)."""
        return len(set(self.phrases))

    def joined(self) -> tuple[int, ...]:
        return tuple(sym for p in self.phrases for sym in p)


def lz78_parse(x: Sequence[int]) -> LZ78Parse:
    """Incremental parsing: each phrase is the shortest prefix of the rest not seen before."""
    seen: set[tuple[int, ...]] = set()
    phrases = []
    cur: list[int] = []
    for sym in x:
        cur.append(sym)
        t = tuple(cur)
        if t not in seen:
            seen.add(t)
            phrases.append(t)
            cur = []
    if cur:
        phrases.append(tuple(cur))
    return LZ78Parse(tuple(phrases))


def heuristic_epsilon(n: int) -> float:
    """log2(log2 n) / log2 n, a stand-in for the unspecified o(1) term."""
    if n < 3:
        return 0.0
    ln = math.log2(n)
    return max(0.0, math.log2(ln) / ln)


def lz_rate_bound(c: int, n: int, ell: int, s: int, l_max: int, epsilon: float) -> float:
    lead = c * math.log2(c) / n if c > 1 else 0.0
    return lead - (epsilon + state_penalty(s, l_max) / ell) - (s - 1) * l_max / n


def best_lz_bound(
    c: int,
    n: int,
    ells: Iterable[int],
    s: int,
    l_max: int,
    epsilon: Callable[[int, int], float] | None = None,
) -> tuple[float, int]:
    """Evaluate the bound at the window length minimising the penalty.

    ``epsilon(ell, n)`` defaults to ``heuristic_epsilon(n)`` for every ell.
    """
    eps = epsilon or (lambda ell, n: heuristic_epsilon(n))
    return max((lz_rate_bound(c, n, ell, s, l_max, eps(ell, n)), ell) for ell in ells)


# -- prediction ----------------------------------------------------------------


@dataclass(frozen=True)
class LossFunction:
    """Loss of a prediction error e = x - x_hat (mod alpha)."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or any(v < 0 or not math.isfinite(v) for v in vals):
            raise ValueError("losses must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    @property
    def alpha(self) -> int:
        return len(self.values)

    def __call__(self, x: int, x_hat: int) -> float:
        return self.values[(x - x_hat) % self.alpha]

    @classmethod
    def hamming(cls, alpha: int) -> "LossFunction":
        return cls((0.0,) + (1.0,) * (alpha - 1))


def log_partition(loss: LossFunction, theta: float) -> float:
    """ln Z(theta), computed stably."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    a = -np.asarray(loss.values) / theta
    top = a.max()
    return float(top + math.log(np.exp(a - top).sum()))


def partition_function(loss: LossFunction, theta: float) -> float:
    return math.exp(log_partition(loss, theta))


def _delta_objective(loss: LossFunction, r_nats: float, theta: float) -> float:
    return theta * (r_nats - log_partition(loss, theta))


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Maximise a unimodal function on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def delta_function(loss: LossFunction, rate_bits: float) -> float:
    """sup over theta > 0 of theta * (R ln 2 - ln Z(theta)), with R in bits.

    The objective is concave in theta, hence unimodal in log theta; it is
    maximised by golden section over log theta in [1e-6, 1e6], and compared
    with the theta -> 0 limit, which is 0.
    """
    if rate_bits < 0:
        raise ValueError("rate must be non-negative")
    r = rate_bits * math.log(2.0)
    if r == 0:
        return 0.0
    if r > math.log(loss.alpha) + 1e-15:
        return math.inf
    lo, hi = (math.log(t) for t in THETA_BRACKET)
    g = lambda t: _delta_objective(loss, r, math.exp(t))
    _, best = golden_max(g, lo, hi)
    return max(0.0, best, g(lo), g(hi))


@dataclass(frozen=True)
class PredictorSpec:
    """Finite-state predictor: predict[x][sigma] is the next guess, next[x][sigma] the next state."""

    predict: tuple[tuple[int, ...], ...]
    next: tuple[tuple[int, ...], ...]
    initial_state: int = 0
    initial_prediction: int = 0
    state_names: tuple[str, ...] = ()
    symbol_names: tuple[str, ...] = ()

    def __post_init__(self):
        pred = tuple(tuple(int(v) for v in row) for row in self.predict)
        nxt = tuple(tuple(int(v) for v in row) for row in self.next)
        object.__setattr__(self, "predict", pred)
        object.__setattr__(self, "next", nxt)
        alpha = len(pred)
        if alpha == 0 or len(nxt) != alpha:
            raise EncoderFormatError("predict and next must cover the alphabet")
        q = len(pred[0])
        for x in range(alpha):
            if len(pred[x]) != q or len(nxt[x]) != q:
                raise EncoderFormatError(f"symbol {x} does not define every state")
            for sig in range(q):
                if not 0 <= pred[x][sig] < alpha or not 0 <= nxt[x][sig] < q:
                    raise EncoderFormatError(f"entry ({x},{sig}) is out of range")
        if not 0 <= self.initial_state < q or not 0 <= self.initial_prediction < alpha:
            raise EncoderFormatError("initial state or prediction out of range")
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(str(i) for i in range(q)))
        if not self.symbol_names:
            object.__setattr__(self, "symbol_names", tuple(str(i) for i in range(alpha)))

    @property
    def alpha(self) -> int:
        return len(self.predict)

    @property
    def q(self) -> int:
        return len(self.predict[0])


def parse_predictor(document) -> PredictorSpec:
    """Encoder-like schema with ``"predict"`` in place of ``"output"`` and an ``"initial_prediction"``."""
    doc = _load_document(document)
    symbols = _name_table(doc, "alphabet")
    states = _name_table(doc, "states")
    sidx = {n: i for i, n in enumerate(states)}
    xidx = {n: i for i, n in enumerate(symbols)}
    initial = str(_require(doc, "initial", (str, int)))
    first = str(_require(doc, "initial_prediction", (str, int)))
    if initial not in sidx:
        raise EncoderFormatError(f"initial state {initial!r} is not declared")
    if first not in xidx:
        raise EncoderFormatError(f"initial prediction {first!r} is not a symbol")
    pred = [[None] * len(states) for _ in symbols]
    nxt = [[None] * len(states) for _ in symbols]
    for rec in _require(doc, "transitions", list):
        if not isinstance(rec, Mapping):
            raise EncoderFormatError("transition records must be objects")
        for key in ("state", "symbol", "predict", "next"):
            if key not in rec:
                raise EncoderFormatError(f"transition record missing {key!r}")
        z, x, p, t = (str(rec[k]) for k in ("state", "symbol", "predict", "next"))
        if z not in sidx or x not in xidx:
            raise EncoderFormatError(f"transition ({z},{x}) uses an undeclared name")
        if t not in sidx:
            raise EncoderFormatError(f"dangling state reference {t!r} in transition ({z},{x})")
        if p not in xidx:
            raise EncoderFormatError(f"prediction {p!r} in transition ({z},{x}) is not a symbol")
        if pred[xidx[x]][sidx[z]] is not None:
            raise EncoderFormatError(f"duplicate transition for ({z},{x})")
        pred[xidx[x]][sidx[z]] = xidx[p]
        nxt[xidx[x]][sidx[z]] = sidx[t]
    for j, x in enumerate(symbols):
        for i, z in enumerate(states):
            if pred[j][i] is None:
                raise EncoderFormatError(f"missing transition for (state={z!r}, symbol={x!r})")
    return PredictorSpec(pred, nxt, sidx[initial], xidx[first], tuple(states), tuple(symbols))


def predictions(p: PredictorSpec, x: Sequence[int]) -> list[int]:
    """x_hat_1..x_hat_n: the first guess is fixed, later ones follow the recursion."""
    out = []
    guess, sig = p.initial_prediction, p.initial_state
    for sym in x:
        if not 0 <= sym < p.alpha:
            raise ValueError(f"symbol {sym} outside alphabet of size {p.alpha}")
        out.append(guess)
        guess, sig = p.predict[sym][sig], p.next[sym][sig]
    return out


def run_predictor(p: PredictorSpec, loss: LossFunction, x: Sequence[int]) -> float:
    """Time-averaged loss of the predictor on ``x``."""
    if not x:
        return 0.0
    return sum(loss(a, b) for a, b in zip(x, predictions(p, x))) / len(x)


def block_state_factor(alpha: int, k: int) -> int:
    return k if alpha == 1 else (alpha**k - 1) // (alpha - 1)


def prediction_lower_bound(
    q: int, k: int, ell: int, n: int, h_hat: float, l_max: int, alpha: int, loss: LossFunction
) -> float:
    """Delta evaluated at the entropy bound for a q*M_k-state encoder, clamped at 0."""
    states = q * block_state_factor(alpha, k)
    arg = h_hat - state_penalty(states, l_max) / ell - l_max / n - 1.0 / k
    return delta_function(loss, max(0.0, arg))


@dataclass(frozen=True)
class CodeLength:
    bits: int
    upper_bound: float
    loss_sum: float
    block_bits: tuple[int, ...] = field(default=())

    @property
    def holds(self) -> bool:
        return self.bits <= self.upper_bound + 1e-9 * max(1.0, self.upper_bound)


def predictive_code_length(
    p: PredictorSpec,
    loss: LossFunction,
    theta: float,
    k: int,
    x: Sequence[int],
    base_regime: str = "natural",
) -> CodeLength:
    """Block-wise ceil(-log2 Q_theta) code length and its loss-based upper bound.

    With ``base_regime="natural"`` Q_theta is proportional to exp(-loss/theta)
    and the bound carries a log2(e)/theta factor; ``"binary"`` uses
    2^(-loss/theta) so the factor is 1/theta and Z is the base-2 sum.
    """
    n = len(x)
    if theta <= 0:
        raise ValueError("theta must be positive")
    if k < 1 or n % k:
        raise ValueError("block length must divide the sequence length")
    if base_regime == "natural":
        scale = LOG2E / theta
        log2_z = log_partition(loss, theta) * LOG2E
    elif base_regime == "binary":
        scale = 1.0 / theta
        log2_z = log_partition(loss, theta * LOG2E) * LOG2E
    else:
        raise ValueError("base_regime must be 'natural' or 'binary'")
    losses = [loss(a, b) for a, b in zip(x, predictions(p, x))]
    per_symbol = [scale * r + log2_z for r in losses]
    blocks = tuple(math.ceil(sum(per_symbol[i : i + k])) for i in range(0, n, k))
    total_loss = sum(losses)
    bound = scale * total_loss + n * log2_z + n / k
    return CodeLength(sum(blocks), bound, total_loss, blocks)


def max_block_bits(loss: LossFunction, theta: float, k: int, base_regime: str = "natural") -> int:
    """Longest codeword the block code can emit: every symbol at the largest loss."""
    if base_regime == "natural":
        per = max(loss.values) * LOG2E / theta + log_partition(loss, theta) * LOG2E
    else:
        per = max(loss.values) / theta + log_partition(loss, theta * LOG2E) * LOG2E
    return math.ceil(k * per)


# -- input ---------------------------------------------------------------------


def read_sequence(source) -> list[int]:
    """A JSON integer array, or raw bytes with one symbol index per byte."""
    data = Path(source).read_bytes() if not isinstance(source, (bytes, bytearray)) else bytes(source)
    stripped = data.strip()
    if stripped.startswith(b"["):
        try:
            seq = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise EncoderFormatError(f"invalid JSON sequence: {exc}") from None
        if not all(isinstance(v, int) and v >= 0 for v in seq):
            raise EncoderFormatError("sequence entries must be non-negative integers")
        return list(seq)
    return list(data)
