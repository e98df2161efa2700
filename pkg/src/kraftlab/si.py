"""Finite-state encoders with side information and their Kraft-matrix families.

With side information w known to both ends, each SI symbol has its own Kraft
matrix K(w); Kraft sums along an SI word are entries of the product
K(w_1) ... K(w_n), and their growth rate is the joint spectral radius of the
family.  The JSR is only bracketed here: lower bounds from spectral radii of
products, upper bounds from norms of products.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ._budget import BudgetExceeded, enumeration_budget
from .dyadic import DEFAULT_MAX_BITS, Dyadic, DyadicMatrix
from .encoder import (
    EncodeTrace,
    Encoder,
    EncoderFormatError,
    ILVerdict,
    _load_document,
    _name_table,
    _require,
)
from .kraft import as_float_matrix, spectral_radius

JSR_BUDGET = 2**18
SAMPLE_WORDS = 10_000
SAMPLE_MAX_LEN = 64


@dataclass(frozen=True)
class SIEncoder:
    out: tuple  # out[z][x][w] -> bit string
    next: tuple  # next[z][x][w] -> state
    initial_state: int = 0
    state_names: tuple[str, ...] = ()
    symbol_names: tuple[str, ...] = ()
    si_names: tuple[str, ...] = ()

    def __post_init__(self):
        out = tuple(tuple(tuple(c) for c in row) for row in self.out)
        nxt = tuple(tuple(tuple(int(t) for t in c) for c in row) for row in self.next)
        object.__setattr__(self, "out", tuple(tuple(tuple(c) for c in row) for row in out))
        object.__setattr__(self, "next", nxt)
        s = len(out)
        if s == 0 or len(nxt) != s:
            raise EncoderFormatError("out and next must cover the same non-empty state set")
        alpha, beta = len(out[0]), len(out[0][0]) if out[0] else 0
        if alpha == 0 or beta == 0:
            raise EncoderFormatError("source and SI alphabets must be non-empty")
        for z in range(s):
            for x in range(alpha):
                if len(out[z][x]) != beta or len(nxt[z][x]) != beta:
                    raise EncoderFormatError(f"(state {z}, symbol {x}) does not define every SI symbol")
                for w in range(beta):
                    if not 0 <= nxt[z][x][w] < s:
                        raise EncoderFormatError(f"next({z},{x},{w}) is not a valid state")
                    if set(out[z][x][w]) - {"0", "1"}:
                        raise EncoderFormatError(f"output at ({z},{x},{w}) is not binary")
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(str(z) for z in range(s)))
        if not self.symbol_names:
            object.__setattr__(self, "symbol_names", tuple(str(x) for x in range(alpha)))
        if not self.si_names:
            object.__setattr__(self, "si_names", tuple(str(w) for w in range(beta)))

    @property
    def s(self) -> int:
        return len(self.out)

    @property
    def alpha(self) -> int:
        return len(self.out[0])

    @property
    def beta(self) -> int:
        return len(self.out[0][0])

    @property
    def l_max(self) -> int:
        return max(len(c) for row in self.out for cell in row for c in cell)

    def restrict(self, w: int) -> Encoder:
        """The ordinary encoder obtained by holding the SI symbol at ``w``."""
        return Encoder(
            [[self.out[z][x][w] for x in range(self.alpha)] for z in range(self.s)],
            [[self.next[z][x][w] for x in range(self.alpha)] for z in range(self.s)],
            self.initial_state,
            self.state_names,
            self.symbol_names,
        )

    @classmethod
    def from_encoder(cls, e: Encoder) -> "SIEncoder":
        """Degenerate SI encoder with a one-letter SI alphabet."""
        return cls(
            [[[c] for c in row] for row in e.out],
            [[[t] for t in row] for row in e.next],
            e.initial_state,
            e.state_names,
            e.symbol_names,
            ("0",),
        )


def parse_si_encoder(document) -> SIEncoder:
    """Encoder schema plus ``"si_alphabet"``; every transition also names its ``"si"``."""
    doc = _load_document(document)
    symbols = _name_table(doc, "alphabet")
    states = _name_table(doc, "states")
    si = _name_table(doc, "si_alphabet")
    initial = str(_require(doc, "initial", (str, int)))
    if initial not in states:
        raise EncoderFormatError(f"initial state {initial!r} is not declared")
    sidx = {n: i for i, n in enumerate(states)}
    xidx = {n: i for i, n in enumerate(symbols)}
    widx = {n: i for i, n in enumerate(si)}
    out = [[[None] * len(si) for _ in symbols] for _ in states]
    nxt = [[[None] * len(si) for _ in symbols] for _ in states]
    for rec in _require(doc, "transitions", list):
        if not isinstance(rec, Mapping):
            raise EncoderFormatError("transition records must be objects")
        for key in ("state", "symbol", "si", "output", "next"):
            if key not in rec:
                raise EncoderFormatError(f"transition record missing {key!r}")
        z, x, w, y, t = (str(rec[k]) for k in ("state", "symbol", "si", "output", "next"))
        if z not in sidx or x not in xidx or w not in widx:
            raise EncoderFormatError(f"transition ({z},{x},{w}) uses an undeclared name")
        if t not in sidx:
            raise EncoderFormatError(f"dangling state reference {t!r} in transition ({z},{x},{w})")
        if set(y) - {"0", "1"}:
            raise EncoderFormatError(f"non-binary output {y!r} in transition ({z},{x},{w})")
        if out[sidx[z]][xidx[x]][widx[w]] is not None:
            raise EncoderFormatError(f"duplicate transition for ({z},{x},{w})")
        out[sidx[z]][xidx[x]][widx[w]] = y
        nxt[sidx[z]][xidx[x]][widx[w]] = sidx[t]
    for i, z in enumerate(states):
        for j, x in enumerate(symbols):
            for k, w in enumerate(si):
                if out[i][j][k] is None:
                    raise EncoderFormatError(f"missing transition for (state={z!r}, symbol={x!r}, si={w!r})")
    return SIEncoder(out, nxt, sidx[initial], tuple(states), tuple(symbols), tuple(si))


@dataclass(frozen=True)
class KraftFamily:
    """Matrices indexed by SI symbol; exact when every member is dyadic."""

    matrices: tuple
    names: tuple[str, ...] = ()
    l_max: int | None = None

    def __post_init__(self):
        mats = tuple(self.matrices)
        if not mats:
            raise ValueError("a family needs at least one matrix")
        object.__setattr__(self, "matrices", mats)
        dims = {m.s if isinstance(m, DyadicMatrix) else np.asarray(m).shape[0] for m in mats}
        if len(dims) != 1:
            raise ValueError("family members must share one dimension")
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i) for i in range(len(mats))))

    @property
    def s(self) -> int:
        m = self.matrices[0]
        return m.s if isinstance(m, DyadicMatrix) else np.asarray(m).shape[0]

    @property
    def exact(self) -> bool:
        return all(isinstance(m, DyadicMatrix) for m in self.matrices)

    def float_stack(self) -> np.ndarray:
        return np.stack([as_float_matrix(m) for m in self.matrices])

    def __len__(self) -> int:
        return len(self.matrices)

    def __getitem__(self, w: int):
        return self.matrices[w]


def kraft_family(e: SIEncoder) -> KraftFamily:
    lm = e.l_max
    mats = []
    for w in range(e.beta):
        nums = [[0] * e.s for _ in range(e.s)]
        for z in range(e.s):
            for x in range(e.alpha):
                nums[z][e.next[z][x][w]] += 1 << (lm - len(e.out[z][x][w]))
        mats.append(DyadicMatrix(nums, lm))
    return KraftFamily(tuple(mats), e.si_names, lm)


def parse_family(document) -> KraftFamily:
    """``{"family": {"A": [[...]], ...}}`` with numeric or "p/q" string entries.

    The family is exact when every entry is dyadic, floating point otherwise.
    """
    doc = _load_document(document)
    fam = _require(doc, "family", dict)
    if not fam:
        raise EncoderFormatError("family must contain at least one matrix")
    names, fracs = [], []
    for name, rows in fam.items():
        try:
            grid = [[Fraction(str(v)) for v in row] for row in rows]
        except (TypeError, ValueError, ZeroDivisionError):
            raise EncoderFormatError(f"matrix {name!r} has a non-numeric entry") from None
        if not grid or any(len(r) != len(grid) for r in grid):
            raise EncoderFormatError(f"matrix {name!r} is not square")
        if any(v < 0 for r in grid for v in r):
            raise EncoderFormatError(f"matrix {name!r} has a negative entry")
        names.append(str(name))
        fracs.append(grid)
    dyadic = all((v.denominator & (v.denominator - 1)) == 0 for g in fracs for r in g for v in r)
    if dyadic:
        mats = tuple(DyadicMatrix.from_entries(g) for g in fracs)
    else:
        mats = tuple(np.array([[float(v) for v in r] for r in g]) for g in fracs)
    return KraftFamily(mats, tuple(names), doc.get("l_max"))


def family_product(fam: KraftFamily, word: Sequence[int], max_bits: int = DEFAULT_MAX_BITS):
    """K(w_1) K(w_2) ... K(w_n), left to right; the identity for the empty word.

    Exact (DyadicMatrix) when the family is dyadic and numerators stay within
    ``max_bits``; otherwise a float array built with running renormalisation.
    """
    s = fam.s
    if fam.exact:
        P = DyadicMatrix.identity(s)
        try:
            for w in word:
                P = P @ fam.matrices[w]
                if P.max_bits() > max_bits:
                    raise BudgetExceeded("exact product exceeds bit budget")
            return P
        except BudgetExceeded:
            pass
    stack = fam.float_stack()
    P = np.eye(s)
    log_scale = 0.0
    for w in word:
        P = P @ stack[w]
        c = float(np.max(np.abs(P)))
        if c > 0:
            P /= c
            log_scale += math.log(c)
    return P * math.exp(log_scale)


@dataclass(frozen=True)
class JSRBracket:
    lower: float
    upper: float
    depth: int
    lower_word: tuple[int, ...]
    upper_depth: int
    norm: str = "inf"
    sampled_words: int = 0

    @property
    def exceeds_one(self) -> bool:
        return self.lower > 1.0


def _renorm(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divide each stacked matrix by its infinity norm; returns (normalised, log norms)."""
    norms = np.max(np.sum(np.abs(P), axis=2), axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    with np.errstate(divide="ignore"):
        logs = np.where(norms > 0, np.log(safe), -np.inf)
    return P / safe[:, None, None], logs


def _log_radii(P: np.ndarray) -> np.ndarray:
    rho = np.max(np.abs(np.linalg.eigvals(P)), axis=1)
    with np.errstate(divide="ignore"):
        return np.log(rho)


def jsr_bracket(
    fam: KraftFamily,
    max_depth: int = 8,
    budget: int | None = None,
    samples: int = SAMPLE_WORDS,
    seed: int = 1,
) -> JSRBracket:
    """Bracket the joint spectral radius by exhaustive products up to ``max_depth``.

    lower = max over words of rho(K(w^n))^(1/n); upper = min over n of
    max over words of ||K(w^n)||_inf^(1/n).  If the word budget cuts the depth
    short, a warning is issued and ``samples`` random words of length up to 64
    extend the search for the lower bound.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    limit = JSR_BUDGET if budget is None else enumeration_budget(budget)
    beta = len(fam)
    depth, total = 0, 0
    while depth < max_depth and total + beta ** (depth + 1) <= limit:
        depth += 1
        total += beta**depth
    if depth == 0:
        raise BudgetExceeded("JSR budget does not cover even single matrices")
    if depth < max_depth:
        warnings.warn(f"JSR enumeration truncated to depth {depth} by the word budget", RuntimeWarning)

    stack = fam.float_stack()
    s = fam.s
    best_lower, best_word = -math.inf, (0,)
    best_upper, upper_depth = math.inf, 1
    words = np.zeros((1, 0), dtype=np.int64)
    P = np.eye(s)[None]
    logs = np.zeros(1)
    for n in range(1, depth + 1):
        P = np.einsum("kij,wjl->kwil", P, stack).reshape(-1, s, s)
        words = np.concatenate([np.repeat(words, beta, axis=0), np.tile(np.arange(beta), len(words))[:, None]], axis=1)
        P, step = _renorm(P)
        logs = np.repeat(logs, beta) + step
        live = np.isfinite(logs)
        up = math.exp(float(np.max(logs)) / n) if live.any() else 0.0
        if up < best_upper:
            best_upper, upper_depth = up, n
        lr = np.where(live, _log_radii(P) + np.where(live, logs, 0.0), -np.inf)
        i = int(np.argmax(lr))
        if lr[i] / n > best_lower + 1e-15 * abs(best_lower if np.isfinite(best_lower) else 0.0):
            best_lower, best_word = float(lr[i] / n), tuple(int(v) for v in words[i])
        if not live.any():
            break

    sampled = 0
    if depth < max_depth and samples > 0:
        rng = np.random.default_rng(seed)
        lengths = rng.integers(depth + 1, SAMPLE_MAX_LEN + 1, size=samples)
        for n in np.unique(lengths):
            count = int(np.sum(lengths == n))
            ws = rng.integers(0, beta, size=(count, int(n)))
            Q = np.broadcast_to(np.eye(s), (count, s, s)).copy()
            lg = np.zeros(count)
            for t in range(int(n)):
                Q = Q @ stack[ws[:, t]]
                Q, step = _renorm(Q)
                lg = lg + step
            lr = np.where(np.isfinite(lg), _log_radii(Q) + np.where(np.isfinite(lg), lg, 0.0), -np.inf)
            i = int(np.argmax(lr))
            if lr[i] / n > best_lower:
                best_lower, best_word = float(lr[i] / n), tuple(int(v) for v in ws[i])
            sampled += count

    lower = math.exp(best_lower) if np.isfinite(best_lower) else 0.0
    return JSRBracket(lower, best_upper, depth, best_word, upper_depth, "inf", sampled)


def certify_lower(fam: KraftFamily, word: Sequence[int]) -> float:
    """Recompute rho(K(word))^(1/n) with the library's own spectral routine."""
    P = family_product(fam, word)
    return spectral_radius(P).rho ** (1.0 / len(word))


@dataclass(frozen=True)
class SubinvariantSearch:
    vector: list | None
    status: str  # "exact", "float", "diverged" or "inconclusive"
    iterations: int


def default_cap(fam: KraftFamily) -> float:
    lm = fam.l_max
    if lm is None:
        smallest = min(
            (float(v) for m in fam.float_stack() for v in m.ravel() if v > 0),
            default=1.0,
        )
        lm = max(0, math.ceil(-math.log2(smallest)))
    return fam.s * 2.0 ** ((fam.s - 1) * lm)


def subinvariant_search(fam: KraftFamily, max_iter: int = 1000, cap: float | None = None) -> SubinvariantSearch:
    """Monotone iteration u <- max(u, max_w K(w) u) from the all-ones vector.

    The iterates never decrease; the search stops as soon as K(w) u <= u for
    every w (exactly for dyadic families, else within 1e-12 relative), or
    reports divergence once an entry passes ``cap``.
    """
    cap = default_cap(fam) if cap is None else cap
    s = fam.s
    if fam.exact:
        u = [Dyadic(1)] * s
        for it in range(max_iter + 1):
            images = [m.matvec(u) for m in fam.matrices]
            if all(img[z] <= u[z] for img in images for z in range(s)):
                return SubinvariantSearch(u, "exact", it)
            u = [max([u[z]] + [img[z] for img in images], key=lambda d: d.to_fraction()) for z in range(s)]
            if any(float(v) > cap for v in u):
                return SubinvariantSearch(None, "diverged", it + 1)
        uf = np.array([float(v) for v in u])
    else:
        uf = np.ones(s)
        stack = fam.float_stack()
        for it in range(max_iter + 1):
            images = stack @ uf
            if np.all(images <= uf * (1 + 1e-12)):
                return SubinvariantSearch(list(uf), "float", it)
            uf = np.maximum(uf, images.max(axis=0))
            if np.any(uf > cap):
                return SubinvariantSearch(None, "diverged", it + 1)
    images = fam.float_stack() @ uf
    if np.all(images <= uf * (1 + 1e-12)):
        return SubinvariantSearch(list(uf), "float", max_iter)
    return SubinvariantSearch(None, "inconclusive", max_iter)


def find_subinvariant_vector(fam: KraftFamily, max_iter: int = 1000, cap: float | None = None):
    """A strictly positive v with K(w) v <= v for all w, or None if none was found."""
    return subinvariant_search(fam, max_iter, cap).vector


def si_encode(e: SIEncoder, z1: int, x: Sequence[int], w: Sequence[int]) -> EncodeTrace:
    if len(x) != len(w):
        raise ValueError("source and side-information sequences differ in length")
    states, outputs = [z1], []
    z = z1
    for a, b in zip(x, w):
        if not (0 <= a < e.alpha and 0 <= b < e.beta):
            raise ValueError(f"symbol pair ({a},{b}) out of range")
        outputs.append(e.out[z][a][b])
        z = e.next[z][a][b]
        states.append(z)
    return EncodeTrace(tuple(states), tuple(outputs))


def check_il_si(e: SIEncoder, max_depth: int, budget: int | None = None) -> ILVerdict:
    """Bounded search for x^n != x'^n with equal output and final state under the same w^n.

    Witnesses are (state, w^n, x^n, x'^n), minimal in depth, then state id,
    then lexicographic order of w^n and of the colliding inputs.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    limit = enumeration_budget(budget)
    depth, total = 0, 0
    while depth < max_depth and total + e.s * (e.alpha * e.beta) ** (depth + 1) <= limit:
        depth += 1
        total += e.s * (e.alpha * e.beta) ** depth
    per_state: dict[int, tuple] = {}
    for z in range(e.s):
        hit = _si_collision_from(e, z, depth)
        if hit is not None:
            per_state[z] = hit
    witness = None
    if per_state:
        z = min(per_state, key=lambda k: (len(per_state[k][1]), k))
        witness = per_state[z]
    if witness is None and depth < max_depth:
        raise BudgetExceeded(
            f"SI IL check to depth {max_depth} exceeds budget; completed depth {depth}",
            completed=depth,
            partial=ILVerdict(depth, True),
        )
    return ILVerdict(depth, witness is None, witness, per_state)


def _si_collision_from(e: SIEncoder, z: int, max_depth: int):
    for n in range(1, max_depth + 1):
        for wword in itertools.product(range(e.beta), repeat=n):
            seen: dict[tuple[str, int], tuple[int, ...]] = {}
            for xword in itertools.product(range(e.alpha), repeat=n):
                state, bits = z, []
                for a, b in zip(xword, wword):
                    bits.append(e.out[state][a][b])
                    state = e.next[state][a][b]
                key = ("".join(bits), state)
                if key in seen:
                    return (z, wword, seen[key], xword)
                seen[key] = xword
    return None
