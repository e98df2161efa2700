"""Finite-state encoders: definition, execution, and structural checks.

An encoder is the quintuple (X, Y, Z, f, g): at each step it reads a source
symbol, emits a (possibly empty) binary string ``out[z][x]`` and moves to
``next[z][x]``.  States and symbols are integer ids; the names seen in input
files are kept only for reports.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ._budget import BudgetExceeded, enumeration_budget


class EncoderFormatError(ValueError):
    """The encoder document does not match the expected schema."""


@dataclass(frozen=True)
class Encoder:
    out: tuple[tuple[str, ...], ...]
    next: tuple[tuple[int, ...], ...]
    initial_state: int = 0
    state_names: tuple[str, ...] = ()
    symbol_names: tuple[str, ...] = ()

    def __post_init__(self):
        out = tuple(tuple(row) for row in self.out)
        nxt = tuple(tuple(int(t) for t in row) for row in self.next)
        object.__setattr__(self, "out", out)
        object.__setattr__(self, "next", nxt)
        s = len(out)
        if s == 0 or len(nxt) != s:
            raise EncoderFormatError("out and next must cover the same non-empty state set")
        alpha = len(out[0])
        if alpha == 0:
            raise EncoderFormatError("alphabet must be non-empty")
        for z in range(s):
            if len(out[z]) != alpha or len(nxt[z]) != alpha:
                raise EncoderFormatError(f"state {z} does not define every symbol")
            for x in range(alpha):
                if not 0 <= nxt[z][x] < s:
                    raise EncoderFormatError(f"next({z},{x}) = {nxt[z][x]} is not a valid state")
                if set(out[z][x]) - {"0", "1"}:
                    raise EncoderFormatError(f"output {out[z][x]!r} at ({z},{x}) is not binary")
        if not 0 <= self.initial_state < s:
            raise EncoderFormatError("initial state out of range")
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(str(z) for z in range(s)))
        if not self.symbol_names:
            object.__setattr__(self, "symbol_names", tuple(str(x) for x in range(alpha)))
        if len(self.state_names) != s or len(self.symbol_names) != alpha:
            raise EncoderFormatError("name tables do not match dimensions")

    @property
    def s(self) -> int:
        return len(self.out)

    @property
    def alpha(self) -> int:
        return len(self.out[0])

    @property
    def l_max(self) -> int:
        return max(len(c) for row in self.out for c in row)

    def length(self, z: int, x: int) -> int:
        return len(self.out[z][x])

    def state_id(self, name_or_id) -> int:
        if isinstance(name_or_id, int):
            return name_or_id
        return self.state_names.index(name_or_id)

    def run(self, z: int, xs: Sequence[int]) -> tuple[str, int]:
        """Concatenated output and final state, f(z, x^n) and g(z, x^n)."""
        out, nxt = self.out, self.next
        bits = []
        for x in xs:
            bits.append(out[z][x])
            z = nxt[z][x]
        return "".join(bits), z

    def final_state(self, z: int, xs: Sequence[int]) -> int:
        for x in xs:
            z = self.next[z][x]
        return z

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.symbol_names),
            "states": list(self.state_names),
            "initial": self.state_names[self.initial_state],
            "transitions": [
                {
                    "state": self.state_names[z],
                    "symbol": self.symbol_names[x],
                    "output": self.out[z][x],
                    "next": self.state_names[self.next[z][x]],
                }
                for z in range(self.s)
                for x in range(self.alpha)
            ],
        }


@dataclass(frozen=True)
class EncodeTrace:
    states: tuple[int, ...]
    outputs: tuple[str, ...]

    @property
    def total_bits(self) -> int:
        return sum(len(y) for y in self.outputs)

    @property
    def final_state(self) -> int:
        return self.states[-1]

    @property
    def bits(self) -> str:
        return "".join(self.outputs)


@dataclass(frozen=True)
class ILVerdict:
    """Outcome of a bounded information-losslessness search.

    A clean verdict only says that no collision exists up to ``checked_depth``;
    it does not prove losslessness for longer inputs.
    """

    checked_depth: int
    is_il_up_to_depth: bool
    witness: tuple | None = None  # (state, x, x') with equal output and final state
    per_state: Mapping[int, tuple] = field(default_factory=dict)

    @property
    def witness_depth(self) -> int | None:
        return None if self.witness is None else len(self.witness[1])


def _require(doc: Mapping, key: str, kind):
    if key not in doc:
        raise EncoderFormatError(f"missing field {key!r}")
    val = doc[key]
    if not isinstance(val, kind):
        raise EncoderFormatError(f"field {key!r} has wrong type")
    return val


def _name_table(doc: Mapping, key: str) -> list[str]:
    names = _require(doc, key, list)
    if not names:
        raise EncoderFormatError(f"{key!r} must be non-empty")
    names = [str(n) for n in names]
    if len(set(names)) != len(names):
        raise EncoderFormatError(f"{key!r} contains duplicates")
    return names


def _load_document(document) -> Mapping:
    if isinstance(document, Mapping):
        return document
    if isinstance(document, Path):
        document = document.read_text()
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise EncoderFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise EncoderFormatError("document must be a JSON object")
    return doc


def parse_encoder(document) -> Encoder:
    """Build an Encoder from a JSON string, ``Path`` or already-parsed dict.

    Schema::

        {"alphabet": ["0", "1"], "states": ["S", "O", "I"], "initial": "S",
         "transitions": [{"state": "S", "symbol": "0", "output": "", "next": "O"}, ...]}
    """
    doc = _load_document(document)
    symbols = _name_table(doc, "alphabet")
    states = _name_table(doc, "states")
    initial = str(_require(doc, "initial", (str, int)))
    if initial not in states:
        raise EncoderFormatError(f"initial state {initial!r} is not declared")
    sidx = {n: i for i, n in enumerate(states)}
    xidx = {n: i for i, n in enumerate(symbols)}
    out: list[list[str | None]] = [[None] * len(symbols) for _ in states]
    nxt: list[list[int | None]] = [[None] * len(symbols) for _ in states]
    for rec in _require(doc, "transitions", list):
        if not isinstance(rec, Mapping):
            raise EncoderFormatError("transition records must be objects")
        for key in ("state", "symbol", "output", "next"):
            if key not in rec:
                raise EncoderFormatError(f"transition record missing {key!r}")
        z, x, y, t = (str(rec[k]) if not isinstance(rec[k], str) else rec[k] for k in ("state", "symbol", "output", "next"))
        if z not in sidx:
            raise EncoderFormatError(f"transition from undeclared state {z!r}")
        if x not in xidx:
            raise EncoderFormatError(f"transition on undeclared symbol {x!r}")
        if t not in sidx:
            raise EncoderFormatError(f"dangling state reference {t!r} in transition ({z},{x})")
        if set(y) - {"0", "1"}:
            raise EncoderFormatError(f"non-binary output {y!r} in transition ({z},{x})")
        if out[sidx[z]][xidx[x]] is not None:
            raise EncoderFormatError(f"duplicate transition for ({z},{x})")
        out[sidx[z]][xidx[x]] = y
        nxt[sidx[z]][xidx[x]] = sidx[t]
    for i, z in enumerate(states):
        for j, x in enumerate(symbols):
            if out[i][j] is None:
                raise EncoderFormatError(f"missing transition for (state={z!r}, symbol={x!r})")
    return Encoder(out, nxt, sidx[initial], tuple(states), tuple(symbols))


def encode(e: Encoder, z1: int, x: Sequence[int]) -> EncodeTrace:
    states = [z1]
    outputs = []
    z = z1
    for sym in x:
        if not 0 <= sym < e.alpha:
            raise ValueError(f"symbol {sym} outside alphabet of size {e.alpha}")
        outputs.append(e.out[z][sym])
        z = e.next[z][sym]
        states.append(z)
    return EncodeTrace(tuple(states), tuple(outputs))


def adjacency(e: Encoder) -> list[list[int]]:
    A = [[0] * e.s for _ in range(e.s)]
    for z in range(e.s):
        for t in e.next[z]:
            A[z][t] = 1
    return A


def strongly_connected(adj: Sequence[Sequence]) -> bool:
    """True iff the digraph with positive entries of ``adj`` as edges is strongly connected."""
    s = len(adj)

    def reach(forward: bool) -> int:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in range(s):
                edge = adj[u][v] if forward else adj[v][u]
                if edge and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen)

    return reach(True) == s and reach(False) == s


def is_irreducible(e: Encoder) -> bool:
    return strongly_connected(adjacency(e))


def shortest_path_input(e: Encoder, start: int, target: int) -> tuple[int, ...]:
    """Lexicographically smallest among the shortest inputs driving start -> target."""
    if start == target:
        return ()
    parent: dict[int, tuple[int, int]] = {start: (-1, -1)}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for x in range(e.alpha):
            v = e.next[u][x]
            if v in parent:
                continue
            parent[v] = (u, x)
            if v == target:
                path = []
                while v != start:
                    v, sym = parent[v]
                    path.append(sym)
                return tuple(reversed(path))
            queue.append(v)
    raise ValueError(f"state {target} is unreachable from {start}")


def cyclic_extend(e: Encoder, z1: int, x: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Append the shortest suffix that returns the state sequence to ``z1``.

    Returns the extended sequence and the suffix length ``m`` (at most s-1).
    """
    end = e.final_state(z1, x)
    suffix = shortest_path_input(e, end, z1)
    return tuple(x) + suffix, len(suffix)


def _il_budget_depth(s: int, alpha: int, max_depth: int, budget: int) -> int:
    total = 0
    for n in range(1, max_depth + 1):
        total += s * alpha**n
        if total > budget:
            return n - 1
    return max_depth


def _first_collision_from(e: Encoder, z: int, max_depth: int):
    """Minimal-depth collision starting at ``z``: (depth, x, x') or None.

    Inputs are enumerated in lexicographic order, so x' is the first input
    whose (output, final state) repeats an earlier one.
    """
    level: list[tuple[str, int]] = [("", z)]
    for n in range(1, max_depth + 1):
        nxt_level = []
        seen: dict[tuple[str, int], int] = {}
        idx = 0
        for bits, state in level:
            row_out, row_next = e.out[state], e.next[state]
            for x in range(e.alpha):
                key = (bits + row_out[x], row_next[x])
                prev = seen.get(key)
                if prev is not None:
                    return n, _index_to_word(prev, n, e.alpha), _index_to_word(idx, n, e.alpha)
                seen[key] = idx
                nxt_level.append(key)
                idx += 1
        level = nxt_level
    return None


def _index_to_word(idx: int, n: int, alpha: int) -> tuple[int, ...]:
    word = []
    for _ in range(n):
        idx, r = divmod(idx, alpha)
        word.append(r)
    return tuple(reversed(word))


def _collision_task(args):
    e, z, depth = args
    return z, _first_collision_from(e, z, depth)


def check_il(e: Encoder, max_depth: int, budget: int | None = None, workers: int = 1) -> ILVerdict:
    """Exhaustively search for two inputs that IL would forbid.

    For every start state and every n <= max_depth the alpha**n inputs are
    grouped by (output string, final state).  The returned witness has minimal
    depth, ties broken by state id then lexicographic input order;
    ``per_state`` holds the minimal witness for each start state that has one.

    If the budget allows only a shallower search, that search is run; a
    witness found there is still returned, otherwise BudgetExceeded is raised
    with ``completed`` set to the depth actually cleared.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    limit = enumeration_budget(budget)
    depth = _il_budget_depth(e.s, e.alpha, max_depth, limit)
    tasks = [(e, z, depth) for z in range(e.s)] if depth else []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_collision_task, tasks))
    else:
        results = [_collision_task(t) for t in tasks]
    per_state = {z: (z, hit[1], hit[2]) for z, hit in results if hit is not None}
    witness = None
    if per_state:
        z = min(per_state, key=lambda k: (len(per_state[k][1]), k))
        witness = per_state[z]
    if witness is None and depth < max_depth:
        partial = ILVerdict(depth, True)
        raise BudgetExceeded(
            f"IL check to depth {max_depth} exceeds budget of {limit} strings; completed depth {depth}",
            completed=depth,
            partial=partial,
        )
    return ILVerdict(depth, witness is None, witness, per_state)


def block_state_count(alpha: int, k: int) -> int:
    return sum(alpha**j for j in range(k))


def build_block_encoder(k: int, codebook: Mapping[tuple[int, ...], str], alpha: int | None = None) -> Encoder:
    """Tree-structured encoder for a fixed-to-variable block code of length k.

    The state is the part of the current block read so far; the whole
    codeword is emitted when the block completes.
    """
    if k < 1:
        raise ValueError("block length must be >= 1")
    book = {tuple(key): word for key, word in codebook.items()}
    if alpha is None:
        alpha = 1 + max((max(key) for key in book), default=0)
    blocks = list(itertools.product(range(alpha), repeat=k))
    missing = [b for b in blocks if b not in book]
    if missing:
        raise ValueError(f"codebook is incomplete, e.g. block {missing[0]} has no codeword")

    prefixes = [p for j in range(k) for p in itertools.product(range(alpha), repeat=j)]
    index = {p: i for i, p in enumerate(prefixes)}
    out, nxt = [], []
    for p in prefixes:
        row_out, row_next = [], []
        for x in range(alpha):
            q = p + (x,)
            if len(q) == k:
                row_out.append(book[q])
                row_next.append(0)
            else:
                row_out.append("")
                row_next.append(index[q])
        out.append(row_out)
        nxt.append(row_next)
    names = tuple("root" if not p else "".join(map(str, p)) for p in prefixes)
    return Encoder(out, nxt, 0, names)
