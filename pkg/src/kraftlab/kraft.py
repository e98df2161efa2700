"""Kraft matrices, their spectra, and the generalized Kraft inequalities.

Everything that is a finite sum of powers of two is computed exactly with
:class:`~kraftlab.dyadic.DyadicMatrix`; only eigen-quantities (spectral
radius, Perron vectors) go through floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._budget import BudgetExceeded, enumeration_budget
from .dyadic import Dyadic, DyadicMatrix, matrix_power
from .encoder import Encoder, is_irreducible, strongly_connected
from .report import Check, Report, compare

SPECTRAL_TOL = 1e-9
MAX_ITER = 10_000
GELFAND_SQUARINGS = 64


def kraft_matrix(e: Encoder) -> DyadicMatrix:
    """K[z][z'] = sum over x with next(z,x) = z' of 2**-len(out(z,x))."""
    lm = e.l_max
    nums = [[0] * e.s for _ in range(e.s)]
    for z in range(e.s):
        for x in range(e.alpha):
            nums[z][e.next[z][x]] += 1 << (lm - e.length(z, x))
    return DyadicMatrix(nums, lm)


def _words(alpha: int, n: int):
    return itertools.product(range(alpha), repeat=n)


def enumerated_block_kraft(e: Encoder, ell: int, budget: int | None = None) -> DyadicMatrix:
    """Brute-force sum of 2**-L[f(z, x^ell)] grouped by (z, g(z, x^ell))."""
    if e.s * e.alpha**ell > enumeration_budget(budget):
        raise BudgetExceeded(f"enumerating {e.s}*{e.alpha}^{ell} strings exceeds budget")
    top = ell * e.l_max
    nums = [[0] * e.s for _ in range(e.s)]
    for z in range(e.s):
        for word in _words(e.alpha, ell):
            bits, end = e.run(z, word)
            nums[z][end] += 1 << (top - len(bits))
    return DyadicMatrix(nums, top)


def block_kraft_consistency(e: Encoder, ell: int, budget: int | None = None) -> bool:
    """Exact agreement between enumeration over X^ell and the ell-th power of K."""
    return enumerated_block_kraft(e, ell, budget) == matrix_power(kraft_matrix(e), ell)


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectralReport:
    rho: float
    method: str  # "power-iteration" or "repeated-squaring-gelfand"
    iterations: int
    residual: float
    converged: bool = True
    cross_check: float | None = None


def as_float_matrix(K) -> np.ndarray:
    M = K.to_float() if isinstance(K, DyadicMatrix) else np.asarray(K, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(M < 0):
        raise ValueError("matrix must be entrywise non-negative")
    return M


def is_irreducible_matrix(K) -> bool:
    M = as_float_matrix(K)
    return strongly_connected(M > 0)


def _inf_norm(M: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(M), axis=1)))


def gelfand_radius(M: np.ndarray, tol: float = SPECTRAL_TOL, max_iter: int = MAX_ITER) -> SpectralReport:
    """rho = lim ||M^n||^(1/n) along n = 2^k, renormalising after every squaring.

    ``log_rho`` accumulates log ||M^(2^k)|| / 2^k, so nothing overflows.  A
    single small correction proves nothing for periodic matrices, so a fixed
    number of squarings is done; after 64 of them the remaining error is of
    order log(C) / 2^64.
    """
    norm = _inf_norm(M)
    if norm == 0.0:
        return SpectralReport(0.0, "repeated-squaring-gelfand", 0, 0.0)
    N = M / norm
    log_rho = math.log(norm)
    step = math.inf
    rounds = min(max_iter, GELFAND_SQUARINGS)
    k = 0
    while k < rounds:
        P = N @ N
        c = _inf_norm(P)
        k += 1
        if c == 0.0:
            return SpectralReport(0.0, "repeated-squaring-gelfand", k, 0.0)
        delta = math.log(c) / 2.0**k
        log_rho += delta
        N = P / c
        step = abs(math.expm1(delta))
    return SpectralReport(math.exp(log_rho), "repeated-squaring-gelfand", k, step, step < tol)


def _shifted_power(M: np.ndarray, tol: float, max_iter: int):
    """Power iteration on M/r + I for irreducible non-negative M.

    ``r`` is the Gelfand estimate of rho(M), so the shifted Perron root sits
    near 2 whatever the scale of M.  Returns (lower, upper, v, iterations):
    Collatz-Wielandt brackets on rho(M) from the final positive iterate v
    (unit sum).
    """
    s = M.shape[0]
    r = gelfand_radius(M).rho or 1.0
    A = M / r
    v = np.full(s, 1.0 / s)
    lower, upper = 0.0, math.inf
    for it in range(1, max_iter + 1):
        Av = A @ v
        ratios = Av / v
        lower, upper = float(ratios.min()), float(ratios.max())
        if upper - lower <= tol * max(upper, 1e-300):
            return lower * r, upper * r, v, it
        y = Av + v
        v = y / y.sum()
    return lower * r, upper * r, v, max_iter


def spectral_radius(K, tol: float = SPECTRAL_TOL, max_iter: int = MAX_ITER) -> SpectralReport:
    """Spectral radius of a non-negative square matrix.

    Repeated squaring (Gelfand's formula) always runs; for irreducible input
    the shifted power iteration supplies the reported value, since the shift
    makes the Perron root strictly dominant and its Collatz-Wielandt bracket
    gives a certified residual.
    """
    M = as_float_matrix(K)
    if M.shape[0] == 1:
        return SpectralReport(float(M[0, 0]), "power-iteration", 0, 0.0)
    gel = gelfand_radius(M, tol, max_iter)
    if not strongly_connected(M > 0):
        return gel
    lower, upper, _, iters = _shifted_power(M, tol * 1e-3, max_iter)
    if upper - lower <= tol * upper:
        return SpectralReport(0.5 * (lower + upper), "power-iteration", iters, upper - lower, True, gel.rho)
    return SpectralReport(gel.rho, gel.method, gel.iterations, gel.residual, gel.converged, 0.5 * (lower + upper))


def _perron_right(M: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    lower, upper, v, _ = _shifted_power(M, tol, max_iter)
    rho = 0.5 * (lower + upper)
    if upper - lower > tol * max(upper, 1e-300):
        # slow spectral gap: finish with inverse iteration just above the bracket
        mu = upper + 1e-9 * max(1.0, upper)
        A = M - mu * np.eye(M.shape[0])
        for _ in range(50):
            v = np.abs(np.linalg.solve(A, v))
            v /= v.sum()
        ratios = (M @ v) / v
        rho = 0.5 * (float(ratios.min()) + float(ratios.max()))
    return rho, v


def perron_vectors(K, tol: float = 1e-13, max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Strictly positive left and right Perron eigenvectors, each with unit sum."""
    M = as_float_matrix(K)
    if not strongly_connected(M > 0):
        raise ValueError("Perron vectors require an irreducible matrix")
    if M.shape[0] == 1:
        return np.ones(1), np.ones(1)
    rho, v = _perron_right(M, tol, max_iter)
    _, u = _perron_right(M.T.copy(), tol, max_iter)
    res_r = float(np.max(np.abs(M @ v - rho * v)))
    res_l = float(np.max(np.abs(u @ M - rho * u)))
    if max(res_r, res_l) > 1e-8 or np.any(u <= 0) or np.any(v <= 0):
        raise ArithmeticError(f"Perron vectors did not converge (residuals {res_l:.3g}, {res_r:.3g})")
    return u, v


def collatz_wielandt(K, w: Sequence[float], mode: str = "lower") -> float:
    """min (lower) or max (upper) of (Kw)_z / w_z over the support of w.

    The lower value never exceeds rho(K); for w > 0 the upper value never
    falls below it.
    """
    M = as_float_matrix(K)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("w must be non-negative and not all zero")
    Kw = M @ w
    support = w > 0
    if mode == "upper":
        if np.any((~support) & (Kw > 0)):
            raise ValueError("upper mode needs w > 0 wherever (Kw) > 0")
        return float(np.max(Kw[support] / w[support]))
    if mode == "lower":
        return float(np.min(Kw[support] / w[support]))
    raise ValueError("mode must be 'lower' or 'upper'")


# ---------------------------------------------------------------------------
# inequalities


def zl_baseline(s: int, alpha: int, ell: int) -> float:
    """Right-hand side of the Ziv-Lempel block Kraft inequality,
    s^2 [1 + log2(1 + alpha^ell / s^2)]."""
    if min(s, alpha, ell) < 1:
        raise ValueError("s, alpha and ell must be positive")
    return s * s * (1.0 + math.log2(1.0 + alpha**ell / (s * s)))


def min_state_kraft_sum(e: Encoder, ell: int, budget: int | None = None) -> Dyadic:
    """sum over x^ell of 2**-min_z L[f(z, x^ell)], by enumeration."""
    if e.s * e.alpha**ell > enumeration_budget(budget):
        raise BudgetExceeded(f"enumerating {e.s}*{e.alpha}^{ell} strings exceeds budget")
    top = ell * e.l_max
    total = 0
    # carry (length so far, current state) for each start state along the word
    level = [tuple((0, z) for z in range(e.s))]
    for _ in range(ell):
        nxt = []
        for row in level:
            for x in range(e.alpha):
                nxt.append(tuple((n + e.length(z, x), e.next[z][x]) for n, z in row))
        level = nxt
    for row in level:
        total += 1 << (top - min(n for n, _ in row))
    return Dyadic(total, top)


def log2_ceil(v: int) -> int:
    """Smallest integer c with 2**c >= v (v >= 1)."""
    return (v - 1).bit_length()


@dataclass(frozen=True)
class RepairedLengths:
    lengths: dict
    pad_bits: int
    header_bits: int
    kraft_sum: Dyadic

    @property
    def is_prefix_feasible(self) -> bool:
        return self.kraft_sum <= 1


def prefix_repair_lengths(e: Encoder, z1: int, n: int, budget: int | None = None) -> RepairedLengths:
    """Code lengths l(z1, x^n) + ceil(log2 s(1+n Lmax)) + ceil(log2 s) and their exact Kraft sum."""
    if e.alpha**n > enumeration_budget(budget):
        raise BudgetExceeded(f"enumerating {e.alpha}^{n} strings exceeds budget")
    pad = log2_ceil(e.s * (1 + n * e.l_max))
    header = log2_ceil(e.s)
    lengths = {}
    top = n * e.l_max + pad + header
    acc = 0
    for word in _words(e.alpha, n):
        bits, _ = e.run(z1, word)
        lengths[word] = len(bits) + pad + header
        acc += 1 << (top - lengths[word])
    return RepairedLengths(lengths, pad, header, Dyadic(acc, top))


def irreducible_entry_bound(e: Encoder) -> int:
    """2**((s-1) Lmax): bound on every entry of K^n for irreducible IL encoders."""
    return 1 << ((e.s - 1) * e.l_max)


def gki_check(e: Encoder, ells: Iterable[int], tol: float = SPECTRAL_TOL) -> Report:
    """Evaluate every generalized Kraft inequality that IL forces on ``e``.

    Any failing check refutes information losslessness.  Comparisons with
    dyadic or integer right-hand sides are exact.
    """
    ells = sorted(set(int(l) for l in ells))
    K = kraft_matrix(e)
    s, lm = e.s, e.l_max
    irreducible = is_irreducible(e)
    report = Report("gki")
    report.info.update(
        s=s,
        alpha=e.alpha,
        L_max=lm,
        irreducible=irreducible,
        kraft_matrix=K,
    )

    if s == 1:
        rho_val = K[0, 0]
        report.info.update(rho=float(rho_val), spectral_method="exact (scalar Kraft sum)")
        report.add(compare("rho(K) <= 1", rho_val, 1))
    else:
        spec = spectral_radius(K, tol)
        report.info.update(rho=spec.rho, spectral_method=spec.method, spectral_residual=spec.residual)
        report.add(compare("rho(K) <= 1", spec.rho, 1.0, tol=tol))

    entry_cap = irreducible_entry_bound(e)
    if irreducible:
        report.info["irreducible_entry_bound"] = entry_cap

    for ell in ells:
        P = matrix_power(K, ell)
        rows = P.row_sums()
        worst_row = max(range(s), key=lambda z: rows[z].to_fraction())
        top, where = P.max_entry()
        names = e.state_names
        report.add(compare(f"row sums of K^{ell} <= s(1+{ell}*Lmax)", rows[worst_row], s * (1 + ell * lm), names[worst_row]))
        report.add(compare(f"entries of K^{ell} <= 1+{ell}*Lmax", top, 1 + ell * lm, (names[where[0]], names[where[1]])))
        report.add(
            compare(
                f"entries of K^{ell} <= 1+log2(1+alpha^{ell})",
                top,
                1.0 + math.log2(1.0 + e.alpha**ell),
                (names[where[0]], names[where[1]]),
                note="alternative entry bound; which one is tighter depends on Lmax",
            )
        )
        if irreducible:
            best = min(range(s), key=lambda z: rows[z].to_fraction())
            report.add(compare(f"min_z Kraft sum of K^{ell} <= 1", rows[best], 1, names[best]))
            report.add(compare(f"entries of K^{ell} <= 2^((s-1)Lmax)", top, entry_cap, (names[where[0]], names[where[1]])))
            report.add(compare(f"row sums of K^{ell} <= s*2^((s-1)Lmax)", rows[worst_row], s * entry_cap, names[worst_row]))
            report.add(compare(f"total of K^{ell} <= s^2*2^((s-1)Lmax)", P.total(), s * s * entry_cap))
    return report


# The aggregated inequality report is an ordinary Report.
GKIReport = Report


def zl_checks(e: Encoder, ells: Iterable[int], budget: int | None = None) -> list[Check]:
    """Ziv-Lempel baseline against the enumerated min-over-state Kraft sum."""
    out = []
    for ell in ells:
        lhs = min_state_kraft_sum(e, ell, budget)
        rhs = zl_baseline(e.s, e.alpha, ell)
        chk = compare(f"ZL78 min-state Kraft sum (l={ell}) <= s^2[1+log2(1+alpha^l/s^2)]", lhs, rhs)
        if chk.holds and Fraction(rhs) == lhs.to_fraction():
            chk.note = "equality: the bound is expected to be strict"
        out.append(chk)
    return out
