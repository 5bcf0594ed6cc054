"""Exact combinatorics of three-dimensional multi-indices.

Everything here works with Python integers and :class:`fractions.Fraction`
so that inequality checks are never decided by rounding.
"""
from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator, Mapping, NamedTuple

# Exact rational type used for every reported ratio (always in lowest terms,
# positive denominator).
BigRatio = Fraction

STAR_VARIANTS = ("plain", "shift1", "shift2")


class MultiIndex(NamedTuple):
    """Derivative orders ``(a1, a2, a3)``; ``a3`` is the normal direction."""

    a1: int
    a2: int
    a3: int

    @classmethod
    def of(cls, a) -> "MultiIndex":
        a = cls(*(int(x) for x in a))
        if min(a) < 0:
            raise ValueError(f"multi-index components must be >= 0, got {tuple(a)}")
        return a

    @property
    def order(self) -> int:
        return self.a1 + self.a2 + self.a3

    @property
    def tangential(self) -> tuple[int, int]:
        return (self.a1, self.a2)

    def __le__(self, other) -> bool:  # componentwise partial order
        return all(x <= y for x, y in zip(self, other))

    def __sub__(self, other) -> "MultiIndex":
        return MultiIndex.of(x - y for x, y in zip(self, other))

    def __add__(self, other) -> "MultiIndex":
        return MultiIndex(*(x + y for x, y in zip(self, other)))


def multi_indices(m: int) -> Iterator[MultiIndex]:
    """All ``|alpha| = m``, lexicographic in ``(a1, a2)``; ``a3`` is implied."""
    for a1 in range(m + 1):
        for a2 in range(m - a1 + 1):
            yield MultiIndex(a1, a2, m - a1 - a2)


def count_multi_indices(m: int) -> int:
    return (m + 1) * (m + 2) // 2


def sub_indices(alpha: MultiIndex) -> Iterator[MultiIndex]:
    """All ``beta <= alpha`` componentwise."""
    for b in product(*(range(a + 1) for a in alpha)):
        yield MultiIndex(*b)


def weight(alpha) -> int:
    """Binomial weight ``(a1 + a2)! / (a1! a2!)``; independent of ``a3``."""
    alpha = MultiIndex.of(alpha)
    return math.comb(alpha.a1 + alpha.a2, alpha.a1)


def multi_binom(alpha, beta) -> int:
    """Multi-index binomial coefficient ``prod_i C(alpha_i, beta_i)``."""
    return math.prod(math.comb(a, b) for a, b in zip(alpha, beta))


def choose_ratio(alpha, beta) -> BigRatio:
    """``C(alpha, beta) * M_alpha / (M_beta * M_{alpha-beta})`` as an exact ratio."""
    alpha, beta = MultiIndex.of(alpha), MultiIndex.of(beta)
    if not beta <= alpha:
        raise ValueError(f"beta={tuple(beta)} is not <= alpha={tuple(alpha)}")
    num = multi_binom(alpha, beta) * weight(alpha)
    den = weight(beta) * weight(alpha - beta)
    return Fraction(num, den)


@dataclass(frozen=True)
class ChooseViolation:
    alpha: MultiIndex
    beta: MultiIndex
    ratio: BigRatio
    bound: int


def _choose_violations_for(alphas: list[MultiIndex]) -> list[ChooseViolation]:
    out = []
    for alpha in alphas:
        n = alpha.order
        m_a = weight(alpha)
        for beta in sub_indices(alpha):
            bound = math.comb(n, beta.order)
            lhs = multi_binom(alpha, beta) * m_a
            rhs = bound * weight(beta) * weight(alpha - beta)
            if lhs > rhs:
                out.append(ChooseViolation(alpha, beta, choose_ratio(alpha, beta), bound))
    return out


def all_multi_indices(max_order: int) -> list[MultiIndex]:
    return [a for m in range(max_order + 1) for a in multi_indices(m)]


def verify_choose_lemma(max_order: int, workers: int = 1) -> list[ChooseViolation]:
    """Every pair ``beta <= alpha``, ``|alpha| <= max_order``, breaking
    ``choose_ratio(alpha, beta) <= C(|alpha|, |beta|)``.

    The comparison is done by integer cross-multiplication. With ``workers > 1``
    the alpha range is dealt round-robin to processes; the result is sorted so
    it does not depend on the partition.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    alphas = all_multi_indices(max_order)
    if workers <= 1:
        found = _choose_violations_for(alphas)
    else:
        chunks = [alphas[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            found = [v for part in pool.map(_choose_violations_for, chunks) for v in part]
    return sorted(found, key=lambda v: (v.alpha.order, v.alpha, v.beta))


def choose_lemma_rows(max_order: int) -> Iterator[tuple[MultiIndex, MultiIndex, BigRatio, int]]:
    """Per alpha, the beta attaining the largest ``choose_ratio / C(|alpha|,|beta|)``."""
    for alpha in all_multi_indices(max_order):
        best = None
        for beta in sub_indices(alpha):
            bound = math.comb(alpha.order, beta.order)
            r = choose_ratio(alpha, beta)
            if best is None or r / bound > best[2] / best[3]:
                best = (alpha, beta, r, bound)
        yield best


def binom_product_violations(limit: int) -> list[tuple[int, int, int, int]]:
    """Quadruples with ``C(n,i) C(m,j) > C(n+m, i+j)`` for ``n, m <= limit``."""
    comb = [[math.comb(n, i) for i in range(n + 1)] for n in range(2 * limit + 1)]
    bad = []
    for n in range(limit + 1):
        for m in range(limit + 1):
            row = comb[n + m]
            for i in range(n + 1):
                cni = comb[n][i]
                for j in range(m + 1):
                    if cni * comb[m][j] > row[i + j]:
                        bad.append((n, i, m, j))
    return bad


def _coeff(x: Mapping, idx: MultiIndex) -> int:
    return x.get(idx, x.get(tuple(idx), 0))


def product_identity_sides(m: int, j: int, x: Mapping, y: Mapping) -> tuple[int, int]:
    """Both sides of the re-labelling identity

        sum_{|alpha|=m} sum_{|beta|=j, beta<=alpha} x_beta y_{alpha-beta}
            = (sum_{|beta|=j} x_beta) (sum_{|gamma|=m-j} y_gamma)

    evaluated independently (the left side by a double loop).
    """
    if not 0 <= j <= m:
        raise ValueError("need 0 <= j <= m")
    lhs = 0
    for alpha in multi_indices(m):
        for beta in multi_indices(j):
            if beta <= alpha:
                lhs += _coeff(x, beta) * _coeff(y, alpha - beta)
    rhs = sum(_coeff(x, b) for b in multi_indices(j)) * sum(
        _coeff(y, g) for g in multi_indices(m - j)
    )
    return lhs, rhs


def verify_product_identity(m: int, j: int, x: Mapping, y: Mapping) -> bool:
    lhs, rhs = product_identity_sides(m, j, x, y)
    return lhs == rhs


def random_coefficient_map(order: int, rng: random.Random, lo: int = -9, hi: int = 9) -> dict:
    return {a: rng.randint(lo, hi) for a in multi_indices(order)}


# -- the binomial-weighted double sums of the pressure estimate ---------------


def _star_sum_direct(b1: int, b2: int) -> int:
    return sum(
        math.comb(b1 + b2 - 2 * s - 2 * t, b1 - 2 * s) * math.comb(s + t, s)
        for s in range(b1 // 2 + 1)
        for t in range(b2 // 2 + 1)
    )


def star_sum(beta1: int, beta2: int, variant: str = "plain") -> int:
    """Left side double sum of the requested variant, by direct summation."""
    if variant == "plain":
        return _star_sum_direct(beta1, beta2)
    if variant == "shift1":
        # s <= (b1-1)//2 and C(b1+b2-2s-1-2t, b1-2s-1) is the plain sum at b1-1
        return sum(
            math.comb(beta1 + beta2 - 2 * s - 1 - 2 * t, beta1 - 2 * s - 1) * math.comb(s + t, s)
            for s in range((beta1 - 1) // 2 + 1)
            for t in range(beta2 // 2 + 1)
        )
    if variant == "shift2":
        return sum(
            math.comb(beta1 + beta2 - 2 * s - 2 * t - 1, beta1 - 2 * s) * math.comb(s + t, s)
            for s in range(beta1 // 2 + 1)
            for t in range((beta2 - 1) // 2 + 1)
        )
    raise ValueError(f"unknown variant {variant!r}; expected one of {STAR_VARIANTS}")


def _check_star_args(beta1: int, beta2: int, m: int, variant: str) -> None:
    if variant not in STAR_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {STAR_VARIANTS}")
    if beta1 < 0 or beta2 < 0:
        raise ValueError("beta1, beta2 must be >= 0")
    if beta1 + beta2 > m - 1:
        raise ValueError(f"need beta1 + beta2 <= m - 1 (got {beta1}+{beta2}, m={m})")
    if variant == "shift1" and beta1 < 1:
        raise ValueError("shift1 requires beta1 >= 1")
    if variant == "shift2" and beta2 < 1:
        raise ValueError("shift2 requires beta2 >= 1")


def lemma_star_ratio(beta1: int, beta2: int, m: int, variant: str = "plain") -> BigRatio:
    """``star_sum / (m * C(beta1 + beta2, beta1))``, exact."""
    _check_star_args(beta1, beta2, m, variant)
    return Fraction(star_sum(beta1, beta2, variant), m * math.comb(beta1 + beta2, beta1))


def star_sum_table(n_max: int) -> list[list[int]]:
    """``S[b1][b2]`` of the plain double sum for ``b1 + b2 <= n_max``.

    Uses the generating function ``1/((1-x-y)(1-x^2-y^2))``, i.e.
    ``S[b1][b2] = C(b1+b2, b1) + S[b1-2][b2] + S[b1][b2-2]``. The shifted
    variants are ``S[b1-1][b2]`` and ``S[b1][b2-1]``.
    """
    S = [[0] * (n_max + 1 - b1) for b1 in range(n_max + 1)]
    for n in range(n_max + 1):
        for b1 in range(n + 1):
            b2 = n - b1
            v = math.comb(n, b1)
            if b1 >= 2:
                v += S[b1 - 2][b2]
            if b2 >= 2:
                v += S[b1][b2 - 2]
            S[b1][b2] = v
    return S


@dataclass(frozen=True)
class StarSup:
    variant: str
    sup: BigRatio
    argmax: tuple[int, int, int]  # (beta1, beta2, m)
    n_range: int


def star_sup_at(n: int, variant: str = "plain", table=None):
    """Largest ratio with ``beta1 + beta2 = n`` as ``((beta1, beta2, m), ratio)``.

    For fixed beta the ratio decreases in ``m``, so only the smallest
    admissible ``m = max(3, n + 1)`` is visited. Returns ``None`` when no
    beta of that order is admissible for the variant.
    """
    if variant not in STAR_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    S = star_sum_table(n) if table is None else table
    m = max(3, n + 1)
    best = None
    for b1 in range(n + 1):
        b2 = n - b1
        if variant == "plain":
            num = S[b1][b2]
        elif variant == "shift1":
            if b1 < 1:
                continue
            num = S[b1 - 1][b2]
        else:
            if b2 < 1:
                continue
            num = S[b1][b2 - 1]
        r = Fraction(num, m * math.comb(n, b1))
        if best is None or r > best[1]:
            best = ((b1, b2, m), r)
    return best


def star_sup(n_range: int, variant: str = "plain", table=None) -> StarSup:
    """Supremum of :func:`lemma_star_ratio` over ``beta1 + beta2 <= n_range``."""
    S = star_sum_table(n_range) if table is None else table
    best = None
    for n in range(n_range + 1):
        cand = star_sup_at(n, variant, S)
        if cand is not None and (best is None or cand[1] > best[1]):
            best = cand
    return StarSup(variant, best[1], best[0], n_range)


# -- Stirling ------------------------------------------------------------------


@dataclass(frozen=True)
class StirlingBounds:
    """``lower < n! < upper``; values are natural logs when ``log`` is set."""

    n: int
    lower: float
    upper: float
    value: float
    log: bool

    def holds(self) -> bool:
        if self.n == 1:
            # the upper bound degenerates to equality at n = 1
            return self.lower < self.value <= self.upper
        return self.lower < self.value < self.upper


def stirling_bounds(n: int, log: bool | None = None) -> StirlingBounds:
    if n < 1:
        raise ValueError("n must be >= 1")
    if log is None:
        log = n > 170
    log_core = 0.5 * math.log(n) + n * math.log(n) - n
    lo, hi, val = 7 / 8 + log_core, 1.0 + log_core, math.lgamma(n + 1)
    if log:
        return StirlingBounds(n, lo, hi, val, True)
    if n == 1:
        return StirlingBounds(1, math.exp(7 / 8 - 1), 1.0, 1.0, False)
    core = math.sqrt(n) * (n / math.e) ** n
    return StirlingBounds(n, math.exp(7 / 8) * core, math.e * core, float(math.factorial(n)), False)
