"""Exact redundancy bounds and the counting formulas behind them.

Integer quantities (binomials, q-binomials, subspace counts) are exact Python
ints.  Real-valued bounds are computed with :mod:`decimal` at 50 significant
digits and then rounded to 30 digits in the safe direction: lower bounds are
rounded down, upper bounds up.

Feasibility of the ordered-batch inequality is purely arithmetic.  The
underlying existence argument additionally needs a field of size at least
``max(4u*C(n,u), 7)``; this module does not check field sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from fractions import Fraction
from typing import Sequence

_WORK_PREC = 50
_OUT_PREC = 30

LOWER = "lower"
UPPER = "upper"
FEASIBILITY = "feasibility"


@dataclass(frozen=True)
class BoundResult:
    value: Decimal | int
    kind: str
    source: str

    def __post_init__(self):
        if self.kind not in (LOWER, UPPER, FEASIBILITY):
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if not self.source:
            raise ValueError("source tag must be non-empty")
        if self.value < 0:
            raise ValueError("bound values are non-negative")

    def __float__(self) -> float:
        return float(self.value)


def binom(n: int, k: int) -> int:
    """Binomial coefficient with ``C(n, k) = 0`` whenever ``k < 0`` or ``n < k``."""
    if k < 0 or n < k:
        return 0
    return math.comb(n, k)


def q_binomial(n: int, k: int, q: int) -> int:
    """Gaussian binomial ``[n choose k]_q``; 0 outside ``0 <= k <= n``."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if k < 0 or k > n:
        return 0
    k = min(k, n - k)
    num = 1
    den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    value, rem = divmod(num, den)
    assert rem == 0
    return value


def count_subspaces_constrained(n: int, k: int, s: int, l: int, j: int, q: int) -> int:
    """Number of ``l``-dim subspaces of ``F_q^n`` meeting a fixed ``k``-dim
    subspace ``U`` in a ``j``-dim subspace contained in a fixed
    ``(k-s)``-dim ``U_1 <= U``.
    """
    if not (k > s >= 1):
        raise ValueError("need k > s >= 1")
    if not (0 <= j <= min(l, k - s)):
        raise ValueError("need 0 <= j <= min(l, k - s)")
    if not (0 <= l <= n) or k > n:
        raise ValueError("need l <= n and k <= n")
    return q ** ((k - j) * (l - j)) * q_binomial(n - k, l - j, q) * q_binomial(k - s, j, q)


def ordered_batch_monomials(r: int, u: int, v: int) -> int:
    """Left-hand side of the ordered-batch counting inequality."""
    total = binom(r + 2 * u + 1 - v, 2 * u)
    for i in range(1, u + 1):
        total += binom(r + 2 * u + 1 - (v + i), 2 * u - i) * binom(v + i - 3, i)
    return total


def ordered_batch_feasible(r: int, u: int, v: int, n: int) -> bool:
    """Whether redundancy ``r`` passes the counting test for a
    ``(u, v)``-ordered batch code of dimension ``n``."""
    if u < 1 or v < 2 or u * v > n:
        raise ValueError("need u >= 1, v >= 2 and u*v <= n")
    return ordered_batch_monomials(r, u, v) >= binom(n, u)


def _round(value: Decimal, direction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = _OUT_PREC
        ctx.rounding = direction
        return +value


def pir_lower_bound(n: int, t: int) -> Decimal:
    """``sqrt(2n + t^2 - 3t) - 1/2`` for ``2 <= t <= n``, rounded down."""
    with localcontext() as ctx:
        ctx.prec = _WORK_PREC
        val = Decimal(2 * n + t * t - 3 * t).sqrt() - Decimal("0.5")
    return _round(val, ROUND_FLOOR)


def batch_lower_bound(n: int, s: int, t: int) -> Decimal:
    """Lower bound for ``s >= 2``, ``3s <= t <= n``, rounded down."""
    f = t // s
    with localcontext() as ctx:
        ctx.prec = _WORK_PREC
        log_term = (Decimal(2) / s) * Decimal(math.factorial(s)).ln() + Decimal(binom(n, s)).ln() / s
        root = (log_term.exp() + Decimal((f - 3) ** 2) / 4).sqrt()
        val = root + Decimal(f - 1) / 2 - s
    return _round(val, ROUND_FLOOR)


def lower_bound_redundancy(n: int, s: int, t: int, include_trivial: bool = False) -> BoundResult:
    """Lower bound on the redundancy of an ``(s, t)``-batch code of dimension ``n``.

    Uses the monomial-counting bound for the parameter range where it is
    proved (``s == 1, 2 <= t``; ``s >= 2, 3s <= t``).  Outside that range the
    trivial bound ``t - 1`` is returned: ``t`` copies of one requested symbol
    need ``t - 1`` recovering sets that avoid its systematic position.

    With ``include_trivial`` the result is the larger of the two.
    """
    if not 1 <= s <= t <= n:
        raise ValueError("need 1 <= s <= t <= n")
    trivial = BoundResult(Decimal(t - 1), LOWER, "trivial")
    if s == 1 and t >= 2:
        res = BoundResult(pir_lower_bound(n, t), LOWER, "pir-monomial")
    elif s >= 2 and 3 * s <= t:
        res = BoundResult(batch_lower_bound(n, s, t), LOWER, "batch-monomial")
    else:
        return trivial
    if res.value < 0:
        res = BoundResult(Decimal(0), LOWER, res.source)
    if include_trivial and trivial.value > res.value:
        return trivial
    return res


def cover_probability(u: int, v: int) -> Fraction:
    """Probability that a uniform vector of ``[v]^n`` covers a fixed ``uv``-set."""
    p = Fraction(1)
    for i in range(1, v + 1):
        p *= Fraction(binom((v - i + 1) * u, u), v**u)
    return p


def partition_family_size_bound(n: int, u: int, v: int) -> int:
    """Size of a random ``u``-complete family of ``v``-partitions of ``[n]``
    that covers every ``uv``-subset with positive probability."""
    if u < 1 or v < 1 or u * v > n:
        raise ValueError("need u, v >= 1 and u*v <= n")
    p = cover_probability(u, v)
    subsets = binom(n, u * v)
    if p == 1 or subsets == 1:
        return 1
    with localcontext() as ctx:
        ctx.prec = _WORK_PREC
        miss = Decimal(p.denominator - p.numerator) / Decimal(p.denominator)
        ratio = Decimal(subsets).ln() / -miss.ln()
    return int(ratio.to_integral_value(rounding=ROUND_FLOOR)) + 1


def recursive_upper_bound(
    n: int, t: int, factorization: Sequence[tuple[int, int]], base_r1t: int
) -> BoundResult:
    """Upper bound ``s * prod S(n, u_i, v_i) * r(1, t)`` from iterated
    partition-based composition.

    ``factorization`` lists ``(u_i, v_i)`` with ``u_1 * v_1 = s`` and
    ``u_i * v_i = u_{i-1}``, ending at ``u_l = 1``.  ``base_r1t`` is any known
    redundancy of a ``t``-PIR code of dimension ``n``.
    """
    if base_r1t < 0:
        raise ValueError("base redundancy must be non-negative")
    s = 1
    for _, v in factorization:
        s *= v
    prev = s
    for u, v in factorization:
        if u * v != prev:
            raise ValueError(f"non-integral chain at (u={u}, v={v}); expected u*v = {prev}")
        prev = u
    if prev != 1:
        raise ValueError("factorization must end with u = 1")
    if s > t:
        raise ValueError("s must not exceed t")
    value = s * base_r1t
    for u, v in factorization:
        value *= partition_family_size_bound(n, u, v)
    return BoundResult(value, UPPER, "recursive-partition")


def default_factorization(s: int) -> list[tuple[int, int]]:
    """Single-step chain ``[(1, s)]``."""
    return [(1, s)]


def binary_factorization(s: int) -> list[tuple[int, int]]:
    """Chain of halvings ``[(s/2, 2), (s/4, 2), ..., (1, 2)]`` for ``s`` a power of two."""
    if s < 1 or s & (s - 1):
        raise ValueError("s must be a power of two")
    chain = []
    u = s
    while u > 1:
        u //= 2
        chain.append((u, 2))
    return chain


def chernoff_upper_tail(mu: float, delta: float) -> float:
    """Bound on ``Pr(X >= (1 + delta) mu)`` for a sum of independent Bernoullis."""
    if mu <= 0 or delta <= 0:
        raise ValueError("need mu > 0 and delta > 0")
    return math.exp(-delta * delta * mu / (2 + delta))


def chernoff_lower_tail(mu: float, delta: float) -> float:
    """Bound on ``Pr(X <= (1 - delta) mu)``.

    ``delta = 1`` is accepted: ``Pr(X <= 0) <= e^-mu`` is below the formula.
    """
    if mu <= 0 or not 0 < delta <= 1:
        raise ValueError("need mu > 0 and 0 < delta <= 1")
    return math.exp(-mu * delta * delta / 2)
