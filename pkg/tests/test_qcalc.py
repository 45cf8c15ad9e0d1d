import math
from decimal import Decimal

import numpy as np
import pytest

from oracles import dim_of, subspaces
from stbatch.qcalc import (
    BoundResult,
    binary_factorization,
    chernoff_lower_tail,
    chernoff_upper_tail,
    count_subspaces_constrained,
    default_factorization,
    lower_bound_redundancy,
    ordered_batch_feasible,
    partition_family_size_bound,
    q_binomial,
    recursive_upper_bound,
)

# frozen reference values, evaluated independently in float arithmetic
SQRT30_MINUS_HALF = 4.977225575051661
BATCH_10_2_6 = 2.6628415014847064
EXP_MINUS_10_3 = 0.035673993347252395
EXP_MINUS_1_25 = 0.2865047968601901


@pytest.mark.parametrize("n, k, q, expected", [(2, 1, 2, 3), (4, 2, 2, 35), (5, 0, 3, 1), (3, 4, 2, 0), (3, -1, 2, 0)])
def test_q_binomial_examples(n, k, q, expected):
    assert q_binomial(n, k, q) == expected


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_q_binomial_matches_enumeration(n, q):
    for k in range(n + 1):
        found = subspaces(n, k, q)
        assert all(dim_of(W, q) == k for W in found)
        assert q_binomial(n, k, q) == len(found)


def _unit(i, n):
    return tuple(1 if c == i else 0 for c in range(n))


def _constrained_by_enumeration(n, k, s, l, j, q):
    from oracles import fq_span

    U = fq_span([_unit(i, n) for i in range(k)], n, q)
    U1 = fq_span([_unit(i, n) for i in range(k - s)], n, q)
    count = 0
    for W in subspaces(n, l, q):
        meet = W & U
        if meet <= U1 and dim_of(frozenset(meet), q) == j:
            count += 1
    return count


def test_constrained_count_example():
    assert count_subspaces_constrained(4, 2, 1, 2, 0, 2) == 16
    assert _constrained_by_enumeration(4, 2, 1, 2, 0, 2) == 16


def test_constrained_count_trivial_case():
    assert count_subspaces_constrained(5, 3, 1, 0, 0, 2) == 1


@pytest.mark.parametrize(
    "n, k, s, l, j",
    [(n, k, s, l, j) for n in (3, 4) for k in range(2, n + 1) for s in range(1, k) for l in range(n + 1) for j in range(min(l, k - s) + 1)],
)
def test_constrained_count_matches_enumeration(n, k, s, l, j):
    assert count_subspaces_constrained(n, k, s, l, j, 2) == _constrained_by_enumeration(n, k, s, l, j, 2)


def test_constrained_count_rejects_bad_parameters():
    with pytest.raises(ValueError):
        count_subspaces_constrained(4, 1, 1, 2, 0, 2)
    with pytest.raises(ValueError):
        count_subspaces_constrained(4, 2, 1, 2, 2, 2)


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_q_binomial_estimates(q):
    for n in range(1, 9):
        for k in range(1, n + 1):
            g = q_binomial(n, k, q)
            base = q ** (k * (n - k))
            assert g >= base
            assert (g == base) == (n == k)
            # g < base * (1 + 2k/(q-1)), cleared of denominators
            assert g * (q - 1) < base * (q - 1 + 2 * k)


@pytest.mark.parametrize("r, expected", [(4, True), (3, False), (10, True)])
def test_ordered_batch_feasible(r, expected):
    assert ordered_batch_feasible(r, 1, 2, 10) is expected


def test_lower_bound_pir_branch():
    res = lower_bound_redundancy(16, 1, 2)
    assert abs(float(res.value) - SQRT30_MINUS_HALF) < 1e-9
    assert res.kind == "lower" and res.source == "pir-monomial"
    assert res.value <= Decimal(30).sqrt() - Decimal("0.5")


def test_lower_bound_batch_branch():
    res = lower_bound_redundancy(10, 2, 6)
    assert abs(float(res.value) - BATCH_10_2_6) < 1e-9
    assert res.source == "batch-monomial"


def test_lower_bound_out_of_range_is_trivial():
    res = lower_bound_redundancy(10, 2, 5)
    assert res.source == "trivial"
    assert res.value == 4


def test_lower_bound_include_trivial():
    assert lower_bound_redundancy(16, 1, 2, include_trivial=True).source == "pir-monomial"
    res = lower_bound_redundancy(10, 1, 10, include_trivial=True)
    assert res.value >= 9


def test_lower_bound_below_known_codes():
    # simplex codes are functional (1, 2^(n-1)) codes, hence index PIR codes
    for n in (3, 4, 5, 6):
        t = min(2 ** (n - 1), n)
        assert lower_bound_redundancy(n, 1, t).value <= 2**n - n - 1
    # replication with t copies is an (s, t) code of redundancy (t-1) n
    for n, s, t in [(10, 2, 6), (12, 3, 9), (8, 1, 4)]:
        assert lower_bound_redundancy(n, s, t, include_trivial=True).value <= (t - 1) * n


def test_bound_result_validation():
    with pytest.raises(ValueError):
        BoundResult(Decimal(-1), "lower", "x")
    with pytest.raises(ValueError):
        BoundResult(Decimal(1), "lower", "")
    with pytest.raises(ValueError):
        BoundResult(Decimal(1), "sideways", "x")


@pytest.mark.parametrize("n, u, v, expected", [(10, 1, 2, 6), (8, 2, 2, 10), (8, 1, 2, 5), (4, 2, 2, 1), (2, 1, 2, 1)])
def test_partition_family_size_bound(n, u, v, expected):
    assert partition_family_size_bound(n, u, v) == expected


def test_partition_family_size_bound_formula():
    for n in range(2, 12):
        for u, v in [(1, 2), (1, 3), (2, 2)]:
            if u * v > n:
                continue
            p = 1.0
            for i in range(1, v + 1):
                p *= math.comb((v - i + 1) * u, u) / v**u
            if p < 1 and math.comb(n, u * v) > 1:
                ratio = math.log(math.comb(n, u * v)) / -math.log(1 - p)
                if abs(ratio - round(ratio)) > 1e-9:
                    assert partition_family_size_bound(n, u, v) == math.floor(ratio) + 1


def test_recursive_upper_bound_examples():
    assert recursive_upper_bound(10, 2, [(1, 2)], 5).value == 60
    assert recursive_upper_bound(10, 1, [], 5).value == 5
    assert recursive_upper_bound(8, 4, [(2, 2), (1, 2)], 3).value == 600
    assert recursive_upper_bound(8, 4, binary_factorization(4), 3).value == 600
    assert default_factorization(3) == [(1, 3)]


def test_recursive_upper_bound_rejects_bad_chain():
    with pytest.raises(ValueError):
        recursive_upper_bound(8, 4, [(2, 2), (2, 2)], 3)
    with pytest.raises(ValueError):
        binary_factorization(6)


def test_chernoff_examples():
    assert chernoff_upper_tail(10, 1) == pytest.approx(EXP_MINUS_10_3, rel=1e-12)
    assert chernoff_lower_tail(10, 0.5) == pytest.approx(EXP_MINUS_1_25, rel=1e-12)
    assert chernoff_upper_tail(10, 1e-9) == pytest.approx(1.0)
    assert chernoff_lower_tail(10, 1e-9) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        chernoff_upper_tail(0, 1)
    with pytest.raises(ValueError):
        chernoff_lower_tail(10, 1.5)


@pytest.mark.parametrize("delta", [0.25, 0.5, 1.0])
def test_chernoff_bounds_monte_carlo(delta):
    rng = np.random.default_rng(2024)
    samples = 100_000
    x = rng.binomial(40, 0.5, size=samples)
    mu = 20.0
    for freq, bound in [
        (np.mean(x >= (1 + delta) * mu), chernoff_upper_tail(mu, delta)),
        (np.mean(x <= (1 - delta) * mu), chernoff_lower_tail(mu, delta)),
    ]:
        slack = 3 * math.sqrt(max(bound * (1 - bound), 1e-12) / samples)
        assert freq <= bound + slack
