"""Systematic codes, request multisets, recovery plans and their verifiers.

Indices are 0-based throughout the library: information symbol ``i`` is
column ``i`` of a systematic generator matrix.  The command line converts to
and from the 1-based ``[N]`` numbering.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .gf2 import BitMatrix, to_bits, weight

DEFAULT_CAP = 10**6
CANDIDATE_CAP = 4 * 10**6


@dataclass(frozen=True)
class SystematicCode:
    """A binary systematic linear code given by its generator matrix.

    All-zero columns are permitted: padding in the partition-based
    construction produces them and they still count towards redundancy.
    """

    generator: BitMatrix
    label: str = ""

    def __post_init__(self):
        if not self.generator.is_systematic():
            raise ValueError("generator must start with the identity block")

    @property
    def n(self) -> int:
        return self.generator.n_rows

    @property
    def length(self) -> int:
        return self.generator.n_cols

    @property
    def redundancy(self) -> int:
        return self.length - self.n

    @property
    def columns(self) -> tuple[int, ...]:
        return self.generator.columns

    def has_zero_column(self) -> bool:
        return any(c == 0 for c in self.columns)

    @classmethod
    def from_columns(cls, n: int, parity_columns: Iterable[int], label: str = "") -> "SystematicCode":
        cols = tuple(1 << i for i in range(n)) + tuple(parity_columns)
        return cls(BitMatrix(n, cols), label)

    def encode(self, info: int) -> int:
        """Codeword bits (over column positions) for an information word."""
        out = 0
        for j, c in enumerate(self.columns):
            if weight(c & info) & 1:
                out |= 1 << j
        return out


def replication_code(n: int, copies: int) -> SystematicCode:
    """Each information symbol stored ``copies`` times."""
    if copies < 1:
        raise ValueError("need at least one copy")
    parity = [1 << i for _ in range(copies - 1) for i in range(n)]
    return SystematicCode.from_columns(n, parity, label=f"replication(n={n}, copies={copies})")


@dataclass(frozen=True)
class RequestMultiset:
    """``(target, multiplicity)`` pairs.

    Index mode: targets are information indices in ``range(n)``.
    Functional mode: targets are nonzero request vectors (ints).
    """

    entries: tuple[tuple[int, int], ...]
    functional: bool = False

    def __post_init__(self):
        entries = tuple((int(t), int(a)) for t, a in self.entries)
        object.__setattr__(self, "entries", entries)
        targets = [t for t, _ in entries]
        if len(set(targets)) != len(targets):
            raise ValueError("request targets must be pairwise distinct")
        for t, a in entries:
            if a < 1:
                raise ValueError("multiplicities must be positive")
            if self.functional and t <= 0:
                raise ValueError("functional requests must be nonzero vectors")
            if not self.functional and t < 0:
                raise ValueError("index requests must be non-negative")

    @classmethod
    def index(cls, pairs) -> "RequestMultiset":
        return cls(tuple(pairs), functional=False)

    @classmethod
    def vectors(cls, pairs) -> "RequestMultiset":
        return cls(tuple(pairs), functional=True)

    @property
    def s(self) -> int:
        return len(self.entries)

    @property
    def t(self) -> int:
        return sum(a for _, a in self.entries)

    @property
    def targets(self) -> list[int]:
        return [t for t, _ in self.entries]

    def target_vector(self, target: int, n: int) -> int:
        if self.functional:
            if target >= 1 << n:
                raise ValueError(f"request vector {target:#x} longer than n={n}")
            return target
        if target >= n:
            raise ValueError(f"index {target} out of range for n={n}")
        return 1 << target

    def demand_vectors(self, n: int) -> list[tuple[int, int]]:
        return [(self.target_vector(t, n), a) for t, a in self.entries]


@dataclass(frozen=True)
class RecoveryPlan:
    """Recovering sets grouped by target; ``groups[k] = (target, sets)``."""

    groups: tuple[tuple[int, tuple[frozenset[int], ...]], ...]

    @classmethod
    def from_dict(cls, sets_by_target: dict[int, Sequence[Iterable[int]]], order: Sequence[int] | None = None):
        keys = list(order) if order is not None else list(sets_by_target)
        return cls(tuple((k, tuple(frozenset(s) for s in sets_by_target[k])) for k in keys))

    def sets_for(self, target: int) -> tuple[frozenset[int], ...]:
        for t, sets in self.groups:
            if t == target:
                return sets
        raise KeyError(target)

    def all_sets(self) -> list[frozenset[int]]:
        return [s for _, sets in self.groups for s in sets]

    @property
    def size(self) -> int:
        return sum(len(sets) for _, sets in self.groups)

    def to_json_obj(self, code: SystematicCode | None = None, functional: bool = True) -> dict:
        """``{"targets": [{"vector": hex, "sets": [[col, ...], ...]}]}``, 1-based columns."""
        out = []
        for target, sets in self.groups:
            vec = target if functional else 1 << target
            entry = {"vector": format(vec, "x"), "sets": [sorted(c + 1 for c in s) for s in sets]}
            if not functional:
                entry["index"] = target + 1
            if code is not None:
                entry["columns"] = [[format(code.columns[c], "x") for c in sorted(s)] for s in sets]
            out.append(entry)
        return {"targets": out}

    def to_json(self, code: SystematicCode | None = None, functional: bool = True) -> str:
        return json.dumps(self.to_json_obj(code, functional), sort_keys=True)


@dataclass(frozen=True)
class PlanCheck:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_plan(code: SystematicCode, request: RequestMultiset, plan: RecoveryPlan) -> PlanCheck:
    """Check multiplicities, XOR sums and pairwise disjointness of ``plan``."""
    want = dict(request.entries)
    got = {t: sets for t, sets in plan.groups}
    if len(got) != len(plan.groups):
        raise ValueError("plan lists a target more than once")
    if set(got) != set(want):
        return PlanCheck(False, f"plan targets {sorted(got)} differ from request targets {sorted(want)}")
    seen: dict[int, int] = {}
    for target, sets in plan.groups:
        if len(sets) != want[target]:
            return PlanCheck(False, f"target {target:#x}: {len(sets)} sets for multiplicity {want[target]}")
        goal = request.target_vector(target, code.n)
        for k, rset in enumerate(sets):
            if not rset:
                return PlanCheck(False, f"target {target:#x} set {k} is empty")
            acc = 0
            for c in rset:
                if not 0 <= c < code.length:
                    return PlanCheck(False, f"column {c} out of range")
                if c in seen:
                    return PlanCheck(False, f"column {c} reused (targets {seen[c]:#x} and {target:#x})")
                seen[c] = target
                acc ^= code.columns[c]
            if acc != goal:
                return PlanCheck(
                    False,
                    f"target {target:#x} set {k} sums to {to_bits(acc, code.n)}, want {to_bits(goal, code.n)}",
                )
    return PlanCheck(True)


# -- exact search -------------------------------------------------------------


class CandidateIndex:
    """All column subsets of size <= ``max_set_size`` grouped by XOR value.

    Subsets are stored as bitmasks over column positions, ordered by size and
    then lexicographically in column order.  All-zero columns are skipped:
    dropping one from a recovering set leaves the sum unchanged.
    """

    def __init__(self, columns: Sequence[int], max_set_size: int | None = None, cap: int = CANDIDATE_CAP):
        self.columns = tuple(columns)
        usable = [j for j, c in enumerate(self.columns) if c]
        big_n = len(usable)
        self.max_set_size = big_n if max_set_size is None else min(max_set_size, big_n)
        if max_set_size is not None and max_set_size < 1:
            raise ValueError("max_set_size must be at least 1")
        total = sum(math.comb(big_n, k) for k in range(1, self.max_set_size + 1))
        if total > cap:
            raise ValueError(
                f"{total} candidate subsets exceed the cap {cap}; pass a smaller max_set_size"
            )
        self._by_value: dict[int, list[int]] = {}
        for size in range(1, self.max_set_size + 1):
            for combo in itertools.combinations(usable, size):
                acc = 0
                mask = 0
                for j in combo:
                    acc ^= self.columns[j]
                    mask |= 1 << j
                self._by_value.setdefault(acc, []).append(mask)

    def candidates(self, value: int) -> list[int]:
        return self._by_value.get(value, [])


def _mask_to_set(mask: int) -> frozenset[int]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return frozenset(out)


def search_disjoint(
    candidates: Sequence[Sequence[int]], demands: Sequence[int], forbidden: int = 0
) -> list[list[int]] | None:
    """Pick ``demands[k]`` pairwise-disjoint masks from ``candidates[k]`` for every k.

    Backtracking: the target with the fewest still-usable candidates is
    branched on first; failed ``(used, remaining)`` states are memoised.
    Returns the chosen masks per target, or ``None``.
    """
    k_count = len(demands)
    chosen: list[list[int]] = [[] for _ in range(k_count)]
    failed: set[tuple] = set()
    start = [0] * k_count

    def rec(used: int, remaining: list[int]) -> bool:
        if not any(remaining):
            return True
        key = (used, tuple(remaining), tuple(st if r else 0 for st, r in zip(start, remaining)))
        if key in failed:
            return False
        best = None
        best_opts: list[tuple[int, int]] = []
        for k in range(k_count):
            need = remaining[k]
            if not need:
                continue
            cands = candidates[k]
            opts = [(i, cands[i]) for i in range(start[k], len(cands)) if not (cands[i] & used)]
            if len(opts) < need:
                failed.add(key)
                return False
            if best is None or len(opts) < len(best_opts):
                best, best_opts = k, opts
        for i, mask in best_opts:
            saved = start[best]
            start[best] = i + 1
            chosen[best].append(mask)
            remaining[best] -= 1
            if rec(used | mask, remaining):
                return True
            remaining[best] += 1
            chosen[best].pop()
            start[best] = saved
        failed.add(key)
        return False

    # start[k] orders the sets of target k to break symmetry; it is part of the
    # memo key because it restricts the subtree.
    if rec(forbidden, list(demands)):
        return chosen
    return None


def solve_plan_exact(
    code: SystematicCode,
    request: RequestMultiset,
    max_set_size: int | None = None,
    index: CandidateIndex | None = None,
) -> RecoveryPlan | None:
    """Find a recovery plan by exhaustive search, or ``None`` if none exists
    within ``max_set_size``."""
    if index is None:
        index = CandidateIndex(code.columns, max_set_size)
    demands = request.demand_vectors(code.n)
    cands = [index.candidates(v) for v, _ in demands]
    found = search_disjoint(cands, [a for _, a in demands])
    if found is None:
        return None
    groups = tuple(
        (target, tuple(_mask_to_set(m) for m in masks)) for target, masks in zip(request.targets, found)
    )
    return RecoveryPlan(groups)


# -- batch-property verification ---------------------------------------------


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of ``parts`` positive ints summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def _target_pool(code: SystematicCode, functional: bool) -> list[int]:
    if functional:
        return list(range(1, 1 << code.n))
    return list(range(code.n))


def count_multisets(pool_size: int, s: int, t: int, allow_fewer: bool = True) -> int:
    totals = range(1, t + 1) if allow_fewer else [t]
    count = 0
    for total in totals:
        for k in range(1, min(s, total) + 1):
            count += math.comb(pool_size, k) * math.comb(total - 1, k - 1)
    return count


def iter_multisets(pool: Sequence[int], s: int, t: int, allow_fewer: bool = True):
    """Legal request entries in canonical order: total, then #distinct, then
    targets, then multiplicities."""
    totals = range(1, t + 1) if allow_fewer else [t]
    for total in totals:
        for k in range(1, min(s, total) + 1):
            for targets in itertools.combinations(pool, k):
                for mults in compositions(total, k):
                    yield tuple(zip(targets, mults))


def sample_multiset(rng: np.random.Generator, pool: Sequence[int], s: int, t: int) -> tuple[tuple[int, int], ...]:
    """``s`` distinct targets drawn uniformly, then a uniform composition of
    ``t`` into ``s`` positive parts."""
    idx = sorted(rng.choice(len(pool), size=s, replace=False).tolist())
    cuts = sorted(rng.choice(np.arange(1, t), size=s - 1, replace=False).tolist()) if s > 1 else []
    bounds = [0] + cuts + [t]
    mults = [bounds[i + 1] - bounds[i] for i in range(s)]
    return tuple((pool[i], a) for i, a in zip(idx, mults))


@dataclass
class BatchReport:
    passed: bool
    checked: int
    s: int
    t: int
    functional: bool
    mode: str
    seed: int | None = None
    max_set_size: int | None = None
    first_failure: tuple[tuple[int, int], ...] | None = None
    extra: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        fail = None
        if self.first_failure is not None:
            fail = [
                {"target": format(t, "x") if self.functional else t + 1, "multiplicity": a}
                for t, a in self.first_failure
            ]
        return {
            "passed": self.passed,
            "checked": self.checked,
            "s": self.s,
            "t": self.t,
            "functional": self.functional,
            "mode": self.mode,
            "seed": self.seed,
            "max_set_size": self.max_set_size,
            "first_failure": fail,
            **self.extra,
        }


def _check_chunk(args):
    columns, n, max_set_size, functional, chunk = args
    index = CandidateIndex(columns, max_set_size)
    code = SystematicCode(BitMatrix(n, columns))
    for pos, entries in chunk:
        req = RequestMultiset(entries, functional=functional)
        if solve_plan_exact(code, req, index=index) is None:
            return pos, entries
    return None


def verify_batch_property(
    code: SystematicCode,
    s: int,
    t: int,
    mode: str = "exhaustive",
    *,
    functional: bool = False,
    max_set_size: int | None = None,
    samples: int = 1000,
    seed: int = 0,
    allow_fewer: bool = True,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> BatchReport:
    """Check the ``(s, t)``-batch property by solving every (or a sample of)
    legal request multiset with :func:`solve_plan_exact`.

    ``allow_fewer`` additionally checks all totals below ``t``.  Sampled mode
    draws exactly ``s`` distinct targets and total ``t``; the same seed gives
    the same report.
    """
    if not 1 <= s <= t:
        raise ValueError("need 1 <= s <= t")
    pool = _target_pool(code, functional)
    if s > len(pool):
        raise ValueError("s exceeds the number of possible targets")
    if mode == "exhaustive":
        total = count_multisets(len(pool), s, t, allow_fewer)
        if total > cap:
            raise ValueError(f"{total} multisets exceed the exhaustive cap {cap}")
        items = iter_multisets(pool, s, t, allow_fewer)
        report_seed = None
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        items = (sample_multiset(rng, pool, s, t) for _ in range(samples))
        report_seed = seed
    else:
        raise ValueError(f"unknown mode {mode!r}")

    report = BatchReport(True, 0, s, t, functional, mode, report_seed, max_set_size)
    numbered = list(enumerate(items))
    report.checked = len(numbered)
    if workers <= 1 or len(numbered) < 2 * workers:
        index = CandidateIndex(code.columns, max_set_size)
        for _, entries in numbered:
            req = RequestMultiset(entries, functional=functional)
            if solve_plan_exact(code, req, index=index) is None:
                report.passed = False
                report.first_failure = entries
                break
        return report

    chunk_size = -(-len(numbered) // (workers * 4))
    chunks = [numbered[i : i + chunk_size] for i in range(0, len(numbered), chunk_size)]
    args = [(code.columns, code.n, max_set_size, functional, c) for c in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool_exec:
        results = [r for r in pool_exec.map(_check_chunk, args) if r is not None]
    if results:
        report.passed = False
        report.first_failure = min(results)[1]
    return report


def default_workers() -> int:
    value = os.environ.get("STBATCH_WORKERS")
    return int(value) if value else 1
