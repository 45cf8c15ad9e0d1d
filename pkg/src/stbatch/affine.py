"""Affine planes over prime fields and the randomized line-parity batch code.

Points of the plane of order ``q`` are pairs ``(x, y)`` over ``F_q`` and are
numbered ``x * q + y``; point ``k`` is information symbol ``k``.  Lines are
numbered ``a * q + b`` for ``y = a x + b`` and ``q * q + c`` for ``x = c``.

The code picks each line with probability ``p1`` and, on every picked line
``L``, each point with probability ``p2``; the chosen points ``R(L)`` define
one parity symbol (their sum) per line with ``R(L)`` nonempty.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .model import RecoveryPlan, RequestMultiset, SystematicCode, sample_multiset


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, math.isqrt(q) + 1))


class AffinePlane:
    """The affine plane ``AG(2, q)`` for prime ``q``; axioms are checked on build."""

    def __init__(self, q: int, check: bool = True):
        if not is_prime(q):
            raise ValueError(f"q={q} is not prime; only prime orders are supported")
        self.q = q
        lines = []
        for a in range(q):
            for b in range(q):
                lines.append(tuple(sorted(x * q + (a * x + b) % q for x in range(q))))
        for c in range(q):
            lines.append(tuple(c * q + y for y in range(q)))
        self.lines: tuple[tuple[int, ...], ...] = tuple(lines)
        incidence: list[list[int]] = [[] for _ in range(q * q)]
        for k, line in enumerate(self.lines):
            for p in line:
                incidence[p].append(k)
        self.point_lines: tuple[tuple[int, ...], ...] = tuple(tuple(x) for x in incidence)
        if check:
            problem = self.check_axioms()
            if problem:
                raise AssertionError(problem)

    @property
    def n_points(self) -> int:
        return self.q * self.q

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def point(self, k: int) -> tuple[int, int]:
        return divmod(k, self.q)

    def point_index(self, x: int, y: int) -> int:
        return (x % self.q) * self.q + (y % self.q)

    def check_axioms(self) -> str:
        """Empty string if every axiom holds, otherwise the first violation."""
        q = self.q
        if self.n_lines != q * q + q:
            return f"{self.n_lines} lines, expected {q * q + q}"
        for k, line in enumerate(self.lines):
            if len(set(line)) != q:
                return f"line {k} has {len(set(line))} points"
        for p, inc in enumerate(self.point_lines):
            if len(inc) != q + 1:
                return f"point {p} lies on {len(inc)} lines"
        masks = [sum(1 << p for p in line) for line in self.lines]
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                if bin(masks[i] & masks[j]).count("1") > 1:
                    return f"lines {i} and {j} share more than one point"
        incidence = [set(inc) for inc in self.point_lines]
        for a in range(self.n_points):
            for b in range(a + 1, self.n_points):
                if len(incidence[a] & incidence[b]) != 1:
                    return f"points {a} and {b} do not share exactly one line"
        return ""

    def line_through(self, p1: int, p2: int) -> int:
        common = set(self.point_lines[p1]) & set(self.point_lines[p2])
        if p1 == p2 or len(common) != 1:
            raise ValueError("need two distinct points")
        return common.pop()


def build_affine_plane(q: int) -> AffinePlane:
    return AffinePlane(q)


def default_parameters(t: int, q: int) -> tuple[float, float]:
    """``(p1, p2)`` with ``p2 = 1/(2 sqrt(2t))`` and
    ``p1 = min(1, 24 sqrt(2) t^(3/2) / q)``."""
    if t < 1:
        raise ValueError("t must be positive")
    p2 = 1 / (2 * math.sqrt(2 * t))
    p1 = min(1.0, 24 * math.sqrt(2) * t**1.5 / q)
    return p1, p2


@dataclass(frozen=True)
class RandomBatchCode:
    plane: AffinePlane
    chosen: tuple[int, ...]
    subsets: dict[int, tuple[int, ...]]
    p1: float
    p2: float
    seed: int | None = None

    @cached_property
    def parity_lines(self) -> tuple[int, ...]:
        """Chosen lines with nonempty ``R(L)``, in parity-column order."""
        return tuple(k for k in self.chosen if self.subsets[k])

    @cached_property
    def column_of_line(self) -> dict[int, int]:
        n = self.plane.n_points
        return {k: n + pos for pos, k in enumerate(self.parity_lines)}

    @cached_property
    def code(self) -> SystematicCode:
        parity = [sum(1 << p for p in self.subsets[k]) for k in self.parity_lines]
        return SystematicCode.from_columns(
            self.plane.n_points,
            parity,
            label=f"affine(q={self.plane.q}, p1={self.p1:g}, p2={self.p2:g}, seed={self.seed})",
        )

    @property
    def redundancy(self) -> int:
        return len(self.parity_lines)

    def metadata(self) -> dict:
        return {
            "q": self.plane.q,
            "p1": self.p1,
            "p2": self.p2,
            "seed": self.seed,
            "lines": [
                {"line": k, "column": self.column_of_line[k] + 1, "points": [p + 1 for p in self.subsets[k]]}
                for k in self.parity_lines
            ],
        }

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True)

    @classmethod
    def from_metadata(cls, meta: dict) -> "RandomBatchCode":
        plane = AffinePlane(int(meta["q"]))
        subsets = {int(e["line"]): tuple(p - 1 for p in e["points"]) for e in meta["lines"]}
        chosen = tuple(int(e["line"]) for e in meta["lines"])
        return cls(plane, chosen, subsets, float(meta["p1"]), float(meta["p2"]), meta.get("seed"))


def sample_construction(plane: AffinePlane, p1: float, p2: float, seed: int = 0) -> RandomBatchCode:
    """Bernoulli(p1) line selection over all lines, then a Bernoulli(p2) point
    draw for every line (kept only for selected lines)."""
    if not (0 <= p1 <= 1 and 0 <= p2 <= 1):
        raise ValueError("p1 and p2 must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    picked = rng.random(plane.n_lines) < p1
    points = rng.random((plane.n_lines, plane.q)) < p2
    chosen = tuple(int(k) for k in np.flatnonzero(picked))
    subsets = {k: tuple(p for p, keep in zip(plane.lines[k], points[k]) if keep) for k in chosen}
    return RandomBatchCode(plane, chosen, subsets, p1, p2, seed)


class ServingFailed(RuntimeError):
    def __init__(self, target: int, found: int, needed: int):
        super().__init__(f"target {target}: found {found} of {needed} recovering sets")
        self.target = target
        self.found = found
        self.needed = needed


def serve_requests(code: RandomBatchCode, request: RequestMultiset, allow_systematic: bool = False) -> RecoveryPlan:
    """Greedy line-based serving.

    Targets are handled in request order.  A line ``L`` may serve point ``x``
    when ``x`` is in ``R(L)``, ``L`` holds no other requested point, and
    ``R(L)`` misses every point already consumed; its recovering set is the
    parity of ``L`` plus ``R(L) - {x}``.  Eligible lines are taken by
    ascending ``|R(L)|``.  With ``allow_systematic`` the singleton ``{x}`` is
    used as each target's first set.

    Raises :class:`ServingFailed` when a target runs out of lines.
    """
    if request.functional:
        raise ValueError("affine codes serve index requests")
    plane = code.plane
    q = plane.q
    for target, a in request.entries:
        if target >= plane.n_points:
            raise ValueError(f"point {target} out of range")
        if a > q + 1:
            raise ValueError(f"multiplicity {a} exceeds q + 1 = {q + 1}")
    requested = set(request.targets)
    consumed: set[int] = set()
    sets: dict[int, list[frozenset[int]]] = {}
    for target, a in request.entries:
        found: list[frozenset[int]] = []
        if allow_systematic:
            found.append(frozenset([target]))
            consumed.add(target)
        others = requested - {target}
        eligible = []
        for k in plane.point_lines[target]:
            r = code.subsets.get(k)
            if not r or target not in r or k not in code.column_of_line:
                continue
            if others.intersection(plane.lines[k]):
                continue
            eligible.append((len(r), k))
        eligible.sort()
        for _, k in eligible:
            if len(found) >= a:
                break
            rest = set(code.subsets[k]) - {target}
            if rest & consumed:
                continue
            consumed |= rest
            found.append(frozenset(rest | {code.column_of_line[k]}))
        if len(found) < a:
            raise ServingFailed(target, len(found), a)
        sets[target] = found[:a]
    return RecoveryPlan.from_dict(sets, order=request.targets)


@dataclass
class FailureStats:
    q: int
    t: int
    s: int
    p1: float
    p2: float
    seed: int
    trials: int
    failures: int
    invalid_plans: int
    redundancies: list[int] = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def success_rate(self) -> float:
        return 1.0 - self.failure_rate

    @property
    def mean_redundancy(self) -> float:
        return float(np.mean(self.redundancies)) if self.redundancies else 0.0

    @property
    def redundancy_reference(self) -> float:
        """``3 * p1 * n`` with ``n = q^2``."""
        return 3 * self.p1 * self.q * self.q

    @property
    def within_reference(self) -> float:
        """Fraction of sampled codes with redundancy at most the reference line."""
        if not self.redundancies:
            return 1.0
        ref = self.redundancy_reference
        return sum(r <= ref for r in self.redundancies) / len(self.redundancies)

    def to_json_obj(self) -> dict:
        return {
            "q": self.q,
            "t": self.t,
            "s": self.s,
            "p1": self.p1,
            "p2": self.p2,
            "seed": self.seed,
            "trials": self.trials,
            "failures": self.failures,
            "failure_rate": self.failure_rate,
            "invalid_plans": self.invalid_plans,
            "mean_redundancy": self.mean_redundancy,
            "redundancy_reference": self.redundancy_reference,
            "within_reference": self.within_reference,
        }


def _code_cell(args) -> tuple[int, int, int]:
    from .model import verify_plan

    q, t, s, p1, p2, code_seed, request_samples, allow_systematic = args
    plane = AffinePlane(q, check=False)
    code = sample_construction(plane, p1, p2, seed=code_seed)
    rng = np.random.default_rng([code_seed, 1])
    failures = invalid = 0
    pool = list(range(plane.n_points))
    for _ in range(request_samples):
        req = RequestMultiset.index(sample_multiset(rng, pool, s, t))
        try:
            plan = serve_requests(code, req, allow_systematic=allow_systematic)
        except ServingFailed:
            failures += 1
            continue
        if not verify_plan(code.code, req, plan):
            invalid += 1
    return failures, invalid, code.redundancy


def estimate_failure_rate(
    q: int,
    t: int,
    s: int,
    p1: float | None = None,
    p2: float | None = None,
    code_samples: int = 50,
    request_samples: int = 100,
    seed: int = 0,
    allow_systematic: bool = False,
    workers: int = 1,
) -> FailureStats:
    """Sample codes and requests; count serving failures.

    Each code gets its own seed from ``SeedSequence(seed)``, so results do not
    depend on ``workers``.  ``p1``/``p2`` default to :func:`default_parameters`.
    """
    if not 1 <= s <= t:
        raise ValueError("need 1 <= s <= t")
    d1, d2 = default_parameters(t, q)
    p1 = d1 if p1 is None else p1
    p2 = d2 if p2 is None else p2
    AffinePlane(q, check=False)
    seeds = [int(ss.generate_state(1)[0]) for ss in np.random.SeedSequence(seed).spawn(code_samples)]
    args = [(q, t, s, p1, p2, cs, request_samples, allow_systematic) for cs in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_code_cell, args))
    else:
        cells = [_code_cell(a) for a in args]
    return FailureStats(
        q=q,
        t=t,
        s=s,
        p1=p1,
        p2=p2,
        seed=seed,
        trials=code_samples * request_samples,
        failures=sum(c[0] for c in cells),
        invalid_plans=sum(c[1] for c in cells),
        redundancies=[c[2] for c in cells],
    )
