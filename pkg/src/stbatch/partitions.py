"""Partitions of ``[n]``, ``u``-complete families, and the code built from them.

A ``v``-partition is stored as its label vector in ``[v]^n``: coordinate ``i``
belongs to part ``labels[i]``.  Parts may be empty.

Given a ``u``-complete family of ``S`` partitions and a ``(u, t)``-batch base
code of dimension ``n0 = n - u(v - 1)``, the composed code appends, for every
member and every part, the base parity symbols of the part's restriction of
the information word (zero-padded to length ``n0``).  It is an
``(uv, t)``-batch code with redundancy ``v * S * r0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import (
    RecoveryPlan,
    RequestMultiset,
    SystematicCode,
    solve_plan_exact,
)
from .qcalc import binom, partition_family_size_bound

EXHAUSTIVE_CAP = 10**6

BaseServer = Callable[[SystematicCode, RequestMultiset], "RecoveryPlan | None"]


@dataclass(frozen=True)
class VPartition:
    labels: tuple[int, ...]
    v: int

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if self.v < 1:
            raise ValueError("v must be positive")
        if any(not 0 <= x < self.v for x in self.labels):
            raise ValueError("labels must lie in range(v)")

    @classmethod
    def from_parts(cls, parts: Sequence[Iterable[int]], n: int) -> "VPartition":
        labels = [-1] * n
        for j, part in enumerate(parts):
            for i in part:
                if labels[i] != -1:
                    raise ValueError(f"element {i} appears in two parts")
                labels[i] = j
        if -1 in labels:
            raise ValueError("parts do not cover range(n)")
        return cls(tuple(labels), len(parts))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def parts(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.v)]
        for i, x in enumerate(self.labels):
            out[x].append(i)
        return out


def covers(partition: VPartition, subset: Iterable[int], u: int) -> bool:
    """True iff every part meets ``subset`` in exactly ``u`` elements."""
    subset = list(subset)
    if len(subset) != u * partition.v:
        raise ValueError(f"subset must have u*v = {u * partition.v} elements")
    counts = [0] * partition.v
    for i in subset:
        counts[partition.labels[i]] += 1
    return all(c == u for c in counts)


@dataclass(frozen=True)
class PartitionFamily:
    n: int
    u: int
    v: int
    members: tuple[VPartition, ...]

    def __post_init__(self):
        for p in self.members:
            if p.v != self.v or p.n != self.n:
                raise ValueError("every member must be a v-partition of range(n)")

    def __len__(self) -> int:
        return len(self.members)

    def covering_member(self, subset: Sequence[int]) -> int | None:
        for k, p in enumerate(self.members):
            if covers(p, subset, self.u):
                return k
        return None

    def to_text(self) -> str:
        """One member per line as its label vector (1-based labels)."""
        return "".join(" ".join(str(x + 1) for x in p.labels) + "\n" for p in self.members)

    @classmethod
    def from_text(cls, text: str, u: int, v: int) -> "PartitionFamily":
        members = []
        for line in text.splitlines():
            if line.strip():
                members.append(VPartition(tuple(int(x) - 1 for x in line.split()), v))
        if not members:
            raise ValueError("empty family")
        return cls(members[0].n, u, v, tuple(members))


def verify_complete(family: PartitionFamily, cap: int = EXHAUSTIVE_CAP) -> tuple[bool, tuple[int, ...] | None]:
    """Exhaustively check ``u``-completeness.

    Returns ``(True, None)`` or ``(False, first_uncovered_subset)``.
    """
    n, size = family.n, family.u * family.v
    if size > n:
        raise ValueError("u*v exceeds n")
    if binom(n, size) > cap:
        raise ValueError(f"C({n},{size}) subsets exceed the cap {cap}")
    labels = np.array([p.labels for p in family.members], dtype=np.int64).reshape(len(family), n)
    for subset in itertools.combinations(range(n), size):
        if not len(family):
            return False, subset
        sub = labels[:, subset]
        counts = np.stack([(sub == j).sum(axis=1) for j in range(family.v)], axis=1)
        if not (counts == family.u).all(axis=1).any():
            return False, subset
    return True, None


class FamilySearchExhausted(RuntimeError):
    pass


def random_complete_family(
    n: int,
    u: int,
    v: int,
    seed: int = 0,
    max_restarts: int = 20,
    size: int | None = None,
) -> PartitionFamily:
    """Draw uniform vectors of ``[v]^n`` until they form a ``u``-complete family.

    Each attempt draws ``size`` vectors (default: the counting bound
    ``partition_family_size_bound(n, u, v)``) and keeps them if
    :func:`verify_complete` accepts.  Raises :class:`FamilySearchExhausted`
    after ``max_restarts`` failed attempts.
    """
    if size is None:
        size = partition_family_size_bound(n, u, v)
    rng = np.random.default_rng(seed)
    for attempt in range(max_restarts):
        draws = rng.integers(0, v, size=(size, n))
        family = PartitionFamily(n, u, v, tuple(VPartition(tuple(row.tolist()), v) for row in draws))
        ok, _ = verify_complete(family)
        if ok:
            return family
    raise FamilySearchExhausted(f"no {u}-complete family of {size} partitions after {max_restarts} attempts")


# -- composed code ------------------------------------------------------------


def _check_base(family: PartitionFamily, base_code: SystematicCode) -> int:
    n0 = family.n - family.u * (family.v - 1)
    if base_code.n != n0:
        raise ValueError(f"base code dimension {base_code.n} != n - u(v-1) = {n0}")
    for k, p in enumerate(family.members):
        for j, part in enumerate(p.parts):
            if len(part) > n0:
                raise ValueError(f"member {k} part {j} has {len(part)} > n0 = {n0} elements")
    return n0


def recursive_code(family: PartitionFamily, base_code: SystematicCode) -> SystematicCode:
    """Systematic code whose parity block is the base encoder applied to every
    (member, part) restriction, in member-major order."""
    n0 = _check_base(family, base_code)
    base_parity = base_code.columns[n0:]
    parity = []
    for p in family.members:
        for part in p.parts:
            for col in base_parity:
                parity.append(sum(1 << part[k] for k in range(len(part)) if (col >> k) & 1))
    return SystematicCode.from_columns(
        family.n,
        parity,
        label=f"recursive(n={family.n}, u={family.u}, v={family.v}, S={len(family)}, base={base_code.label})",
    )


def _pad_indices(distinct: Sequence[int], size: int, n: int) -> list[int]:
    chosen = list(distinct)
    present = set(chosen)
    for i in range(n):
        if len(chosen) >= size:
            break
        if i not in present:
            chosen.append(i)
            present.add(i)
    return chosen


def _exact_base_server(code: SystematicCode, request: RequestMultiset):
    return solve_plan_exact(code, request)


class ServeFailure(RuntimeError):
    pass


def recursive_serve(
    family: PartitionFamily,
    base_code: SystematicCode,
    request: RequestMultiset,
    base_server: BaseServer | None = None,
) -> RecoveryPlan:
    """Serve an index request on ``recursive_code(family, base_code)``.

    Finds a member covering the requested indices (padded with the smallest
    unused indices up to ``u*v``), serves each part's share on the base code
    and maps base columns into the composed layout.  Base columns on padding
    coordinates carry zero and are dropped.
    """
    if request.functional:
        raise ValueError("the composed code serves index requests")
    n0 = _check_base(family, base_code)
    n, size = family.n, family.u * family.v
    r0 = base_code.redundancy
    if request.s > size:
        raise ValueError(f"request has {request.s} distinct indices, more than u*v = {size}")
    if any(t >= n for t in request.targets):
        raise ValueError("request index out of range")
    padded = _pad_indices(request.targets, size, n)
    member = family.covering_member(padded)
    if member is None:
        raise ServeFailure(f"no member covers {padded}; family is not {family.u}-complete")
    serve = base_server or _exact_base_server
    mult = dict(request.entries)
    sets: dict[int, list[frozenset[int]]] = {t: [] for t in request.targets}
    parts = family.members[member].parts
    for j, part in enumerate(parts):
        local = {g: k for k, g in enumerate(part)}
        sub = [(local[t], mult[t]) for t in request.targets if t in local]
        if not sub:
            continue
        sub_plan = serve(base_code, RequestMultiset.index(sub))
        if sub_plan is None:
            raise ServeFailure(f"base code could not serve part {j} of member {member}: {sub}")
        offset = n + (member * family.v + j) * r0
        for local_target, local_sets in sub_plan.groups:
            target = part[local_target]
            for lset in local_sets:
                mapped = set()
                for c in lset:
                    if c < n0:
                        if c < len(part):
                            mapped.add(part[c])
                    else:
                        mapped.add(offset + c - n0)
                sets[target].append(frozenset(mapped))
    return RecoveryPlan.from_dict(sets, order=request.targets)
