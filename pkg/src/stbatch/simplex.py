"""Simplex codes and functional batch serving through coset graphs.

The ``[2^n - 1, n]`` simplex code has every nonzero vector of ``F_2^n`` as a
column, so a plan can be written with column *vectors*: a recovering set for
``v`` is a singleton ``{v}`` or a pair ``{x, x + v}``.

For requested vectors ``S = (v_1, ..., v_s)`` the coset graph has one part per
``v_j`` whose vertices are the 2-sets ``{x, x + v_j}``; vertices of different
parts are adjacent when they intersect.  The pruned graph drops the edges
between the vertices ``{0, v_j}``, which become the singletons ``{v_j}``.  An
independent set with ``a_j`` vertices in part ``j`` is a recovery plan.  The
graph splits into one component per coset of ``<S>``; all components other
than ``<S>`` itself are translates of each other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .gf2 import BitMatrix, change_of_basis, echelon, in_span, inverse, rank_of, reduce_vector, span
from .model import (
    CandidateIndex,
    RecoveryPlan,
    RequestMultiset,
    SystematicCode,
    search_disjoint,
    verify_plan,
)

Sets = dict[int, list[frozenset[int]]]


class CapabilityExceeded(ValueError):
    """No implemented route could serve the request."""


# -- the code -----------------------------------------------------------------


@lru_cache(maxsize=None)
def simplex_columns(n: int) -> tuple[int, ...]:
    """Standard basis first, then the other nonzero vectors ascending."""
    if n < 1:
        raise ValueError("n must be positive")
    basis = tuple(1 << i for i in range(n))
    rest = tuple(v for v in range(1, 1 << n) if v & (v - 1))
    return basis + rest


@lru_cache(maxsize=None)
def column_of_vector(n: int) -> dict[int, int]:
    return {v: j for j, v in enumerate(simplex_columns(n))}


def simplex_code(n: int) -> SystematicCode:
    cols = simplex_columns(n)
    return SystematicCode(BitMatrix(n, cols), label=f"simplex(n={n})")


# -- coset graph --------------------------------------------------------------


@dataclass(frozen=True, order=True)
class CosetVertex:
    """The 2-set ``{representative, representative + direction}`` in part ``part``."""

    part: int
    representative: int
    direction: int

    @classmethod
    def of(cls, part: int, x: int, direction: int) -> "CosetVertex":
        return cls(part, min(x, x ^ direction), direction)

    @property
    def points(self) -> tuple[int, int]:
        return self.representative, self.representative ^ self.direction

    def shifted(self, d: int) -> "CosetVertex":
        return CosetVertex.of(self.part, self.representative ^ d, self.direction)


@dataclass
class CosetGraph:
    S: tuple[int, ...]
    U_basis: tuple[int, ...]
    pruned: bool
    parts: tuple[tuple[CosetVertex, ...], ...]
    adjacency: dict[CosetVertex, frozenset[CosetVertex]]

    @property
    def s(self) -> int:
        return len(self.S)

    def edges(self) -> set[frozenset[CosetVertex]]:
        return {frozenset((a, b)) for a, nbrs in self.adjacency.items() for b in nbrs}

    def is_independent(self, vertices: Sequence[CosetVertex]) -> bool:
        chosen = set(vertices)
        if len(chosen) != len(vertices):
            return False
        return all(not (self.adjacency[v] & chosen) for v in chosen)


def _check_S(S: Sequence[int]) -> tuple[int, ...]:
    S = tuple(int(v) for v in S)
    if not S:
        raise ValueError("S must be nonempty")
    if len(set(S)) != len(S) or any(v <= 0 for v in S):
        raise ValueError("S must consist of distinct nonzero vectors")
    return S


def build_coset_graph(S: Sequence[int], U_basis: Sequence[int], pruned: bool = False) -> CosetGraph:
    S = _check_S(S)
    U_basis = tuple(echelon(U_basis))
    for v in S:
        if not in_span(v, U_basis):
            raise ValueError(f"request vector {v:#x} is not in the span of U")
    points = span(U_basis)
    parts = tuple(tuple(sorted({CosetVertex.of(j, x, v) for x in points})) for j, v in enumerate(S))
    by_point: dict[int, list[CosetVertex]] = {}
    for part in parts:
        for vert in part:
            for p in vert.points:
                by_point.setdefault(p, []).append(vert)
    adj: dict[CosetVertex, set[CosetVertex]] = {vert: set() for part in parts for vert in part}
    for verts in by_point.values():
        for a, b in itertools.combinations(verts, 2):
            adj[a].add(b)
            adj[b].add(a)
    if pruned:
        zeros = [CosetVertex(j, 0, v) for j, v in enumerate(S)]
        for a, b in itertools.combinations(zeros, 2):
            adj[a].discard(b)
            adj[b].discard(a)
    return CosetGraph(S, U_basis, pruned, parts, {k: frozenset(v) for k, v in adj.items()})


@dataclass(frozen=True)
class Component:
    """Vertices of the graph lying in the coset ``label + <S>``."""

    label: int
    parts: tuple[tuple[CosetVertex, ...], ...]

    def vertices(self) -> list[CosetVertex]:
        return [v for part in self.parts for v in part]


def component_decompose(graph: CosetGraph) -> list[Component]:
    """One component per coset of ``<S>`` in ``U``, ordered by their minimal
    representatives (the first is ``<S>`` itself, label 0)."""
    basis = echelon(graph.S)
    buckets: dict[int, list[list[CosetVertex]]] = {}
    for j, part in enumerate(graph.parts):
        for vert in part:
            label = reduce_vector(vert.representative, basis)
            buckets.setdefault(label, [[] for _ in graph.S])[j].append(vert)
    return [Component(label, tuple(tuple(p) for p in buckets[label])) for label in sorted(buckets)]


def shift_map(graph: CosetGraph, source: Component, target: Component) -> dict[CosetVertex, CosetVertex]:
    d = source.label ^ target.label
    return {v: v.shifted(d) for v in source.vertices()}


def is_shift_isomorphism(graph: CosetGraph, source: Component, target: Component) -> bool:
    """Whether translating by ``source.label + target.label`` is an
    edge-preserving bijection between the two components."""
    phi = shift_map(graph, source, target)
    tgt = set(target.vertices())
    if set(phi.values()) != tgt or len(phi) != len(tgt):
        return False
    if any(phi[v].part != v.part for v in phi):
        return False
    for a in phi:
        mapped = {phi[b] for b in graph.adjacency[a] if b in phi}
        if mapped != (graph.adjacency[phi[a]] & tgt):
            return False
    return True


def greedy_independent_set(graph: CosetGraph, component: Component, quotas: Sequence[int]) -> list[CosetVertex]:
    """Take ``quotas[j]`` vertices from each part in turn, skipping neighbours
    of vertices already taken.  Quotas must sum to ``2^(dim S - 2)``."""
    dim = rank_of(graph.S)
    if dim < 2:
        raise ValueError("need dim(S) >= 2")
    if len(quotas) != graph.s or any(b < 0 for b in quotas):
        raise ValueError("need one non-negative quota per part")
    if sum(quotas) != 1 << (dim - 2):
        raise ValueError(f"quotas must sum to 2^(dim S - 2) = {1 << (dim - 2)}")
    chosen: list[CosetVertex] = []
    blocked: set[CosetVertex] = set()
    for j, b in enumerate(quotas):
        picked = [v for v in component.parts[j] if v not in blocked][:b]
        if len(picked) < b:
            raise RuntimeError(f"part {j} ran out of free vertices")
        for v in picked:
            chosen.append(v)
            blocked |= graph.adjacency[v]
    return chosen


def vertex_set(vertex: CosetVertex) -> frozenset[int]:
    """Column vectors of the recovering set a vertex stands for."""
    if vertex.representative == 0:
        return frozenset([vertex.direction])
    return frozenset(vertex.points)


def plan_from_independent_set(vertices: Sequence[CosetVertex]) -> Sets:
    """Recovering sets (as column vectors) per part index."""
    out: Sets = {}
    for v in vertices:
        out.setdefault(v.part, []).append(vertex_set(v))
    return out


# -- per-component exact engine ------------------------------------------------


_PROFILE_LIMIT = 20000


class ComponentEngine:
    """Exact search over plans whose sets are singletons or pairs.

    Such sets never leave a coset of ``<S>``, so the search splits into
    component profiles (how many sets each target gets inside one component)
    and a small dynamic program over components.  Translates of one
    non-trivial component share their profiles.
    """

    def __init__(self, n: int, S: Sequence[int], labels: Sequence[int] | None = None):
        self.n = n
        self.S = _check_S(S)
        self.basis = echelon(self.S)
        self.dim = len(self.basis)
        if labels is None:
            labels = sorted({reduce_vector(x, self.basis) for x in range(1 << n)})
        self.labels = list(labels)
        self.cap = 1 << (self.dim - 1)
        if (self.cap + 1) ** len(self.S) > _PROFILE_LIMIT:
            raise CapabilityExceeded("too many component profiles for the exact engine")
        self._members = span(self.basis)
        self._profiles: dict[int, dict[tuple[int, ...], list[list[int]]]] = {}

    def _component_profiles(self, label: int) -> dict[tuple[int, ...], list[list[int]]]:
        """Maximal feasible profiles of the coset ``label + <S>`` with a
        realising choice of candidate masks (over local point indices)."""
        if label in self._profiles:
            return self._profiles[label]
        points = [label ^ y for y in self._members]
        points = [p for p in points if p]
        local = {p: k for k, p in enumerate(points)}
        cands = []
        for v in self.S:
            masks = []
            if v in local:
                masks.append(1 << local[v])
            for p in points:
                q = p ^ v
                if q in local and p < q:
                    masks.append((1 << local[p]) | (1 << local[q]))
            cands.append(masks)
        s = len(self.S)
        feasible: dict[tuple[int, ...], list[list[int]]] = {}
        frontier = [tuple([0] * s)]
        feasible[frontier[0]] = [[] for _ in range(s)]
        while frontier:
            nxt = []
            for prof in frontier:
                for j in range(s):
                    up = prof[:j] + (prof[j] + 1,) + prof[j + 1 :]
                    if up in feasible or up[j] > len(cands[j]):
                        continue
                    if any(up[:k] + (up[k] - 1,) + up[k + 1 :] not in feasible for k in range(s) if up[k]):
                        continue
                    found = search_disjoint(cands, list(up))
                    if found is not None:
                        feasible[up] = found
                        nxt.append(up)
            frontier = nxt
        maximal = {}
        for prof, masks in feasible.items():
            if all(prof[:j] + (prof[j] + 1,) + prof[j + 1 :] not in feasible for j in range(s)):
                maximal[prof] = [[_mask_points(m, points) for m in ms] for ms in masks]
        self._profiles[label] = maximal
        return maximal

    def _template(self, label: int) -> tuple[int, dict[tuple[int, ...], list[list[int]]]]:
        if label == 0:
            return 0, self._component_profiles(0)
        rep = next(lb for lb in self.labels if lb)
        return rep, self._component_profiles(rep)

    def solve(self, demands: Sequence[int], labels: Sequence[int] | None = None) -> Sets | None:
        """Sets (as column vectors) per target index meeting ``demands``
        within the given components, or ``None``."""
        labels = list(self.labels if labels is None else labels)
        demands = tuple(int(a) for a in demands)
        has_zero = 0 in labels
        others = [lb for lb in labels if lb]
        generic = list(self._template(others[0])[1]) if others else []
        zero_profiles = list(self._component_profiles(0)) if has_zero else [tuple(0 for _ in demands)]

        @lru_cache(maxsize=None)
        def reach(k: int, rem: tuple[int, ...]) -> tuple[int, ...] | None:
            if not any(rem):
                return ()
            if k == 0 or sum(rem) > k * self.cap:
                return None
            for prof in generic:
                nxt = tuple(max(0, r - p) for r, p in zip(rem, prof))
                if nxt == rem:
                    continue
                if reach(k - 1, nxt) is not None:
                    return prof
            return None

        for prof0 in zero_profiles:
            rem = tuple(max(0, a - p) for a, p in zip(demands, prof0))
            if reach(len(others), rem) is None:
                continue
            out: Sets = {j: [] for j in range(len(demands))}
            need = list(demands)
            if has_zero:
                self._take(0, 0, prof0, need, out)
            k = len(others)
            for lb in others:
                if not any(rem):
                    break
                prof = reach(k, rem)
                rep, _ = self._template(lb)
                self._take(rep, lb ^ rep, prof, need, out)
                rem = tuple(max(0, r - p) for r, p in zip(rem, prof))
                k -= 1
            return out
        return None

    def _take(self, rep: int, shift: int, prof, need: list[int], out: Sets) -> None:
        realise = self._component_profiles(rep)[prof]
        for j, sets in enumerate(realise):
            for pts in sets[: need[j]]:
                out[j].append(frozenset(p ^ shift for p in pts))
            need[j] -= min(need[j], len(sets))


@lru_cache(maxsize=256)
def _engine(n: int, S: tuple[int, ...]) -> ComponentEngine:
    return ComponentEngine(n, S)


def _mask_points(mask: int, points: Sequence[int]) -> list[int]:
    return [points[k] for k in range(len(points)) if (mask >> k) & 1]


# -- serving ------------------------------------------------------------------


@dataclass(frozen=True)
class ServeResult:
    plan: RecoveryPlan
    route: str


def threshold_total(n: int, s: int, dim: int) -> int:
    """``2^(n-1) - ceil(s/2) * 2^(dim-1)``."""
    return (1 << (n - 1)) - math.ceil(s / 2) * (1 << (dim - 1))


def _to_plan(n: int, targets: Sequence[int], sets: Sets, demands: Sequence[int]) -> RecoveryPlan:
    col = column_of_vector(n)
    groups = {}
    for j, t in enumerate(targets):
        chosen = sets.get(j, [])[: demands[j]]
        groups[t] = [frozenset(col[v] for v in st) for st in chosen]
    return RecoveryPlan.from_dict(groups, order=targets)


def _whole_part(comp: Component, j: int) -> list[frozenset[int]]:
    return [vertex_set(v) for v in comp.parts[j]]


def _serve_single(n: int, v: int, a: int) -> Sets:
    sets = [frozenset([v])]
    for x in range(1, 1 << n):
        if len(sets) >= a:
            break
        if x != v and x < x ^ v:
            sets.append(frozenset([x, x ^ v]))
    return {0: sets}


def _pad_last(demands: list[int], total: int) -> list[int]:
    padded = list(demands)
    padded[-1] += total - sum(demands)
    return padded


def _serve_threshold(n: int, S: tuple[int, ...], demands: list[int]) -> Sets:
    s = len(S)
    dim = rank_of(S)
    threshold = threshold_total(n, s, dim)
    a = _pad_last(demands, threshold)
    half = 1 << (dim - 1)
    q = [x // half for x in a]
    b = [x % half for x in a]
    m = sum(q)
    M, rest = divmod(sum(b), half)
    assert rest == 0
    graph = build_coset_graph(S, [1 << i for i in range(n)], pruned=True)
    comps = component_decompose(graph)
    out: Sets = {j: [] for j in range(s)}
    idx = 0
    for j in range(s):
        for _ in range(q[j]):
            out[j] += _whole_part(comps[idx], j)
            idx += 1
    if M == 0:
        return out
    if 2 * M >= s:
        if m + s > len(comps):
            raise CapabilityExceeded("not enough components for the remainder")
        for j in range(s):
            out[j] += _whole_part(comps[m + j], j)[: b[j]]
        return out
    if m + 2 * M > len(comps):
        raise CapabilityExceeded("not enough components for the remainder")
    quarter = half // 2
    quotas = [[0] * s for _ in range(2 * M)]
    bin_idx, room = 0, quarter
    for j in range(s):
        left = b[j]
        while left:
            take = min(left, room)
            quotas[bin_idx][j] += take
            left -= take
            room -= take
            if room == 0:
                bin_idx, room = bin_idx + 1, quarter
    for l in range(2 * M):
        for v in greedy_independent_set(graph, comps[m + l], quotas[l]):
            out[v.part].append(vertex_set(v))
    return out


def _exact_in_points(points: Sequence[int], S: Sequence[int], demands: Sequence[int], max_set_size: int = 2) -> Sets | None:
    points = [p for p in points if p]
    index = CandidateIndex(points, max_set_size)
    cands = [index.candidates(v) for v in S]
    found = search_disjoint(cands, list(demands))
    if found is None:
        return None
    return {j: [frozenset(_mask_points(m, points)) for m in masks] for j, masks in enumerate(found)}


def _independent_order(S: Sequence[int]) -> list[int]:
    for perm in itertools.permutations(range(4)):
        v = [S[k] for k in perm]
        if rank_of(v[:3]) == 3 and rank_of(v[1:]) == 3:
            return list(perm)
    raise AssertionError("four vectors of rank 3 always admit such an order")


def _serve_four(n: int, S: tuple[int, ...], demands: list[int]) -> Sets:
    """Full-rate serving for four vectors spanning a 3-dim space."""
    a = _pad_last(demands, 1 << (n - 1))
    if n == 3:
        found = _exact_in_points(range(1, 8), S, a)
        if found is None:
            raise CapabilityExceeded("exact search failed on the 3-dim instance")
        return found
    b = [x % 4 for x in a]
    M = sum(b) // 4
    graph = build_coset_graph(S, [1 << i for i in range(n)], pruned=True)
    comps = component_decompose(graph)
    if M <= 2:
        order = sorted(range(4), key=lambda j: -b[j])
        at = [a[j] // 4 for j in order]
        limit = (1 << (n - 3)) - 2
        last = 0
        for k in range(4):
            if sum(at[:k]) <= limit:
                last = k
        out: Sets = {j: [] for j in range(4)}
        residual = [0] * 4
        idx = 2
        for k, j in enumerate(order):
            if k < last:
                count = at[k]
            elif k == last:
                count = len(comps) - idx
            else:
                count = 0
            for _ in range(count):
                out[j] += _whole_part(comps[idx], j)
                idx += 1
            residual[j] = a[j] - 4 * count
        assert idx == len(comps) and sum(residual) == 8
        points = span(list(S) + [comps[1].label])
        found = _exact_in_points(points, S, residual)
        if found is None:
            raise CapabilityExceeded("exact search failed on the 4-dim sub-instance")
        for j, sets in found.items():
            out[j] += sets
        return out
    # M == 3: every b_j = 3
    if len(comps) < 3:
        raise CapabilityExceeded("the M = 3 case needs n >= 5")
    perm = _independent_order(S)
    v = [S[k] for k in perm]
    u2, u3 = comps[1].label, comps[2].label
    fixed = [
        [frozenset([v[0]]), frozenset([u2, u2 ^ v[0]]), frozenset([u2 ^ v[1], u2 ^ v[1] ^ v[0]])],
        [frozenset([v[1]]), frozenset([u2 ^ v[2], u2 ^ v[2] ^ v[1]]), frozenset([u2 ^ v[0] ^ v[2], u2 ^ v[0] ^ v[2] ^ v[1]])],
        [frozenset([v[2]]), frozenset([u3, u3 ^ v[2]]), frozenset([u3 ^ v[3], u3 ^ v[3] ^ v[2]])],
        [frozenset([v[3]]), frozenset([u3 ^ v[1], u3 ^ v[1] ^ v[3]]), frozenset([u3 ^ v[1] ^ v[2], u3 ^ v[1] ^ v[2] ^ v[3]])],
    ]
    out = {j: [] for j in range(4)}
    idx = 3
    for k, j in enumerate(perm):
        out[j] += fixed[k]
        for _ in range(a[j] // 4):
            out[j] += _whole_part(comps[idx], j)
            idx += 1
    return out


def _serve_basis_change(n: int, S: tuple[int, ...], demands: list[int]) -> Sets | None:
    T = change_of_basis(S, n)
    T_inv = inverse(T)
    std = tuple(1 << j for j in range(len(S)))
    found = _engine(n, std).solve(demands)
    if found is None:
        return None
    return {j: [frozenset(T_inv.apply(x) for x in st) for st in sets] for j, sets in found.items()}


def serve_functional_routed(n: int, request: RequestMultiset) -> ServeResult:
    """Serve a functional request on ``simplex_code(n)`` and name the route used.

    Routes, tried in order: ``single`` (one vector), ``threshold`` (total at
    most ``2^(n-1) - ceil(s/2) 2^(dim S - 1)``), ``basis-change`` (independent
    requests), ``four-vectors`` (four vectors of rank 3), ``exact``
    (pair/singleton search over components).  Raises
    :class:`CapabilityExceeded` if none applies.
    """
    if not request.functional:
        raise ValueError("serve_functional expects a functional request")
    S = tuple(request.targets)
    demands = [a for _, a in request.entries]
    for v in S:
        request.target_vector(v, n)
    code = simplex_code(n)
    full = 1 << (n - 1)
    t, s = request.t, request.s
    dim = rank_of(S)
    sets: Sets | None = None
    route = ""
    if s == 1 and t <= full:
        sets, route = _serve_single(n, S[0], t), "single"
    elif t <= threshold_total(n, s, dim):
        sets, route = _serve_threshold(n, S, demands), "threshold"
    elif dim == s and t <= full:
        sets, route = _serve_basis_change(n, S, demands), "basis-change"
    elif s == 4 and dim == 3 and t <= full:
        sets, route = _serve_four(n, S, demands), "four-vectors"
    if sets is None:
        route = "exact"
        try:
            sets = _engine(n, S).solve(demands)
        except CapabilityExceeded:
            found = _exact_in_points(range(1, 1 << n), S, demands)
            sets = found
        if sets is None:
            raise CapabilityExceeded(f"no plan with sets of size <= 2 for {request.entries}")
    plan = _to_plan(n, S, sets, demands)
    check = verify_plan(code, request, plan)
    if not check:
        raise AssertionError(f"route {route} produced an invalid plan: {check.reason}")
    return ServeResult(plan, route)


def serve_functional(n: int, request: RequestMultiset) -> RecoveryPlan:
    return serve_functional_routed(n, request).plan
