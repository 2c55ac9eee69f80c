"""Compatibility structure of a deterministic filter.

Two states are *compatible* when every common extension reaches states with
equal output sets. A set of states is *group compatible* when every string
extending at least one member reaches a config whose members still share an
output label. Group-compatible sets are closed under taking subsets and form
a simplicial complex, stored here by its maximal faces.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, reduce
from itertools import combinations
from typing import Callable, Iterable, Iterator

from .filter import Config, FilterError, PFilter, State, require_deterministic

DEFAULT_FACE_CAP = 10**6


class ComplexTooLarge(RuntimeError):
    """Maximal-face enumeration exceeded its configured cap."""


def _check_states(F: PFilter, states: Iterable[State]) -> None:
    for v in states:
        if v not in F.states:
            raise FilterError(f"unknown state {v!r}")


# -- pairwise -------------------------------------------------------------


def pairwise_compatible(F: PFilter, v: State, w: State) -> bool:
    """Forward BFS over pairs of optionally-crashed states starting at (v, w)."""
    require_deterministic(F)
    _check_states(F, (v, w))
    seen = {(v, w)}
    queue = deque([(v, w)])
    while queue:
        a, b = queue.popleft()
        if F.outputs[a] != F.outputs[b]:
            return False
        da, db = F.delta[a], F.delta[b]
        for y in da.keys() & db.keys():
            (a2,), (b2,) = da[y], db[y]
            if (a2, b2) not in seen:
                seen.add((a2, b2))
                queue.append((a2, b2))
    return True


def _compatible_pairs(F: PFilter, clash: Callable[[frozenset, frozenset], bool]) -> set[frozenset]:
    """All unordered compatible pairs, by backward propagation of clashes.

    A pair is incompatible when its outputs clash or some common observation
    leads to an incompatible pair; seeding with clashing pairs and walking
    predecessors computes the greatest fixpoint in O(|V|^2 |Y|).
    """
    pred: dict[State, dict[str, list[State]]] = {v: {} for v in F.states}
    for v, d in F.delta.items():
        for y, (w,) in d.items():
            pred[w].setdefault(y, []).append(v)

    order = F.sorted_states
    bad: set[frozenset] = set()
    queue: deque[tuple[State, State]] = deque()
    for a, b in combinations(order, 2):
        if clash(F.outputs[a], F.outputs[b]):
            bad.add(frozenset((a, b)))
            queue.append((a, b))
    while queue:
        a, b = queue.popleft()
        pa, pb = pred[a], pred[b]
        for y in pa.keys() & pb.keys():
            for p in pa[y]:
                for q in pb[y]:
                    if p == q:
                        continue
                    key = frozenset((p, q))
                    if key not in bad:
                        bad.add(key)
                        queue.append((p, q))
    return {frozenset(pq) for pq in combinations(order, 2) if frozenset(pq) not in bad}


@dataclass(frozen=True)
class CompatibilityGraph:
    vertices: frozenset[State]
    edges: frozenset[frozenset[State]]

    @cached_property
    def adjacency(self) -> dict[State, frozenset[State]]:
        adj: dict[State, set[State]] = {v: set() for v in self.vertices}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return {v: frozenset(n) for v, n in adj.items()}

    def has_edge(self, v: State, w: State) -> bool:
        return frozenset((v, w)) in self.edges

    def to_dot(self, name: str = "compatibility") -> str:
        lines = [f"graph {json.dumps(name)} {{"]
        lines += [f"  {json.dumps(v)};" for v in sorted(self.vertices)]
        for a, b in sorted(tuple(sorted(e)) for e in self.edges):
            lines.append(f"  {json.dumps(a)} -- {json.dumps(b)};")
        lines.append("}")
        return "\n".join(lines)


def compatibility_graph(F: PFilter) -> CompatibilityGraph:
    require_deterministic(F)
    edges = _compatible_pairs(F, lambda a, b: a != b)
    return CompatibilityGraph(frozenset(F.states), frozenset(edges))


def group_skeleton(F: PFilter) -> CompatibilityGraph:
    """Graph of pairs that are group compatible (the 1-skeleton of the complex)."""
    require_deterministic(F)
    edges = _compatible_pairs(F, lambda a, b: not (a & b))
    return CompatibilityGraph(frozenset(F.states), frozenset(edges))


# -- group compatibility ----------------------------------------------------


class GroupChecker:
    """Memoizing group-compatibility test over configs of one filter.

    Every config reachable from a group-compatible set is itself group
    compatible, so a successful BFS certifies all configs it visited.
    """

    def __init__(self, F: PFilter):
        require_deterministic(F)
        self.F = F
        self.memo: dict[Config, bool] = {}

    def _common(self, config: Config) -> bool:
        outs = self.F.outputs
        return bool(reduce(frozenset.intersection, (outs[v] for v in config)))

    def __call__(self, U: Iterable[State]) -> bool:
        start = frozenset(U)
        if not start:
            raise ValueError("group compatibility needs a nonempty set")
        known = self.memo.get(start)
        if known is not None:
            return known
        F = self.F
        seen = {start}
        queue = deque([start])
        while queue:
            config = queue.popleft()
            known = self.memo.get(config)
            if known:
                continue
            if known is False or not self._common(config):
                self.memo[start] = False
                return False
            for y in F.sorted_alphabet:
                nxt = F.step(config, y)
                if nxt and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        for config in seen:
            self.memo[config] = True
        return True


def group_compatible(F: PFilter, U: Iterable[State]) -> bool:
    U = frozenset(U)
    _check_states(F, U)
    return GroupChecker(F)(U)


# -- simplicial complex ----------------------------------------------------


def _maximal_only(sets: Iterable[Iterable[State]]) -> list[frozenset[State]]:
    """Drop every set strictly contained in another; largest sets first so
    a candidate only needs comparing against kept sets sharing a member."""
    kept: list[frozenset[State]] = []
    by_vertex: dict[State, list[int]] = {}
    for f in sorted(set(map(frozenset, sets)), key=len, reverse=True):
        if f:
            v = min(f)
            if any(f <= kept[i] for i in by_vertex.get(v, ())):
                continue
        elif kept:
            continue
        for u in f:
            by_vertex.setdefault(u, []).append(len(kept))
        kept.append(f)
    return kept


@dataclass(frozen=True)
class SimplicialComplex:
    vertices: frozenset[State]
    maximal_faces: tuple[frozenset[State], ...]
    order: tuple[State, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.order:
            object.__setattr__(self, "order", tuple(sorted(self.vertices)))
        faces = tuple(sorted(_maximal_only(self.maximal_faces), key=sorted))
        object.__setattr__(self, "maximal_faces", faces)

    @classmethod
    def full(cls, vertices: Iterable[State]) -> "SimplicialComplex":
        vs = frozenset(vertices)
        return cls(vs, (vs,))

    @classmethod
    def discrete(cls, vertices: Iterable[State]) -> "SimplicialComplex":
        vs = frozenset(vertices)
        return cls(vs, tuple(frozenset([v]) for v in vs))

    @cached_property
    def index(self) -> dict[State, int]:
        return {v: i for i, v in enumerate(self.order)}

    @cached_property
    def face_masks(self) -> tuple[int, ...]:
        return tuple(self.mask(f) for f in self.maximal_faces)

    def mask(self, states: Iterable[State]) -> int:
        m = 0
        for v in states:
            m |= 1 << self.index[v]
        return m

    def unmask(self, m: int) -> frozenset[State]:
        return frozenset(v for v, i in self.index.items() if m >> i & 1)

    @cached_property
    def _incidence(self) -> tuple[int, ...]:
        # per vertex: bitset over maximal faces containing it
        inc = [0] * len(self.order)
        for j, f in enumerate(self.face_masks):
            while f:
                low = f & -f
                inc[low.bit_length() - 1] |= 1 << j
                f ^= low
        return tuple(inc)

    def is_face(self, states: Iterable[State]) -> bool:
        return self.is_face_mask(self.mask(states))

    def is_face_mask(self, m: int) -> bool:
        if not m:
            return True
        inc = self._incidence
        common = -1
        while m:
            low = m & -m
            common &= inc[low.bit_length() - 1]
            if not common:
                return False
            m ^= low
        return True

    def faces(self) -> Iterator[frozenset[State]]:
        """Every nonempty face, each exactly once."""
        seen: set[frozenset[State]] = set()
        for face in self.maximal_faces:
            members = sorted(face)
            for r in range(1, len(members) + 1):
                for sub in combinations(members, r):
                    fs = frozenset(sub)
                    if fs not in seen:
                        seen.add(fs)
                        yield fs

    def skeleton_edges(self) -> set[frozenset[State]]:
        edges = set()
        for face in self.maximal_faces:
            edges.update(frozenset(p) for p in combinations(sorted(face), 2))
        return edges

    def to_text(self) -> str:
        lines = sorted(" ".join(sorted(f)) for f in self.maximal_faces)
        return "\n".join(lines) + "\n"


def _bron_kerbosch_pivot(adj: dict[State, frozenset[State]], vertices: Iterable[State], cap: int) -> list[frozenset]:
    out: list[frozenset] = []

    def expand(R: frozenset, P: set, X: set) -> None:
        if not P and not X:
            out.append(R)
            if len(out) > cap:
                raise ComplexTooLarge(f"more than {cap} maximal faces")
            return
        pivot = max(P | X, key=lambda u: (len(adj[u] & P), u))
        for v in sorted(P - adj[pivot]):
            expand(R | {v}, P & adj[v], X & adj[v])
            P.discard(v)
            X.add(v)

    expand(frozenset(), set(vertices), set())
    return out


def _maximal_group_sets(
    adj: dict[State, frozenset[State]], vertices: Iterable[State], check: GroupChecker, cap: int
) -> list[frozenset]:
    """Maximal sets of a hereditary family, grown along skeleton edges.

    Pivoting is unsound for properties that are not determined by pairs,
    so candidates are filtered by the full group test at every level.
    """
    out: list[frozenset] = []

    def expand(R: frozenset, P: list, X: list) -> None:
        if not P and not X:
            out.append(R)
            if len(out) > cap:
                raise ComplexTooLarge(f"more than {cap} maximal faces")
            return
        P = list(P)
        X = list(X)
        while P:
            v = P.pop(0)
            R2 = R | {v}
            P2 = [u for u in P if u in adj[v] and check(R2 | {u})]
            X2 = [u for u in X if u in adj[v] and check(R2 | {u})]
            expand(R2, P2, X2)
            X.append(v)

    expand(frozenset(), sorted(vertices), [])
    return out


def compatibility_complex(
    F: PFilter, max_faces: int = DEFAULT_FACE_CAP, single_output: bool | None = None
) -> SimplicialComplex:
    """Maximal group-compatible sets of a deterministic filter.

    For single-outputting filters group compatibility coincides with mutual
    pairwise compatibility, so maximal cliques of the compatibility graph are
    enumerated directly; pass ``single_output=False`` to force the general
    routine.
    """
    require_deterministic(F)
    if single_output is None:
        single_output = F.is_single_outputting
    if single_output:
        graph = compatibility_graph(F)
        faces = _bron_kerbosch_pivot(graph.adjacency, F.sorted_states, max_faces)
    else:
        graph = group_skeleton(F)
        check = GroupChecker(F)
        faces = []
        # every group-compatible set is a skeleton clique; most maximal cliques
        # pass the group test outright and only the rest need the slow search
        for clique in _bron_kerbosch_pivot(graph.adjacency, F.sorted_states, max_faces):
            if check(clique):
                faces.append(clique)
            else:
                sub = {v: graph.adjacency[v] & clique for v in clique}
                faces.extend(_maximal_group_sets(sub, sorted(clique), check, max_faces))
            if len(faces) > max_faces:
                raise ComplexTooLarge(f"more than {max_faces} maximal faces")
    return SimplicialComplex(frozenset(F.states), tuple(faces))
