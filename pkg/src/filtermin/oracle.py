"""Ground truth for small instances.

Nothing here calls into the SAT path. Faces and zipper constraints are
recomputed from scratch by subset enumeration, minimal covers are found by a
complete branch-and-bound search, and the trace semantics have string- and
path-enumeration counterparts used by the test suite.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass
from functools import reduce

from .cover import Cover
from .filter import PFilter, SimulationVerdict, is_deterministic, output_simulates, prune_unreachable

DEFAULT_ORACLE_BOUND = 10


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    minimal_size: int
    witness_cover: Cover
    explored: int


# -- independent recomputation of the cover problem ------------------------------


def _config_group_ok(F: PFilter, members: frozenset) -> bool:
    todo = deque([members])
    seen = {members}
    while todo:
        cfg = todo.popleft()
        if not reduce(lambda a, b: a & b, (F.outputs[v] for v in cfg)):
            return False
        for y in F.alphabet:
            nxt = frozenset(w for v in cfg for w in F.delta[v].get(y, ()))
            if nxt and nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return True


def all_faces(F: PFilter) -> list[frozenset]:
    """Every nonempty group-compatible subset, by exhaustive enumeration."""
    order = sorted(F.states)
    faces: list[frozenset] = []
    known: set[frozenset] = set()
    for r in range(1, len(order) + 1):
        for combo in itertools.combinations(order, r):
            U = frozenset(combo)
            # a set with a non-face subset cannot be a face
            if r > 1 and any(U - {v} not in known for v in U):
                continue
            if _config_group_ok(F, U):
                faces.append(U)
                known.add(U)
    return faces


def all_zippers(F: PFilter, faces: list[frozenset]) -> list[tuple[frozenset, frozenset, str]]:
    """Every (U, W, y) with U a face of size >= 2, including trivial ones."""
    out = []
    for U in faces:
        if len(U) < 2:
            continue
        for y in sorted(F.alphabet):
            W = frozenset(w for u in U for w in F.delta[u].get(y, ()))
            out.append((U, W, y))
    return out


def brute_force_minimize(
    F: PFilter, size_limit: int = DEFAULT_ORACLE_BOUND, partitions_only: bool = False
) -> OracleResult:
    """Smallest cover by faces satisfying every zipper, by iterative deepening.

    At each node the search either covers the lowest uncovered state or
    repairs the first violated zipper; both branch over faces that any
    valid cover must contain, so the search is complete. With
    ``partitions_only`` parts must be pairwise disjoint, which answers the
    question of how small a merge-only (equivalence-class) solution can be.
    """
    F = prune_unreachable(F, warn=False)
    if not is_deterministic(F):
        raise ValueError("oracle requires a deterministic filter")
    n = len(F)
    if n > size_limit:
        raise OracleTooLarge(f"{n} states exceeds oracle bound {size_limit}")
    order = sorted(F.states)
    bit = {v: 1 << i for i, v in enumerate(order)}

    def mask(S) -> int:
        return sum(bit[v] for v in S)

    face_sets = all_faces(F)
    faces = sorted((mask(f) for f in face_sets), key=lambda m: -bin(m).count("1"))
    zips = [(mask(U), mask(W)) for U, W, _ in all_zippers(F, face_sets) if W]
    full = (1 << n) - 1
    pair_ok = {(a, b) for f in faces for a in range(n) for b in range(n) if f >> a & 1 and f >> b & 1}
    explored = 0

    def lower_bound(uncovered: int) -> int:
        chosen: list[int] = []
        for a in range(n):
            if uncovered >> a & 1 and all((a, b) not in pair_ok for b in chosen):
                chosen.append(a)
        return len(chosen)

    def search(parts: tuple[int, ...], covered: int, budget: int) -> tuple[int, ...] | None:
        nonlocal explored
        explored += 1
        if covered != full:
            uncovered = full & ~covered
            if len(parts) + lower_bound(uncovered) > budget:
                return None
            low = uncovered & -uncovered
            options = [f for f in faces if f & low and f not in parts and not (partitions_only and f & covered)]
        else:
            need = next(
                (W for U, W in zips if any(U & p == U for p in parts) and not any(W & p == W for p in parts)),
                None,
            )
            if need is None:
                return parts
            if len(parts) + 1 > budget:
                return None
            options = [f for f in faces if f & need == need and f not in parts and not (partitions_only and f & covered)]
        for f in options:
            found = search(parts + (f,), covered | f, budget)
            if found is not None:
                return found
        return None

    for k in range(1, n + 1):
        found = search((), 0, k)
        if found is not None:
            cover = Cover(tuple(frozenset(v for v in order if m & bit[v]) for m in found))
            return OracleResult(len(cover), cover, explored)
    raise AssertionError("the all-singletons cover always exists")


# -- verdict bundle -------------------------------------------------------------------


@dataclass(frozen=True)
class SolutionVerdict:
    deterministic: bool
    simulation: SimulationVerdict
    size: int

    @property
    def ok(self) -> bool:
        return self.deterministic and self.simulation.holds


def verify_solution(F: PFilter, candidate: PFilter) -> SolutionVerdict:
    return SolutionVerdict(is_deterministic(candidate), output_simulates(candidate, F), len(candidate))


# -- random instances ---------------------------------------------------------------


def random_filter(
    rng: random.Random,
    n_states: int,
    n_obs: int = 3,
    n_labels: int = 3,
    multi: bool = False,
    acyclic: bool = False,
    edge_prob: float = 0.5,
) -> PFilter:
    """Deterministic filter with every state reachable from ``s0``.

    A random spanning tree guarantees reachability; extra edges are added
    per free (state, observation) slot with probability ``edge_prob``.
    """
    obs = [chr(ord("a") + i) for i in range(n_obs)]
    labels = [f"c{i}" for i in range(n_labels)]
    states = [f"s{i}" for i in range(n_states)]
    succ: dict[int, dict[str, int]] = {i: {} for i in range(n_states)}
    for i in range(1, n_states):
        parents = [j for j in range(i) if len(succ[j]) < n_obs]
        j = rng.choice(parents)
        y = rng.choice([y for y in obs if y not in succ[j]])
        succ[j][y] = i
    for i in range(n_states):
        for y in obs:
            if y in succ[i] or rng.random() >= edge_prob:
                continue
            targets = range(i + 1, n_states) if acyclic else range(n_states)
            if targets:
                succ[i][y] = rng.choice(list(targets))
    outputs = {}
    for i, v in enumerate(states):
        if multi and rng.random() < 0.5:
            k = rng.randint(1, n_labels)
            outputs[v] = frozenset(rng.sample(labels, k))
        else:
            outputs[v] = frozenset([rng.choice(labels)])
    return PFilter.build(
        states,
        ["s0"],
        [(states[i], states[j], y) for i, d in succ.items() for y, j in d.items()],
        outputs,
        alphabet=obs,
    )


# -- string / path enumeration semantics ---------------------------------------------


def strings_up_to(alphabet, n: int):
    alphabet = sorted(alphabet)
    for length in range(n + 1):
        yield from itertools.product(alphabet, repeat=length)


def path_reached(F: PFilter, v: str, s) -> frozenset:
    """Endpoints of all state sequences labelled by ``s`` starting at ``v``."""
    states = sorted(F.states)
    hits = set()
    for seq in itertools.product(states, repeat=len(s)):
        prev = v
        ok = True
        for y, w in zip(s, seq):
            if y not in F.transitions.get((prev, w), ()):
                ok = False
                break
            prev = w
        if ok:
            hits.add(prev)
    return frozenset(hits)


def trace(F: PFilter, start, s) -> frozenset:
    cfg = frozenset(start)
    for y in s:
        cfg = frozenset(w for v in cfg for w in F.delta[v].get(y, ()))
    return cfg


def string_outputs(F: PFilter, s) -> frozenset:
    return frozenset().union(*(F.outputs[v] for v in trace(F, F.initial, s)))


def _live_strings(F: PFilter, start_sets, depth: int):
    """Strings up to ``depth`` that keep at least one of ``start_sets`` alive,
    with the config each start set reaches. Crashed prefixes are cut because
    all of their extensions crash too."""
    alphabet = sorted(F.alphabet)
    stack = [((), tuple(frozenset(c) for c in start_sets))]
    while stack:
        s, cfgs = stack.pop()
        yield s, cfgs
        if len(s) == depth:
            continue
        for y in alphabet:
            nxt = tuple(frozenset(w for v in c for w in F.delta[v].get(y, ())) for c in cfgs)
            if any(nxt):
                stack.append((s + (y,), nxt))


def string_simulates(G: PFilter, F: PFilter, depth: int) -> bool:
    for s, (ref_cfg,) in _live_strings(F, [F.initial], depth):
        ref = frozenset().union(*(F.outputs[v] for v in ref_cfg))
        got = string_outputs(G, s) if set(s) <= G.alphabet else frozenset()
        if not got or not got <= ref:
            return False
    return True


def string_pairwise_compatible(F: PFilter, v: str, w: str, depth: int) -> bool:
    for _, (a, b) in _live_strings(F, [{v}, {w}], depth):
        if a and b and any(F.outputs[x] != F.outputs[y] for x in a for y in b):
            return False
    return True


def string_group_compatible(F: PFilter, U, depth: int) -> bool:
    for _, (W,) in _live_strings(F, [U], depth):
        if W and not reduce(lambda a, b: a & b, (F.outputs[x] for x in W)):
            return False
    return True
