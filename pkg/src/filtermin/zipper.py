"""Zipper constraints: merging U forces merging its y-successors W.

Only constraints with ``|W| >= 2`` are generated. A singleton W is contained
in some part of any cover, and an empty W imposes nothing, so dropping them
leaves the set of satisfying covers unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Sequence

from .compat import SimplicialComplex
from .filter import Obs, PFilter, State, require_deterministic

DEFAULT_ZIPPER_CAP = 10**6


class TooManyZippers(RuntimeError):
    def __init__(self, cap: int, count: int):
        super().__init__(f"zipper generation exceeded cap {cap} (at {count} constraints)")
        self.cap = cap
        self.count = count


@dataclass(frozen=True)
class ZipperConstraint:
    u_set: frozenset[State]
    w_set: frozenset[State]
    obs: Obs

    @property
    def key(self) -> tuple:
        return (len(self.u_set), sorted(self.u_set), self.obs)

    def __str__(self) -> str:
        return f"U{{{','.join(sorted(self.u_set))}}} -{self.obs}-> W{{{','.join(sorted(self.w_set))}}}"


def successor_set(F: PFilter, U: Iterable[State], y: Obs) -> frozenset[State]:
    return F.step(U, y)


def generate_zippers(
    F: PFilter,
    complex: SimplicialComplex,
    max_constraints: int = DEFAULT_ZIPPER_CAP,
    implied: bool = True,
) -> list[ZipperConstraint]:
    """All constraints (U, W)_y with U a face, |U| >= 2 and |W| >= 2, in canonical order.

    With ``implied=False`` only constraints that :func:`prune_implied` would
    keep are produced: U's members all have a y-edge and no two share a
    successor. The full set can be exponentially larger.
    """
    require_deterministic(F)
    found: dict[tuple[frozenset, Obs], ZipperConstraint] = {}

    def add(U: frozenset, W: frozenset, y: Obs) -> None:
        if (U, y) not in found:
            found[(U, y)] = ZipperConstraint(U, W, y)
            if len(found) > max_constraints:
                raise TooManyZippers(max_constraints, len(found))

    for face in complex.maximal_faces:
        members = sorted(face)
        for y in F.sorted_alphabet:
            targets = {v: F.delta[v][y] for v in members if y in F.delta[v]}
            if len(set(targets.values())) < 2:
                continue
            if not implied:
                by_target: dict[frozenset, list[State]] = {}
                for v, t in targets.items():
                    by_target.setdefault(t, []).append(v)
                keys = sorted(by_target, key=sorted)
                for r in range(2, len(keys) + 1):
                    for chosen in combinations(keys, r):
                        W = frozenset().union(*chosen)
                        for reps in product(*(by_target[t] for t in chosen)):
                            add(frozenset(reps), W, y)
                continue
            movers = sorted(targets)
            idle = [v for v in members if v not in targets]
            # W depends only on U's members with a y-edge; idle members ride along.
            for r in range(2, len(movers) + 1):
                for active in combinations(movers, r):
                    W = frozenset().union(*(targets[v] for v in active))
                    if len(W) < 2:
                        continue
                    for extra_n in range(len(idle) + 1):
                        for extra in combinations(idle, extra_n):
                            add(frozenset(active + extra), W, y)
    return sorted(found.values(), key=lambda z: z.key)


def cover_satisfies(
    cover: Iterable[Iterable[State]], zippers: Sequence[ZipperConstraint]
) -> tuple[bool, ZipperConstraint | None]:
    """Check every zipper: if some part contains U then some part contains W."""
    parts = [frozenset(p) for p in cover]
    for z in zippers:
        if any(z.u_set <= p for p in parts) and not any(z.w_set <= p for p in parts):
            return False, z
    return True, None


def zippers_to_text(zippers: Iterable[ZipperConstraint]) -> str:
    return "".join(f"{z}\n" for z in sorted(zippers, key=lambda z: z.key))


def prune_implied(zippers: Iterable[ZipperConstraint]) -> list[ZipperConstraint]:
    """Drop constraints implied by one with the same ``obs`` and ``w_set``
    and a strictly smaller ``u_set``.

    A part containing U contains every subset of U, so the smaller
    constraint already forces W to be co-merged.
    """
    groups: dict[tuple[Obs, frozenset[State]], list[ZipperConstraint]] = {}
    for z in zippers:
        groups.setdefault((z.obs, z.w_set), []).append(z)
    kept = []
    for group in groups.values():
        minimal: list[frozenset[State]] = []
        for z in sorted(group, key=lambda z: len(z.u_set)):
            if not any(m < z.u_set for m in minimal):
                minimal.append(z.u_set)
                kept.append(z)
    return sorted(kept, key=lambda z: z.key)
