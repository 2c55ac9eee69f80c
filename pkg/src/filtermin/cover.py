"""Covers of the compatibility complex and the filters they induce.

A cover is a collection of faces whose union is every state. Parts may
overlap: a state in two parts is split into two copies in the induced
filter, one per part, and the transition choice below decides which copy a
string ends up in.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

from .compat import GroupChecker, SimplicialComplex
from .filter import Obs, PFilter, State, require_deterministic
from .zipper import ZipperConstraint, cover_satisfies


class CoverError(ValueError):
    """A cover fails a precondition of filter induction."""

    def __init__(self, check: str, witness, message: str):
        super().__init__(message)
        self.check = check
        self.witness = witness


def _canonical(parts: Iterable[Iterable[State]]) -> tuple[frozenset[State], ...]:
    uniq = {frozenset(p) for p in parts}
    uniq.discard(frozenset())
    return tuple(sorted(uniq, key=lambda p: sorted(p)))


@dataclass(frozen=True)
class Cover:
    parts: tuple[frozenset[State], ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", _canonical(self.parts))

    @classmethod
    def of(cls, *parts: Iterable[State]) -> "Cover":
        return cls(tuple(frozenset(p) for p in parts))

    @classmethod
    def singletons(cls, states: Iterable[State]) -> "Cover":
        return cls(tuple(frozenset([v]) for v in states))

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    @property
    def support(self) -> frozenset[State]:
        return frozenset().union(*self.parts) if self.parts else frozenset()

    def is_partition(self) -> bool:
        return sum(map(len, self.parts)) == len(self.support)

    def multiplicity(self, v: State) -> int:
        return sum(v in p for p in self.parts)

    def to_text(self) -> str:
        return "".join(" ".join(sorted(p)) + "\n" for p in self.parts)

    @classmethod
    def from_text(cls, text: str) -> "Cover":
        return cls(tuple(frozenset(line.split()) for line in text.splitlines() if line.strip()))


def part_name(part: Iterable[State]) -> State:
    return "+".join(sorted(part))


def is_valid_cover(complex: SimplicialComplex, cover: Cover) -> bool:
    if cover.support != complex.vertices:
        return False
    return all(complex.is_face(p) for p in cover.parts)


def _state_names(parts: Sequence[frozenset[State]]) -> list[State]:
    names = [part_name(p) for p in parts]
    if len(set(names)) != len(names):
        names = [f"{n}#{i}" for i, n in enumerate(names)]
    return names


def induce_filter(
    F: PFilter,
    cover: Cover,
    complex: SimplicialComplex | None = None,
    zippers: Sequence[ZipperConstraint] | None = None,
) -> PFilter:
    """Merge each part into one state and keep, per observation, the single
    edge into a part holding all of the part's successors.

    When ``complex``/``zippers`` are supplied the cover is checked against
    them; otherwise faces are checked by direct group-compatibility tests and
    the target-part existence is checked while building edges.
    """
    require_deterministic(F)
    parts = list(cover.parts)
    missing = F.states - cover.support
    if missing:
        raise CoverError("covers-all", sorted(missing), f"cover misses states {sorted(missing)}")
    extra = cover.support - F.states
    if extra:
        raise CoverError("covers-all", sorted(extra), f"cover names unknown states {sorted(extra)}")
    if complex is not None:
        for p in parts:
            if not complex.is_face(p):
                raise CoverError("faces", sorted(p), f"part {sorted(p)} is not a face")
    else:
        check = GroupChecker(F)
        for p in parts:
            if not check(p):
                raise CoverError("faces", sorted(p), f"part {sorted(p)} is not group compatible")
    if zippers is not None:
        ok, bad = cover_satisfies(parts, zippers)
        if not ok:
            raise CoverError("zippers", bad, f"cover violates zipper {bad}")

    names = _state_names(parts)
    order = sorted(range(len(parts)), key=lambda i: names[i])
    transitions: dict[tuple[State, State], set[Obs]] = {}
    for i, part in enumerate(parts):
        for y in F.sorted_alphabet:
            W = F.step(part, y)
            if not W:
                continue
            target = next((j for j in order if W <= parts[j]), None)
            if target is None:
                raise CoverError(
                    "zippers", (sorted(part), y, sorted(W)),
                    f"no part contains the {y!r}-successors {sorted(W)} of part {sorted(part)}",
                )
            transitions.setdefault((names[i], names[target]), set()).add(y)

    outputs = {}
    for i, part in enumerate(parts):
        common = reduce(frozenset.intersection, (F.outputs[v] for v in part))
        assert common, f"face {sorted(part)} has no common output"
        outputs[names[i]] = common

    (v0,) = F.initial
    start = next(names[j] for j in order if v0 in parts[j])
    return PFilter(
        states=frozenset(names),
        initial=frozenset([start]),
        alphabet=F.alphabet,
        transitions={e: frozenset(o) for e, o in transitions.items()},
        outputs=outputs,
    )


def induced_cover(F: PFilter, G: PFilter) -> Cover:
    """Group F's states by the G-states that some common string reaches."""
    require_deterministic(F)
    require_deterministic(G)
    (f0,), (g0,) = F.initial, G.initial
    seen = {(f0, g0)}
    queue = deque(seen)
    while queue:
        v, w = queue.popleft()
        dv, dw = F.delta[v], G.delta[w]
        for y in dv.keys() & dw.keys():
            (v2,), (w2,) = dv[y], dw[y]
            if (v2, w2) not in seen:
                seen.add((v2, w2))
                queue.append((v2, w2))
    groups: dict[State, set[State]] = {}
    for v, w in seen:
        groups.setdefault(w, set()).add(v)
    return Cover(tuple(frozenset(g) for g in groups.values()))
