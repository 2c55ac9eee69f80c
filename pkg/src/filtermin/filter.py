"""Procrustean filters: the data type and its trace semantics.

A filter is an edge-labelled transition system whose states carry nonempty
sets of output labels. Strings of observations are traced from the initial
states; the set of states a string reaches is a *config* (a frozenset of
state ids, empty when the string crashes).
"""

from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

State = str
Obs = str
Label = str
Config = frozenset  # frozenset[State]


class FilterError(ValueError):
    """Raised for malformed filters or queries referencing unknown states/symbols."""


class NotDeterministicError(FilterError):
    pass


class UnreachableStatesWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class PFilter:
    """An immutable p-filter ``(V, V0, Y, tau, C, c)``.

    ``transitions`` maps an ordered state pair to the set of observations
    labelling that edge, mirroring the edge-labelled definition so that
    nondeterministic filters need no special casing.
    """

    states: frozenset[State]
    initial: frozenset[State]
    alphabet: frozenset[Obs]
    transitions: Mapping[tuple[State, State], frozenset[Obs]]
    outputs: Mapping[State, frozenset[Label]]

    def __post_init__(self):
        if not self.initial:
            raise FilterError("initial state set must be nonempty")
        unknown = set(self.initial) - self.states
        if unknown:
            raise FilterError(f"initial states not in filter: {sorted(unknown)}")
        for (v, w), obs in self.transitions.items():
            if v not in self.states or w not in self.states:
                raise FilterError(f"transition {v!r}->{w!r} references unknown state")
            extra = set(obs) - self.alphabet
            if extra:
                raise FilterError(f"transition {v!r}->{w!r} uses symbols {sorted(extra)} outside the alphabet")
        for v in self.states:
            if not self.outputs.get(v):
                raise FilterError(f"state {v!r} has no outputs")
        extra = set(self.outputs) - self.states
        if extra:
            raise FilterError(f"outputs given for unknown states {sorted(extra)}")

    @classmethod
    def build(
        cls,
        states: Iterable[State],
        initial: Iterable[State],
        transitions: Iterable[tuple[State, State, Obs | Iterable[Obs]]],
        outputs: Mapping[State, Label | Iterable[Label]],
        alphabet: Iterable[Obs] | None = None,
    ) -> "PFilter":
        """Convenience constructor.

        ``transitions`` is an iterable of ``(from, to, obs)`` triples where
        ``obs`` is one symbol or an iterable of symbols. A bare string output
        is taken as a single label.
        """
        tau: dict[tuple[State, State], set[Obs]] = {}
        for v, w, obs in transitions:
            syms = {obs} if isinstance(obs, str) else set(obs)
            tau.setdefault((v, w), set()).update(syms)
        alpha = set(alphabet) if alphabet is not None else set()
        for syms in tau.values():
            alpha |= syms
        outs = {
            v: frozenset([o]) if isinstance(o, str) else frozenset(o)
            for v, o in outputs.items()
        }
        return cls(
            states=frozenset(states),
            initial=frozenset(initial),
            alphabet=frozenset(alpha),
            transitions={e: frozenset(s) for e, s in tau.items() if s},
            outputs=outs,
        )

    # -- derived views -------------------------------------------------

    @cached_property
    def delta(self) -> dict[State, dict[Obs, frozenset[State]]]:
        """``delta[v][y]`` is the set of y-successors of ``v`` (absent when none)."""
        succ: dict[State, dict[Obs, set[State]]] = {v: {} for v in self.states}
        for (v, w), obs in self.transitions.items():
            for y in obs:
                succ[v].setdefault(y, set()).add(w)
        return {v: {y: frozenset(ws) for y, ws in d.items()} for v, d in succ.items()}

    @cached_property
    def sorted_states(self) -> list[State]:
        return sorted(self.states)

    @cached_property
    def sorted_alphabet(self) -> list[Obs]:
        return sorted(self.alphabet)

    def __len__(self) -> int:
        return len(self.states)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PFilter):
            return NotImplemented
        return (
            self.states == other.states
            and self.initial == other.initial
            and self.alphabet == other.alphabet
            and dict(self.transitions) == dict(other.transitions)
            and dict(self.outputs) == dict(other.outputs)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def is_single_outputting(self) -> bool:
        return all(len(o) == 1 for o in self.outputs.values())

    def step(self, config: Iterable[State], y: Obs) -> Config:
        """One-step image of a config under observation ``y``."""
        out: set[State] = set()
        for v in config:
            out |= self.delta[v].get(y, frozenset())
        return frozenset(out)

    def config_outputs(self, config: Iterable[State]) -> frozenset[Label]:
        out: set[Label] = set()
        for v in config:
            out |= self.outputs[v]
        return frozenset(out)

    def _check_symbols(self, s: Sequence[Obs]) -> None:
        for y in s:
            if y not in self.alphabet:
                raise FilterError(f"unknown observation {y!r}")


# -- trace semantics ---------------------------------------------------


def reached_from(F: PFilter, v: State, s: Sequence[Obs]) -> Config:
    """States reached by tracing ``s`` from ``v``; empty if ``s`` crashes."""
    if v not in F.states:
        raise FilterError(f"unknown state {v!r}")
    F._check_symbols(s)
    config: Config = frozenset([v])
    for y in s:
        config = F.step(config, y)
        if not config:
            break
    return config


def reached(F: PFilter, s: Sequence[Obs]) -> Config:
    F._check_symbols(s)
    config: Config = frozenset(F.initial)
    for y in s:
        config = F.step(config, y)
        if not config:
            break
    return config


def outputs_of(F: PFilter, s: Sequence[Obs]) -> frozenset[Label]:
    return F.config_outputs(reached(F, s))


def in_language(F: PFilter, s: Sequence[Obs]) -> bool:
    return bool(reached(F, s))


def is_deterministic(F: PFilter) -> bool:
    if len(F.initial) != 1:
        return False
    return all(len(ws) <= 1 for d in F.delta.values() for ws in d.values())


def require_deterministic(F: PFilter) -> None:
    if not is_deterministic(F):
        raise NotDeterministicError("operation requires a deterministic filter")


def nondeterminism_witness(F: PFilter) -> tuple[Obs, ...] | None:
    """Shortest string whose reached config has two or more states, if any."""
    start = frozenset(F.initial)
    if len(start) > 1:
        return ()
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        config, s = queue.popleft()
        for y in F.sorted_alphabet:
            nxt = F.step(config, y)
            if not nxt or nxt in seen:
                continue
            if len(nxt) > 1:
                return s + (y,)
            seen.add(nxt)
            queue.append((nxt, s + (y,)))
    return None


# -- output simulation ---------------------------------------------------


@dataclass(frozen=True)
class SimulationVerdict:
    holds: bool
    counterexample: tuple[Obs, ...] | None = None
    reason: str | None = None  # "empty-output" or "non-subset"

    def __bool__(self) -> bool:
        return self.holds


def output_simulates(candidate: PFilter, reference: PFilter) -> SimulationVerdict:
    """Does ``candidate`` output simulate ``reference``?

    Joint BFS over pairs of configs; the first violating pair found gives a
    shortest counterexample string.
    """
    start = (frozenset(reference.initial), frozenset(candidate.initial))
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        (ref_cfg, cand_cfg), s = queue.popleft()
        cand_out = candidate.config_outputs(cand_cfg)
        if not cand_out:
            return SimulationVerdict(False, s, "empty-output")
        if not cand_out <= reference.config_outputs(ref_cfg):
            return SimulationVerdict(False, s, "non-subset")
        for y in reference.sorted_alphabet:
            ref_next = reference.step(ref_cfg, y)
            if not ref_next:
                continue
            cand_next = candidate.step(cand_cfg, y) if y in candidate.alphabet else frozenset()
            pair = (ref_next, cand_next)
            if pair not in seen:
                seen.add(pair)
                queue.append((pair, s + (y,)))
    return SimulationVerdict(True)


# -- structural operations --------------------------------------------------


def config_name(config: Iterable[State]) -> State:
    return "+".join(sorted(config))


def reachable_states(F: PFilter) -> frozenset[State]:
    seen = set(F.initial)
    stack = list(F.initial)
    while stack:
        v = stack.pop()
        for ws in F.delta[v].values():
            for w in ws:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return frozenset(seen)


def restrict(F: PFilter, keep: Iterable[State]) -> PFilter:
    keep = frozenset(keep)
    return PFilter(
        states=keep,
        initial=F.initial & keep,
        alphabet=F.alphabet,
        transitions={(v, w): o for (v, w), o in F.transitions.items() if v in keep and w in keep},
        outputs={v: F.outputs[v] for v in keep},
    )


def prune_unreachable(F: PFilter, warn: bool = True) -> PFilter:
    live = reachable_states(F)
    if live == F.states:
        return F
    if warn:
        dropped = sorted(F.states - live)
        warnings.warn(f"pruning unreachable states: {dropped}", UnreachableStatesWarning, stacklevel=2)
    return restrict(F, live)


def determinize(F: PFilter) -> PFilter:
    """Powerset construction over reachable configs.

    A generated state is named by its sorted members joined with ``+`` and
    outputs the union of its members' outputs, so every string keeps exactly
    the outputs it had.
    """
    start = frozenset(F.initial)
    seen = {start}
    order = [start]
    edges: dict[tuple[State, State], set[Obs]] = {}
    queue = deque([start])
    while queue:
        config = queue.popleft()
        for y in F.sorted_alphabet:
            nxt = F.step(config, y)
            if not nxt:
                continue
            edges.setdefault((config_name(config), config_name(nxt)), set()).add(y)
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return PFilter(
        states=frozenset(config_name(c) for c in order),
        initial=frozenset([config_name(start)]),
        alphabet=F.alphabet,
        transitions={e: frozenset(o) for e, o in edges.items()},
        outputs={config_name(c): F.config_outputs(c) for c in order},
    )


def relabel(F: PFilter, mapping: Mapping[State, State]) -> PFilter:
    return PFilter(
        states=frozenset(mapping[v] for v in F.states),
        initial=frozenset(mapping[v] for v in F.initial),
        alphabet=F.alphabet,
        transitions={(mapping[v], mapping[w]): o for (v, w), o in F.transitions.items()},
        outputs={mapping[v]: o for v, o in F.outputs.items()},
    )


def is_isomorphic(F: PFilter, G: PFilter) -> bool:
    """Isomorphism test for deterministic filters (observations and labels fixed)."""
    if len(F) != len(G) or F.alphabet != G.alphabet or not (is_deterministic(F) and is_deterministic(G)):
        return False
    (f0,), (g0,) = F.initial, G.initial
    match = {f0: g0}
    stack = [f0]
    while stack:
        v = stack.pop()
        w = match[v]
        if F.outputs[v] != G.outputs[w] or F.delta[v].keys() != G.delta[w].keys():
            return False
        for y, (v2,) in F.delta[v].items():
            (w2,) = G.delta[w][y]
            if v2 in match:
                if match[v2] != w2:
                    return False
            else:
                match[v2] = w2
                stack.append(v2)
    return len(set(match.values())) == len(match) == len(F)


# -- serialization ---------------------------------------------------


def to_dict(F: PFilter) -> dict:
    return {
        "states": F.sorted_states,
        "initial": sorted(F.initial),
        "alphabet": F.sorted_alphabet,
        "transitions": [
            {"from": v, "to": w, "obs": sorted(o)} for (v, w), o in sorted(F.transitions.items())
        ],
        "outputs": {v: sorted(F.outputs[v]) for v in F.sorted_states},
    }


def from_dict(data: Mapping) -> PFilter:
    try:
        return PFilter(
            states=frozenset(data["states"]),
            initial=frozenset(data["initial"]),
            alphabet=frozenset(data.get("alphabet", ())) | frozenset(
                y for t in data["transitions"] for y in t["obs"]
            ),
            transitions=_merge_edges(data["transitions"]),
            outputs={v: frozenset(o) for v, o in data["outputs"].items()},
        )
    except (KeyError, TypeError) as exc:
        raise FilterError(f"malformed filter document: {exc}") from exc


def _merge_edges(items) -> dict[tuple[State, State], frozenset[Obs]]:
    tau: dict[tuple[State, State], set[Obs]] = {}
    for t in items:
        tau.setdefault((t["from"], t["to"]), set()).update(t["obs"])
    return {e: frozenset(o) for e, o in tau.items() if o}


def dumps(F: PFilter) -> str:
    return json.dumps(to_dict(F), indent=2)


def loads(text: str, prune: bool = True) -> PFilter:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FilterError(f"invalid JSON: {exc}") from exc
    F = from_dict(data)
    return prune_unreachable(F) if prune else F


def load(path, prune: bool = True) -> PFilter:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), prune=prune)


def save(F: PFilter, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(F))
        fh.write("\n")


def to_dot(F: PFilter, name: str = "filter") -> str:
    lines = [f"digraph {json.dumps(name)} {{", "  rankdir=LR;"]
    for v in F.sorted_states:
        shape = "doublecircle" if v in F.initial else "circle"
        label = f"{v}\\n{{{','.join(sorted(F.outputs[v]))}}}"
        lines.append(f"  {json.dumps(v)} [shape={shape}, label={json.dumps(label)}];")
    for (v, w), obs in sorted(F.transitions.items()):
        lines.append(f"  {json.dumps(v)} -> {json.dumps(w)} [label={json.dumps(','.join(sorted(obs)))}];")
    lines.append("}")
    return "\n".join(lines)
