"""SAT back ends behind one small contract.

A solver takes a ``CnfInstance`` and a timeout and answers ``SAT`` with a
full model, ``UNSAT``, or ``TIMEOUT``. UNSAT is only ever reported after a
complete search.

Back ends:

``builtin``
    Pure-Python conflict-driven DPLL (watched literals, first-UIP learning,
    activity-ordered decisions, Luby restarts). No dependencies.
``pysat[:name]``
    Any solver bundled with python-sat; the default ``maplechrono`` is
    MapleLCMDistChronoBT.
``exec:<path>``
    An external program speaking the SAT-competition protocol: DIMACS file
    as the last argument, ``s``/``v`` lines on stdout.
"""

from __future__ import annotations

import heapq
import os
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

from .encode import CnfInstance

SAT = "SAT"
UNSAT = "UNSAT"
TIMEOUT = "TIMEOUT"

ENV_SOLVER = "FILTERMIN_SOLVER"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveResult:
    status: str
    model: tuple[int, ...] | None = None  # signed literals, one per variable
    seconds: float = 0.0


class Solver(Protocol):
    name: str

    def solve(self, cnf: CnfInstance, timeout: float | None = None) -> SolveResult: ...


# -- built-in CDCL ------------------------------------------------------------


def _luby(i: int) -> int:
    """i-th term (1-based) of the Luby restart sequence 1,1,2,1,1,2,4,..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    if i == (1 << k) - 1:
        return 1 << (k - 1)
    return _luby(i - (1 << (k - 1)) + 1)


class _CDCL:
    """Small CDCL core over DIMACS-style integer literals."""

    def __init__(self, num_vars: int, clauses: Sequence[Sequence[int]]):
        self.n = num_vars
        self.value = [0] * (num_vars + 1)  # +1 true, -1 false, 0 unassigned
        self.level = [0] * (num_vars + 1)
        self.reason: list[list[int] | None] = [None] * (num_vars + 1)
        self.activity = [0.0] * (num_vars + 1)
        self.phase = [-1] * (num_vars + 1)
        self.bump = 1.0
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: dict[int, list[list[int]]] = {}
        self.heap = [(0.0, v) for v in range(1, num_vars + 1)]
        self.conflict_free = True
        self.units: list[int] = []
        for clause in clauses:
            c = list(dict.fromkeys(clause))
            if any(-lit in c for lit in c):
                continue
            if not c:
                self.conflict_free = False
            elif len(c) == 1:
                self.units.append(c[0])
            else:
                self._watch(c)

    def _watch(self, c: list[int]) -> None:
        self.watches.setdefault(-c[0], []).append(c)
        self.watches.setdefault(-c[1], []).append(c)

    def _lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _assign(self, lit: int, reason) -> None:
        var = abs(lit)
        self.value[var] = 1 if lit > 0 else -1
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason
        self.trail.append(lit)

    def _propagate(self) -> list[int] | None:
        value = self.value
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            # clauses watching -lit, indexed by the literal that became true
            watching = self.watches.get(lit)
            if not watching:
                continue
            keep: list[list[int]] = []
            i = 0
            n = len(watching)
            while i < n:
                c = watching[i]
                i += 1
                if c[0] == -lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = value[abs(first)]
                if (fv if first > 0 else -fv) == 1:
                    keep.append(c)
                    continue
                moved = False
                for j in range(2, len(c)):
                    other = c[j]
                    ov = value[abs(other)]
                    if (ov if other > 0 else -ov) != -1:
                        c[1], c[j] = c[j], c[1]
                        self.watches.setdefault(-c[1], []).append(c)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(c)
                if (fv if first > 0 else -fv) == -1:
                    keep.extend(watching[i:])
                    self.watches[lit] = keep
                    return c
                self._assign(first, c)
            self.watches[lit] = keep
        return None

    def _bump(self, var: int) -> None:
        self.activity[var] += self.bump
        if self.activity[var] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.bump *= 1e-100
            self.heap = [(-self.activity[v], v) for v in range(1, self.n + 1) if self.value[v] == 0]
            heapq.heapify(self.heap)
            return
        heapq.heappush(self.heap, (-self.activity[var], var))

    def _analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        seen = [False] * (self.n + 1)
        learnt = [0]
        counter = 0
        current = len(self.trail_lim)
        clause = conflict
        idx = len(self.trail) - 1
        p = 0
        while True:
            for lit in clause:
                if p and lit == p:
                    continue
                var = abs(lit)
                if not seen[var] and self.level[var] > 0:
                    seen[var] = True
                    self._bump(var)
                    if self.level[var] == current:
                        counter += 1
                    else:
                        learnt.append(lit)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
            clause = self.reason[abs(p)]
        learnt[0] = -p
        self.bump *= 1.05
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda j: self.level[abs(learnt[j])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        for lit in self.trail[stop:]:
            var = abs(lit)
            self.phase[var] = 1 if lit > 0 else -1
            self.value[var] = 0
            self.reason[var] = None
            heapq.heappush(self.heap, (-self.activity[var], var))
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _decide(self) -> int:
        while self.heap:
            _, var = heapq.heappop(self.heap)
            if self.value[var] == 0:
                return var * self.phase[var]
        for var in range(1, self.n + 1):
            if self.value[var] == 0:
                return var * self.phase[var]
        return 0

    def solve(self, deadline: float | None) -> str:
        if not self.conflict_free:
            return UNSAT
        for lit in self.units:
            v = self._lit_value(lit)
            if v == -1:
                return UNSAT
            if v == 0:
                self._assign(lit, None)
        if self._propagate() is not None:
            return UNSAT
        restart_i = 1
        budget = 100 * _luby(restart_i)
        conflicts = 0
        while True:
            conflict = self._propagate()
            if conflict is not None:
                if not self.trail_lim:
                    return UNSAT
                conflicts += 1
                learnt, back = self._analyze(conflict)
                self._backtrack(back)
                if len(learnt) == 1:
                    self._assign(learnt[0], None)
                else:
                    self._watch(learnt)
                    self._assign(learnt[0], learnt)
                if conflicts % 256 == 0 and deadline is not None and time.monotonic() > deadline:
                    return TIMEOUT
                continue
            if conflicts >= budget:
                conflicts = 0
                restart_i += 1
                budget = 100 * _luby(restart_i)
                self._backtrack(0)
                if deadline is not None and time.monotonic() > deadline:
                    return TIMEOUT
                continue
            lit = self._decide()
            if lit == 0:
                return SAT
            self.trail_lim.append(len(self.trail))
            self._assign(lit, None)

    def model(self) -> tuple[int, ...]:
        return tuple(v if self.value[v] > 0 else -v for v in range(1, self.n + 1))


class BuiltinSolver:
    name = "builtin"

    def __init__(self, max_vars: int | None = None):
        self.max_vars = max_vars

    def solve(self, cnf: CnfInstance, timeout: float | None = None) -> SolveResult:
        if self.max_vars is not None and cnf.num_vars > self.max_vars:
            raise SolverError(f"builtin solver limited to {self.max_vars} variables (got {cnf.num_vars})")
        return solve_clauses(cnf.num_vars, cnf.clauses, timeout)


def solve_clauses(num_vars: int, clauses: Sequence[Sequence[int]], timeout: float | None = None) -> SolveResult:
    start = time.monotonic()
    deadline = start + timeout if timeout else None
    core = _CDCL(num_vars, clauses)
    status = core.solve(deadline)
    model = core.model() if status == SAT else None
    return SolveResult(status, model, time.monotonic() - start)


# -- python-sat ---------------------------------------------------------------


class PySatSolver:
    def __init__(self, backend: str = "maplechrono"):
        try:
            import pysat.solvers  # noqa: F401
        except ImportError as exc:  # pragma: no cover - depends on environment
            raise SolverError("python-sat is not installed") from exc
        self.backend = backend
        self.name = f"pysat:{backend}"

    def solve(self, cnf: CnfInstance, timeout: float | None = None) -> SolveResult:
        from pysat.solvers import Solver as _Solver

        start = time.monotonic()
        with _Solver(name=self.backend, bootstrap_with=cnf.clauses) as s:
            if timeout:
                timer = threading.Timer(timeout, s.interrupt)
                timer.start()
                try:
                    answer = s.solve_limited(expect_interrupt=True)
                finally:
                    timer.cancel()
            else:
                answer = s.solve()
            elapsed = time.monotonic() - start
            if answer is None:
                return SolveResult(TIMEOUT, None, elapsed)
            if not answer:
                return SolveResult(UNSAT, None, elapsed)
            model = _complete_model(s.get_model() or [], cnf.num_vars)
            return SolveResult(SAT, model, elapsed)


def _complete_model(lits: Sequence[int], num_vars: int) -> tuple[int, ...]:
    truth = {abs(l): l > 0 for l in lits}
    return tuple(v if truth.get(v, False) else -v for v in range(1, num_vars + 1))


# -- external executable ----------------------------------------------------------


def parse_competition_output(text: str, num_vars: int) -> tuple[str, tuple[int, ...] | None]:
    status = None
    lits: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("s "):
            word = line[2:].strip().upper()
            if word == "SATISFIABLE":
                status = SAT
            elif word == "UNSATISFIABLE":
                status = UNSAT
            else:
                status = TIMEOUT
        elif line.startswith("v "):
            lits.extend(int(tok) for tok in line[2:].split() if tok != "0")
    if status is None:
        raise SolverError("solver output has no 's' status line")
    if status == SAT:
        return SAT, _complete_model(lits, num_vars)
    return status, None


class ExecSolver:
    def __init__(self, path: str, args: Sequence[str] = ()):
        self.path = path
        self.args = list(args)
        self.name = f"exec:{path}"

    def solve(self, cnf: CnfInstance, timeout: float | None = None) -> SolveResult:
        start = time.monotonic()
        with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
            cnf.write_dimacs(fh)
            cnf_path = fh.name
        try:
            proc = subprocess.run(
                [self.path, *self.args, cnf_path],
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            return SolveResult(TIMEOUT, None, time.monotonic() - start)
        except OSError as exc:
            raise SolverError(f"cannot run solver {self.path!r}: {exc}") from exc
        finally:
            os.unlink(cnf_path)
        # 10/20 are the conventional SAT/UNSAT exit codes; anything else must
        # still carry a status line.
        status, model = parse_competition_output(proc.stdout, cnf.num_vars)
        return SolveResult(status, model, time.monotonic() - start)


def pysat_available() -> bool:
    try:
        import pysat.solvers  # noqa: F401
    except ImportError:
        return False
    return True


def get_solver(spec: str | None = None) -> Solver:
    """Resolve a solver spec: ``auto``, ``builtin``, ``pysat[:name]``, ``exec:<path>``.

    ``None`` falls back to ``$FILTERMIN_SOLVER`` and then ``auto``.
    """
    if spec is None:
        spec = os.environ.get(ENV_SOLVER, "auto")
    if spec == "auto":
        return PySatSolver() if pysat_available() else BuiltinSolver()
    if spec == "builtin":
        return BuiltinSolver()
    if spec == "pysat" or spec.startswith("pysat:"):
        _, _, backend = spec.partition(":")
        return PySatSolver(backend or "maplechrono")
    if spec.startswith("exec:"):
        return ExecSolver(spec[len("exec:"):])
    if os.path.sep in spec or os.path.exists(spec):
        return ExecSolver(spec)
    raise SolverError(f"unknown solver spec {spec!r}")
