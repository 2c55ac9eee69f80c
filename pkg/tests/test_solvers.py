import itertools
import os
import random
import stat
import sys
import textwrap

import pytest

from filtermin.encode import CnfInstance
from filtermin.solvers import (
    SAT,
    TIMEOUT,
    UNSAT,
    BuiltinSolver,
    ExecSolver,
    PySatSolver,
    SolverError,
    get_solver,
    parse_competition_output,
    pysat_available,
    solve_clauses,
)


def cnf_of(num_vars, clauses):
    return CnfInstance(k=1, states=(), zippers=(), num_vars=num_vars, clauses=[list(c) for c in clauses], var_map={})


def random_cnf(rng, n, m, width=3):
    return [[rng.choice([-1, 1]) * v for v in rng.sample(range(1, n + 1), min(width, n))] for _ in range(m)]


def brute_sat(n, clauses):
    for bits in itertools.product([False, True], repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def satisfies(model, clauses):
    truth = {abs(l): l > 0 for l in model}
    return all(any(truth[abs(l)] == (l > 0) for l in c) for c in clauses)


def test_builtin_matches_brute_force():
    rng = random.Random(70)
    for _ in range(300):
        n = rng.randint(1, 10)
        clauses = random_cnf(rng, n, rng.randint(1, 5 * n))
        res = solve_clauses(n, clauses)
        assert res.status == (SAT if brute_sat(n, clauses) else UNSAT)
        if res.status == SAT:
            assert len(res.model) == n
            assert satisfies(res.model, clauses)


def test_builtin_handles_units_and_duplicates():
    assert solve_clauses(2, [[1], [-1]]).status == UNSAT
    res = solve_clauses(3, [[1, 1, -2], [2], [3, -3]])
    assert res.status == SAT and satisfies(res.model, [[1, -2], [2]])
    assert solve_clauses(0, []).status == SAT


def test_builtin_pigeonhole_unsat():
    # 5 pigeons, 4 holes
    P, H = 5, 4
    var = lambda p, h: p * H + h + 1
    clauses = [[var(p, h) for h in range(H)] for p in range(P)]
    for h in range(H):
        for a, b in itertools.combinations(range(P), 2):
            clauses.append([-var(a, h), -var(b, h)])
    assert BuiltinSolver().solve(cnf_of(P * H, clauses)).status == UNSAT


def test_builtin_timeout_reported():
    P, H = 10, 9
    var = lambda p, h: p * H + h + 1
    clauses = [[var(p, h) for h in range(H)] for p in range(P)]
    for h in range(H):
        for a, b in itertools.combinations(range(P), 2):
            clauses.append([-var(a, h), -var(b, h)])
    assert solve_clauses(P * H, clauses, timeout=0.2).status == TIMEOUT


def test_builtin_var_limit():
    with pytest.raises(SolverError):
        BuiltinSolver(max_vars=2).solve(cnf_of(3, [[1, 2, 3]]))


@pytest.mark.skipif(not pysat_available(), reason="python-sat not installed")
def test_pysat_agrees_with_builtin():
    rng = random.Random(71)
    s = PySatSolver()
    for _ in range(200):
        n = rng.randint(1, 12)
        clauses = random_cnf(rng, n, rng.randint(1, 5 * n))
        a = s.solve(cnf_of(n, clauses), timeout=10)
        assert a.status == solve_clauses(n, clauses).status
        if a.status == SAT:
            assert len(a.model) == n and satisfies(a.model, clauses)


def test_parse_competition_output():
    status, model = parse_competition_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 4)
    assert status == SAT and model == (1, -2, 3, -4)
    assert parse_competition_output("s UNSATISFIABLE\n", 2) == (UNSAT, None)
    assert parse_competition_output("s UNKNOWN\n", 2) == (TIMEOUT, None)
    with pytest.raises(SolverError):
        parse_competition_output("garbage\n", 1)


@pytest.fixture
def exec_script(tmp_path):
    """Tiny DIMACS solver front-end around the built-in CDCL core."""
    path = tmp_path / "mini_solver"
    path.write_text(textwrap.dedent(f"""\
        #!{sys.executable}
        import sys
        from filtermin.solvers import solve_clauses, SAT
        n, clauses, cur = 0, [], []
        for line in open(sys.argv[-1]):
            tok = line.split()
            if not tok or tok[0] == "c":
                continue
            if tok[0] == "p":
                n = int(tok[2])
                continue
            for t in map(int, tok):
                if t == 0:
                    clauses.append(cur)
                    cur = []
                else:
                    cur.append(t)
        res = solve_clauses(n, clauses)
        if res.status == SAT:
            print("s SATISFIABLE")
            print("v " + " ".join(map(str, res.model)) + " 0")
            sys.exit(10)
        print("s UNSATISFIABLE")
        sys.exit(20)
        """))
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


def test_exec_solver_round_trip(exec_script):
    rng = random.Random(72)
    s = get_solver(f"exec:{exec_script}")
    assert isinstance(s, ExecSolver)
    for _ in range(15):
        n = rng.randint(1, 8)
        clauses = random_cnf(rng, n, rng.randint(1, 4 * n))
        res = s.solve(cnf_of(n, clauses))
        assert res.status == (SAT if brute_sat(n, clauses) else UNSAT)
        if res.status == SAT:
            assert satisfies(res.model, clauses)


def test_exec_solver_missing_binary(tmp_path):
    with pytest.raises(SolverError):
        ExecSolver(str(tmp_path / "nope")).solve(cnf_of(1, [[1]]))


def test_exec_solver_timeout(tmp_path):
    path = tmp_path / "slow"
    path.write_text(f"#!{sys.executable}\nimport time\ntime.sleep(30)\n")
    path.chmod(0o755)
    assert ExecSolver(str(path)).solve(cnf_of(1, [[1]]), timeout=0.5).status == TIMEOUT


def test_get_solver_specs(monkeypatch, exec_script):
    assert get_solver("builtin").name == "builtin"
    if pysat_available():
        assert get_solver("pysat").name == "pysat:maplechrono"
        assert get_solver("pysat:glucose4").name == "pysat:glucose4"
        assert get_solver("auto").name.startswith("pysat")
    with pytest.raises(SolverError):
        get_solver("no-such-solver")
    monkeypatch.setenv("FILTERMIN_SOLVER", "builtin")
    assert get_solver().name == "builtin"
    monkeypatch.setenv("FILTERMIN_SOLVER", exec_script)
    assert isinstance(get_solver(), ExecSolver)
