import random

import pytest

from filtermin.instances import builtin
from filtermin.oracle import random_filter
from filtermin.solvers import BuiltinSolver, PySatSolver, pysat_available


@pytest.fixture(scope="session")
def nd():
    return builtin("counterexample-nd")[0]


@pytest.fixture(scope="session")
def split_choice():
    return builtin("split-choice")[0]


@pytest.fixture(scope="session")
def drone():
    return builtin("drone")[0]


SOLVER_PARAMS = ["builtin"] + (["pysat"] if pysat_available() else [])


@pytest.fixture(params=SOLVER_PARAMS)
def solver(request):
    return BuiltinSolver() if request.param == "builtin" else PySatSolver()


def random_filters(seed, count, lo=2, hi=6, **kw):
    """Reproducible batch of random deterministic filters."""
    rng = random.Random(seed)
    return [random_filter(rng, rng.randint(lo, hi), **kw) for _ in range(count)]
