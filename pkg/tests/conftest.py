import json
import math
from pathlib import Path

import pytest

from nonlocal_sps import exprlang as el
from nonlocal_sps.problem import Problem, load_problem

GOLDEN = Path(__file__).parent / "golden"

P1_DOC = {
    "k": -2, "a": 0, "gamma": 0.25, "b": 0.5, "f": "y^2 + u", "u": "t", "g": "y",
    "eta": "-1 + sqrt(1 - t)", "lambda": 1.6,
}

# lower end of the admissible lambda range for P1
P1_LAMBDA_LO = 2 / (math.sqrt(2) + math.sqrt(3)) + 2 - math.sqrt(2)


@pytest.fixture
def p1_doc():
    return dict(P1_DOC)


@pytest.fixture
def p1() -> Problem:
    return load_problem(P1_DOC)


@pytest.fixture
def p1_json(tmp_path):
    path = tmp_path / "P1.json"
    path.write_text(json.dumps(P1_DOC))
    return path


def linear_problem(eps=None, lam=1.0, k=-3.0) -> Problem:
    """f = -lam*y + u with u = k - lam times an affine eta: y_tilde is exact."""
    eta = "1 - 2*t"
    u = f"({k + lam})*(1 - 2*t)"
    return Problem(k=k, a=0.0, gamma=0.3, b=1.0, f=el.parse(f"(-{lam})*y + u"),
                   u=el.parse(u), lam=lam, epsilon=eps, eta=el.parse(eta))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
