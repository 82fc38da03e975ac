from pathlib import Path

import pytest

from paritycc.problem import HCBOProblem, LogicalTerm

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"

SIX_TERMS = [(1, 2), (1, 5), (2, 4), (4, 5), (1, 2, 3), (3, 4, 5)]
FIVE_CYCLE = [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)]
CHAIN_DEMO = [(1, 2), (1, 3), (1, 4), (2, 3), (1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]


def make_problem(n, terms, **kw) -> HCBOProblem:
    return HCBOProblem(n, [LogicalTerm(t, 1.0) for t in terms], **kw)


def problem_file(name: str) -> Path:
    return PROBLEMS / f"{name}.json"


@pytest.fixture
def six_terms():
    return make_problem(5, SIX_TERMS)


@pytest.fixture
def five_cycle():
    return make_problem(5, FIVE_CYCLE)


@pytest.fixture
def chain_demo():
    return make_problem(4, CHAIN_DEMO)


@pytest.fixture
def constrained():
    return HCBOProblem.load(problem_file("constrained"))
