from pathlib import Path

import numpy as np
import pytest

from fostab import FractionalSystem, QuasiPolynomial, expand_characteristic, symbolic_from_terms

SPECS = Path(__file__).resolve().parents[1] / "specs"

BOOST_A = [["0", "-1000/3"], ["10000", "-1000/3"]]
THREE_ORDER_A = [[1, -1, 0], [0, 2, -1], [10, 10, 20]]


@pytest.fixture
def specs() -> Path:
    return SPECS


@pytest.fixture(scope="session")
def boost_sym():
    return expand_characteristic(FractionalSystem(BOOST_A, ["alpha", "beta"]))


@pytest.fixture(scope="session")
def trinomial_sym():
    return symbolic_from_terms([("1", "a1+a2"), ("12", "a1"), ("34", "0")])


def random_quasipoly(rng: np.random.Generator, max_terms: int = 6, max_exp: float = 6.0) -> QuasiPolynomial:
    """Constant term plus up to ``max_terms - 1`` powers with exponents in (0, max_exp)."""
    k = int(rng.integers(1, max_terms))
    exps = rng.uniform(0.0, max_exp, size=k)
    coeffs = rng.uniform(0.5, 5.0, size=k + 1) * rng.choice([-1.0, 1.0], size=k + 1)
    return QuasiPolynomial.from_terms(list(zip(coeffs, [*exps, 0.0])))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
