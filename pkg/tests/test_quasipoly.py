from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fostab import (Affine, FractionalSystem, ModelError, QuasiPolynomial, bind, evaluate, expand_characteristic,
                    parse_affine, symbolic_from_terms)
from fostab.quasipoly import MAX_DIMENSION, characteristic_terms, factor_origin, parse_number

from conftest import BOOST_A, THREE_ORDER_A


def test_parse_number_is_exact_for_strings():
    assert parse_number("1000/3") == Fraction(1000, 3)
    assert parse_number("0.993") == Fraction(993, 1000)
    assert parse_number("-1.7764e-15") == Fraction(-17764, 10 ** 19)
    assert parse_number(7) == Fraction(7)
    assert isinstance(parse_number(0.5), float)
    for bad in ["abc", "1//2", "", True, None, float("nan")]:
        with pytest.raises(ModelError):
            parse_number(bad)


@pytest.mark.parametrize("text, point, value", [
    ("2*q1", {"q1": Fraction(1, 3)}, Fraction(2, 3)),
    ("2q1", {"q1": Fraction(1, 3)}, Fraction(2, 3)),
    ("-b", {"b": 5}, -5),
    ("alpha+beta-1/2", {"alpha": 1, "beta": Fraction(1, 4)}, Fraction(3, 4)),
    ("3/2", {}, Fraction(3, 2)),
])
def test_parse_affine(text, point, value):
    assert parse_affine(text).evaluate(point) == value


def test_affine_substitute_and_str_round_trip():
    e = parse_affine("q1 + q3").substitute({"q3": parse_affine("2*q1")})
    assert e == parse_affine("3*q1")
    assert parse_affine(str(e)) == e
    with pytest.raises(ModelError):
        parse_affine("q1*q2")


def test_system_validation():
    with pytest.raises(ModelError):
        FractionalSystem([[1, 2]], ["1/2"])
    with pytest.raises(ModelError):
        FractionalSystem([[-1]], ["5/2"])
    with pytest.raises(ModelError):
        FractionalSystem([[-1]], ["0"])
    with pytest.raises(ModelError):
        FractionalSystem([[1, 0], [0, 1]], ["1/2"])
    sys_ = FractionalSystem([[1, 0], [0, 1]], ["alpha", "beta"])
    with pytest.raises(ModelError):
        sys_.order_values({"alpha": 2, "beta": 1})


def test_dimension_cap():
    with pytest.raises(ModelError):
        characteristic_terms(np.eye(MAX_DIMENSION + 1).tolist())


def test_boost_converter_expansion_exact():
    sym = expand_characteristic(FractionalSystem(BOOST_A, ["alpha", "beta"]))
    got = {str(e): c.const for c, e in sym.terms}
    assert got == {"alpha+beta": 1, "alpha": Fraction(1000, 3), "0": Fraction(10 ** 7, 3)}


def test_three_order_expansion_matches_printed_equation():
    sym = expand_characteristic(FractionalSystem(THREE_ORDER_A, ["q1", "q2", "q3"]))
    printed = symbolic_from_terms([(1, "q1+q2+q3"), (-20, "q1+q2"), (-2, "q1+q3"), (-1, "q2+q3"),
                                   (50, "q1"), (20, "q2"), (2, "q3"), (-60, "0")])
    assert dict((e, c) for c, e in sym.terms) == dict((e, c) for c, e in printed.terms)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2 ** 32 - 1))
def test_expansion_matches_numeric_determinant(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(-5, 6, size=(n, n))
    orders = [Fraction(int(k), 10) for k in rng.integers(1, 20, size=n)]
    qp = bind(expand_characteristic(FractionalSystem(A.tolist(), orders)))
    for s in rng.normal(size=3) + 1j * rng.normal(size=3):
        diag = np.diag([s ** float(o) for o in orders])
        want = np.linalg.det(diag - A)
        assert abs(evaluate(qp, s) - want) <= 1e-9 * max(1.0, abs(want))


def test_evaluate_principal_branch():
    qp = QuasiPolynomial((1.0,), (0.5,))
    assert evaluate(qp, -1.0) == pytest.approx(1j)
    assert evaluate(qp, complex(-1.0, -0.0)) == pytest.approx(1j)
    assert evaluate(qp, -1j) == pytest.approx(np.exp(-1j * np.pi / 4))
    with pytest.raises(ValueError):
        evaluate(qp, 0)


def test_from_terms_merges_and_drops():
    qp = QuasiPolynomial.from_terms([(1.0, 1.0), (2.0, 1.0 + 1e-14), (1e-20, 0.5), (3.0, 0.0)])
    assert len(qp) == 2
    assert qp.exponents[0] == pytest.approx(1.0) and qp.exponents[1] == 0.0
    assert qp.coeffs == (3.0, 3.0)
    with pytest.raises(ModelError):
        QuasiPolynomial.from_terms([(1.0, 1.0), (-1.0, 1.0)])


def test_bind_and_factor_origin():
    sym = symbolic_from_terms([("1", "a1+a2"), ("12", "a1"), ("b", "0")])
    assert sym.symbols == ("a1", "a2", "b")
    qp = bind(sym, {"a1": 1, "a2": 1, "b": 0})
    assert qp.exponents == (2.0, 1.0)
    assert factor_origin(qp).exponents == (1.0, 0.0)
    with pytest.raises(ModelError):
        bind(symbolic_from_terms([("1", "a1-1")]), {"a1": Fraction(1, 2)})


def test_affine_coefficients_are_exact():
    a = Affine(Fraction(1, 3), (("b", Fraction(2)),))
    assert a.evaluate({"b": Fraction(1, 3)}) == 1
