import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fostab import QuasiPolynomial, bind, evaluate, symbolic_from_terms
from fostab.boundary import (LOCATE_TOL, critical_split, locate_crossing, trace_boundary, trinomial_boundary,
                             trinomial_zero_set)
from fostab.rational_oracle import oracle_verdict
from fostab.regions import OrderSlice, classify_grid, label_point

from conftest import random_quasipoly

UNIT_SQUARE = OrderSlice(("alpha", "beta"), [(0, 2), (0, 2)], orders=("alpha", "beta"))


def split_residual(sym, slc, pt):
    f1, f2 = critical_split(bind(sym, slc.point(pt.coords))).normalized(pt.r)
    return max(abs(f1), abs(f2))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), r=st.floats(1e-3, 1e3))
def test_recombination(seed, r):
    qp = random_quasipoly(np.random.default_rng(seed))
    cs = critical_split(qp)
    want = abs(evaluate(qp, 1j * r)) ** 2
    assert cs.f1(r) ** 2 + cs.f2(r) ** 2 == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_split_of_two_order_trinomial():
    a, b, al, be = -2.0, 0.7, 0.8, 1.5
    cs = critical_split(QuasiPolynomial.from_terms([(1, al), (-a, be), (b, 0)]))
    for r in (0.3, 1.0, 4.0):
        assert cs.f1(r) == pytest.approx(r ** al * math.cos(al * math.pi / 2) - a * r ** be * math.cos(be * math.pi / 2) + b)
        assert cs.f2(r) == pytest.approx(r ** al * math.sin(al * math.pi / 2) - a * r ** be * math.sin(be * math.pi / 2))


def test_split_of_axis_root():
    cs = critical_split(QuasiPolynomial.from_terms([(1, 2), (1, 0)]))
    assert cs.f1(1.0) == pytest.approx(0.0, abs=1e-15)
    assert cs.f2(np.array([0.5, 1.0, 2.0])) == pytest.approx(0.0, abs=1e-14)
    assert cs.f1(2.0) == pytest.approx(-3.0)


def test_cramer_elimination_solves_linear_system_and_printed_form_does_not():
    rng = np.random.default_rng(4)
    for _ in range(50):
        al, be = rng.uniform(0.1, 1.9, size=2)
        a, b = rng.uniform(-3, 3, size=2)
        sym = symbolic_from_terms([("1", "alpha"), (str(Fraction(-a).limit_denominator(10 ** 9)), "beta"),
                                   (str(Fraction(b).limit_denominator(10 ** 9)), "0")])
        tb = trinomial_boundary(sym, UNIT_SQUARE)
        X, Y, e1, e2 = tb.eliminate((al, be))
        c1, c2, c0 = 1.0, -a, b
        for trig in (math.cos, math.sin):
            rhs = -c0 if trig is math.cos else 0.0
            lhs = c1 * trig(e1 * math.pi / 2) * X + c2 * trig(e2 * math.pi / 2) * Y
            assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(c0)))
        d = math.sin((be - al) * math.pi / 2)
        Xp = b * math.sin(al * math.pi / 2) / d  # printed r^alpha
        lhs = c1 * math.sin(e1 * math.pi / 2) * Xp + c2 * math.sin(e2 * math.pi / 2) * Y
        assert abs(lhs) > 1e-9


def test_trinomial_symmetry():
    sym = symbolic_from_terms([("1", "alpha"), ("1", "beta"), ("1", "0")])
    tb = trinomial_boundary(sym, UNIT_SQUARE)
    for p, q in [(0.3, 1.1), (1.7, 0.4), (0.9, 1.8), (1.2, 1.3)]:
        g1, g2 = tb.residual((p, q)), tb.residual((q, p))
        if math.isnan(g1):
            assert math.isnan(g2)
        else:
            assert g1 == pytest.approx(-g2, abs=1e-12)


def test_trinomial_zero_points_solve_split(boost_sym):
    tb = trinomial_boundary(boost_sym, UNIT_SQUARE)
    axes = UNIT_SQUARE.axes(20)
    pts = trinomial_zero_set(tb, axes)
    assert len(pts) > 10
    for pt in pts:
        r = tb.radius(pt)
        f1, f2 = critical_split(bind(boost_sym, UNIT_SQUARE.point(pt))).normalized(r)
        assert max(abs(f1), abs(f2)) < 1e-9


def test_trinomial_needs_three_terms(boost_sym):
    with pytest.raises(ValueError):
        trinomial_boundary(symbolic_from_terms([("1", "alpha"), ("1", "0")]), UNIT_SQUARE)


def test_locate_crossing_boost(boost_sym):
    pt = locate_crossing(boost_sym, UNIT_SQUARE, (1.0, 1.0), (1.9, 1.9))
    assert pt.refined and pt.r > 0
    assert split_residual(boost_sym, UNIT_SQUARE, pt) < 1e-9
    c = np.array(pt.coords)
    step = 2 * LOCATE_TOL * np.array([1, 1]) / math.sqrt(2)
    below = label_point(boost_sym, UNIT_SQUARE, c - step)
    above = label_point(boost_sym, UNIT_SQUARE, c + step)
    assert below == 0 and above > 0
    # rational points on either side agree with the exact reduction
    lo = [Fraction(round(x * 100), 100) - Fraction(1, 100) for x in c]
    hi = [Fraction(round(x * 100), 100) + Fraction(1, 100) for x in c]
    assert oracle_verdict(boost_sym, dict(zip(("alpha", "beta"), lo))).label == 0
    assert oracle_verdict(boost_sym, dict(zip(("alpha", "beta"), hi))).label == above


def test_locate_crossing_same_labels(boost_sym):
    with pytest.raises(ValueError):
        locate_crossing(boost_sym, UNIT_SQUARE, (1.0, 1.0), (0.5, 0.5))


def test_locate_crossing_one_parameter():
    sym = symbolic_from_terms([("1", "2"), ("c", "0")])
    slc = OrderSlice(("c",), [(-1, 1)])
    pt = locate_crossing(sym, slc, (-1.0,), (1.0,))
    assert abs(pt.coords[0]) < LOCATE_TOL
    assert pt.labels == (1, -1)


@pytest.fixture(scope="module")
def boost_trace(boost_sym):
    grid = classify_grid(boost_sym, UNIT_SQUARE, 40)
    return grid, trace_boundary(grid)


def test_trace_boost_single_curve(boost_trace, boost_sym):
    grid, lines = boost_trace
    assert len(lines) == 1
    pts = lines[0]
    assert all(p.refined for p in pts)
    assert max(split_residual(grid.sym, UNIT_SQUARE, p) for p in pts) < 1e-9


def test_trace_points_separate_labels(boost_trace):
    grid, lines = boost_trace
    line = lines[0]
    delta = 2 * LOCATE_TOL
    for k in range(1, len(line) - 1, 3):
        tangent = np.subtract(line[k + 1].coords, line[k - 1].coords)
        normal = np.array([-tangent[1], tangent[0]]) / np.linalg.norm(tangent)
        c = np.array(line[k].coords)
        la, lb = grid.label_at(c + delta * normal), grid.label_at(c - delta * normal)
        assert la != lb or grid.label_at(c) == -1


def test_every_flipped_edge_is_crossed(boost_trace):
    grid, lines = boost_trace
    pts = np.array([p.coords for line in lines for p in line])
    diag = math.hypot(*grid.cell)
    L = grid.labels
    W, H = L.shape
    for i in range(W):
        for j in range(H):
            for i2, j2 in ((i + 1, j), (i, j + 1)):
                if i2 < W and j2 < H and L[i, j] != L[i2, j2]:
                    mid = 0.5 * (np.array(grid.coords(i, j)) + np.array(grid.coords(i2, j2)))
                    assert np.min(np.hypot(*(pts - mid).T)) <= diag


def test_trace_agrees_with_closed_form(boost_trace, boost_sym):
    grid, lines = boost_trace
    tb = trinomial_boundary(boost_sym, UNIT_SQUARE)
    closed = trinomial_zero_set(tb, grid.axes)
    traced = np.array([p.coords for line in lines for p in line])
    cell = max(grid.cell)
    d1 = np.min(np.linalg.norm(closed[:, None] - traced[None], axis=2), axis=1)
    d2 = np.min(np.linalg.norm(traced[:, None] - closed[None], axis=2), axis=1)
    assert d1.max() <= 2 * cell and d2.max() <= 2 * cell
