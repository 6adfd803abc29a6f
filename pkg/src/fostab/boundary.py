"""Stability boundary in parameter space.

A parameter point is on the boundary when the characteristic function has a
zero on the imaginary axis.  Putting ``s = r e^{i pi/2}`` with ``r > 0`` splits
``Delta(s) = 0`` into two real equations ``f1(r) = 0`` (real part) and
``f2(r) = 0`` (imaginary part), with ``r`` as an intermediate unknown.

Two routes are provided: a closed-form elimination of ``r`` for three-term
equations, and a numeric trace driven by root-count flips between grid
nodes, refined by Newton's method on ``(f1, f2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .quasipoly import Number, QuasiPolynomial, SymbolicQuasiPolynomial, bind
from .regions import OUT_OF_MODEL, LabelGrid, OrderSlice, label_point
from .rhp_counter import TAU_MARGIN, contour_radii

LOCATE_TOL = 1e-4
NEWTON_TOL = 1e-9
NEWTON_MAX_ITER = 40


class DegenerateElimination(ArithmeticError):
    """The 2x2 elimination for a trinomial is singular (exponent gap even)."""


@dataclass(frozen=True)
class CriticalSplit:
    """``f1(r) + i f2(r) = Delta(i r)`` for ``Delta = sum c_k s^{e_k}``."""

    coeffs: tuple[float, ...]
    exponents: tuple[float, ...]

    def _terms(self, r):
        r = np.asarray(r, dtype=float)[..., None]
        c, e = np.asarray(self.coeffs), np.asarray(self.exponents)
        return c * r ** e, e * np.pi / 2

    def f1(self, r):
        mag, ang = self._terms(r)
        return np.sum(mag * np.cos(ang), axis=-1)

    def f2(self, r):
        mag, ang = self._terms(r)
        return np.sum(mag * np.sin(ang), axis=-1)

    def normalized(self, r):
        """``(f1, f2)`` divided by the term magnitude sum."""
        mag, ang = self._terms(r)
        norm = np.sum(np.abs(mag), axis=-1)
        return np.sum(mag * np.cos(ang), axis=-1) / norm, np.sum(mag * np.sin(ang), axis=-1) / norm


def critical_split(qp: QuasiPolynomial) -> CriticalSplit:
    return CriticalSplit(qp.coeffs, qp.exponents)


# --------------------------------------------------------------------------
# closed form for trinomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrinomialBoundary:
    """Boundary residual for ``c1 s^{E1} + c2 s^{E2} + c0``.

    With ``X = r^{E1}`` and ``Y = r^{E2}`` the split equations are linear:

        c1 cos(E1 pi/2) X + c2 cos(E2 pi/2) Y = -c0
        c1 sin(E1 pi/2) X + c2 sin(E2 pi/2) Y = 0

    so ``X = -c0 sin(E2 pi/2) / (c1 sin((E2-E1) pi/2))`` and
    ``Y = c0 sin(E1 pi/2) / (c2 sin((E2-E1) pi/2))``.  A boundary point needs
    both positive and ``X^{E2} = Y^{E1}``; the residual compares logarithms,
    ``E2 log X - E1 log Y``, so no fractional power of a negative base is taken.
    The term identity (which symbolic term is ``E1``) is fixed once, so the
    residual's sign is continuous across the slice.
    """

    sym: SymbolicQuasiPolynomial
    slice: OrderSlice
    first: int
    second: int
    const: int

    def eliminate(self, coords: Sequence[Number]):
        """``(X, Y, E1, E2)`` at a slice point."""
        pt = self.slice.point(coords)
        vals = [(float(c.evaluate(pt)), float(e.evaluate(pt))) for c, e in self.sym.terms]
        (c1, e1), (c2, e2), (c0, _) = vals[self.first], vals[self.second], vals[self.const]
        d = math.sin((e2 - e1) * math.pi / 2)
        if abs(d) < 1e-14:
            raise DegenerateElimination(f"sin((E2-E1) pi/2) = 0 at {pt}")
        x = -c0 * math.sin(e2 * math.pi / 2) / (c1 * d)
        y = c0 * math.sin(e1 * math.pi / 2) / (c2 * d)
        return x, y, e1, e2

    def residual(self, coords: Sequence[Number]) -> float:
        """Zero on the boundary; NaN where the elimination is infeasible."""
        try:
            x, y, e1, e2 = self.eliminate(coords)
        except DegenerateElimination:
            return math.nan
        if not (x > 0 and y > 0):
            return math.nan
        return e2 * math.log(x) - e1 * math.log(y)

    def radius(self, coords: Sequence[Number]) -> float:
        x, _, e1, _ = self.eliminate(coords)
        return x ** (1.0 / e1) if x > 0 else math.nan

    def grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        out = np.empty((len(axes[0]), len(axes[1])))
        for i, p in enumerate(axes[0]):
            for j, q in enumerate(axes[1]):
                out[i, j] = self.residual((p, q))
        return out


def _edge_zeros(fn, pa: np.ndarray, pb: np.ndarray, samples: int) -> list[np.ndarray]:
    """Zeros of ``fn`` on the segment ``pa``-``pb``.

    ``fn`` is NaN where infeasible and tends to +-infinity at the feasibility
    frontier, so a feasible sample next to an infeasible one is bracketed
    against a point pushed to within 1e-12 of the frontier.
    """
    at = lambda t: fn(pa + t * (pb - pa))
    ts = np.linspace(0.0, 1.0, samples + 1)
    vals = [at(t) for t in ts]
    out = []

    def frontier(t_ok, t_bad):
        for _ in range(45):
            mid = 0.5 * (t_ok + t_bad)
            if math.isfinite(at(mid)):
                t_ok = mid
            else:
                t_bad = mid
        return t_ok

    for k in range(samples):
        t0, t1, g0, g1 = ts[k], ts[k + 1], vals[k], vals[k + 1]
        brackets = []
        if math.isfinite(g0) and math.isfinite(g1):
            if g0 == 0:
                out.append(pa + t0 * (pb - pa))
            elif g0 * g1 < 0:
                brackets.append((t0, t1))
        elif math.isfinite(g0) != math.isfinite(g1):
            t_ok, t_bad = (t0, t1) if math.isfinite(g0) else (t1, t0)
            tf = frontier(t_ok, t_bad)
            if at(tf) * at(t_ok) < 0:
                brackets.append((min(t_ok, tf), max(t_ok, tf)))
        for lo, hi in brackets:
            t = brentq(at, lo, hi, xtol=1e-13)
            out.append(pa + t * (pb - pa))
    if math.isfinite(vals[-1]) and vals[-1] == 0:
        out.append(pb.copy())
    return out


def trinomial_zero_set(tb: TrinomialBoundary, axes: Sequence[np.ndarray], samples: int = 16) -> np.ndarray:
    """Points of the closed-form boundary on the grid lines through ``axes``."""
    pts = []
    P, Q = axes
    for j, q in enumerate(Q):
        for i in range(len(P) - 1):
            pts += _edge_zeros(tb.residual, np.array([P[i], q]), np.array([P[i + 1], q]), samples)
    for i, p in enumerate(P):
        for j in range(len(Q) - 1):
            pts += _edge_zeros(tb.residual, np.array([p, Q[j]]), np.array([p, Q[j + 1]]), samples)
    return np.array(pts).reshape(-1, 2)


def trinomial_boundary(sym: SymbolicQuasiPolynomial, slc: OrderSlice) -> TrinomialBoundary:
    """Closed-form boundary residual for a three-term equation with a constant term."""
    sym = slc.restrict(sym)
    if len(sym.terms) != 3:
        raise ValueError(f"trinomial elimination needs exactly three terms, got {len(sym.terms)}")
    consts = [k for k, (_, e) in enumerate(sym.terms) if e.is_constant and e.const == 0]
    if len(consts) != 1:
        raise ValueError("trinomial elimination needs exactly one constant (s^0) term")
    first, second = [k for k in range(3) if k != consts[0]]
    return TrinomialBoundary(sym, slc, first, second, consts[0])


# --------------------------------------------------------------------------
# numeric location of crossings
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryPoint:
    coords: tuple[float, ...]
    r: float
    refined: bool
    labels: tuple[int, int] = (0, 0)


def _affine_along(expr, pa, pb, params):
    """Value and slope of an affine expression along ``pa + t (pb - pa)``."""
    a = float(expr.evaluate(dict(zip(params, pa))))
    b = float(expr.evaluate(dict(zip(params, pb))))
    return a, b - a


def _newton(sym: SymbolicQuasiPolynomial, params, pa, pb, t0: float, u0: float):
    """Solve ``Delta(e^{u + i pi/2}) = 0`` for ``(u, t)`` along a segment.

    The function is divided by its dominant term at the start so that large
    ``r`` cannot overflow; the zero set is unchanged.
    """
    ce = [(_affine_along(c, pa, pb, params), _affine_along(e, pa, pb, params)) for c, e in sym.terms]
    c0 = np.array([c[0] for c, _ in ce])
    c1 = np.array([c[1] for c, _ in ce])
    e0 = np.array([e[0] for _, e in ce])
    e1 = np.array([e[1] for _, e in ce])

    def parts(u, t):
        c = c0 + c1 * t
        e = e0 + e1 * t
        with np.errstate(divide="ignore"):
            logmag = np.log(np.abs(c)) + e * u
        return c, e, logmag

    _, e_start, lm = parts(u0, t0)
    ref_e, ref_slope = e_start[np.argmax(lm)], e1[np.argmax(lm)]
    z = 1j * np.pi / 2

    def evaluate(u, t):
        c, e, _ = parts(u, t)
        w = np.exp((e - (ref_e + ref_slope * (t - t0))) * (u + z))
        f = np.sum(c * w)
        norm = np.sum(np.abs(c * w))
        fu = np.sum(c * (e - ref_e - ref_slope * (t - t0)) * w)
        ft = np.sum((c1 + c * (e1 - ref_slope) * (u + z)) * w)
        return f, norm, fu, ft

    u, t = u0, t0
    f, norm, fu, ft = evaluate(u, t)
    res = abs(f) / norm
    for _ in range(NEWTON_MAX_ITER):
        if res < NEWTON_TOL:
            return u, t, res
        jac = np.array([[fu.real, ft.real], [fu.imag, ft.imag]])
        try:
            du, dt = np.linalg.solve(jac, [-f.real, -f.imag])
        except np.linalg.LinAlgError:
            break
        step = 1.0
        for _ in range(30):
            nu, nt = u + step * du, t + step * dt
            nf, nnorm, nfu, nft = evaluate(nu, nt)
            nres = abs(nf) / nnorm
            if np.isfinite(nres) and nres < res:
                u, t, f, norm, fu, ft, res = nu, nt, nf, nnorm, nfu, nft, nres
                break
            step *= 0.5
        else:
            break
    return u, t, res


def _initial_radius(qp: QuasiPolynomial) -> float:
    """``log r`` minimizing the normalized ``|Delta(i r)|`` on a log grid."""
    from .quasipoly import factor_origin
    from .rhp_counter import _values

    fq = factor_origin(qp)
    if len(fq) < 2:
        return 0.0
    con = contour_radii(fq)
    u = np.linspace(con.log_eps, con.log_R, 4001)
    vals, norm = _values(fq, u, np.full_like(u, np.pi / 2))
    return float(u[np.argmin(np.abs(vals) / norm)])


def locate_crossing(sym: SymbolicQuasiPolynomial, slc: OrderSlice, a: Sequence[float], b: Sequence[float],
                    tol: float = LOCATE_TOL, tau_margin: float = TAU_MARGIN,
                    labels: tuple[int, int] | None = None) -> BoundaryPoint:
    """Boundary point on the segment ``a``-``b`` whose endpoint labels differ.

    ``sym`` must already be restricted to the slice.  Bisection on the labels
    brings the bracket below ``tol``; Newton on ``(f1, f2)`` in ``(log r, t)``
    then refines it.  If Newton fails or leaves the bracket, the bisection
    midpoint is returned with ``refined=False``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    la, lb = labels if labels is not None else (label_point(sym, slc, a, tau_margin),
                                               label_point(sym, slc, b, tau_margin))
    if la == lb:
        raise ValueError(f"segment endpoints share label {la}; no crossing to locate")
    lo, hi = 0.0, 1.0
    scale = float(np.max(np.abs(b - a)))
    while (hi - lo) * scale >= tol:
        mid = 0.5 * (lo + hi)
        lm = label_point(sym, slc, a + mid * (b - a), tau_margin)
        if lm == la:
            lo = mid
        else:
            hi = mid
    tm = 0.5 * (lo + hi)
    mid_pt = a + tm * (b - a)
    try:
        u0 = _initial_radius(bind(sym, slc.point(mid_pt)))
        u, t, res = _newton(sym, slc.params, a, b, tm, u0)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        res = math.inf
    if res < NEWTON_TOL and abs(t - tm) <= 2 * (hi - lo):
        return BoundaryPoint(tuple(map(float, a + t * (b - a))), float(math.exp(u)), True, (la, lb))
    return BoundaryPoint(tuple(map(float, mid_pt)), math.nan, False, (la, lb))


# --------------------------------------------------------------------------
# tracing over a labelled grid
# --------------------------------------------------------------------------

def _flipped_edges(labels: np.ndarray):
    """Grid edges whose endpoint labels differ (out-of-model nodes ignored).

    Keys are ``("h", i, j)`` for node (i,j)-(i+1,j) and ``("v", i, j)`` for
    node (i,j)-(i,j+1).
    """
    W, H = labels.shape
    edges = []
    for i in range(W - 1):
        for j in range(H):
            la, lb = labels[i, j], labels[i + 1, j]
            if la != lb and OUT_OF_MODEL not in (la, lb):
                edges.append(("h", i, j))
    for i in range(W):
        for j in range(H - 1):
            la, lb = labels[i, j], labels[i, j + 1]
            if la != lb and OUT_OF_MODEL not in (la, lb):
                edges.append(("v", i, j))
    return edges


def _link(points: dict, W: int, H: int):
    """Connect crossings inside each grid cell (marching squares)."""
    adj: dict = {k: set() for k in points}
    extra: dict = {}
    for i in range(W - 1):
        for j in range(H - 1):
            sides = [k for k in (("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)) if k in points]
            if len(sides) < 2:
                continue
            if len(sides) == 2:
                pairs = [(sides[0], sides[1])]
            elif len(sides) == 4:
                by_pair: dict = {}
                for k in sides:
                    by_pair.setdefault(frozenset(points[k].labels), []).append(k)
                if all(len(v) == 2 for v in by_pair.values()) and len(by_pair) == 2:
                    pairs = [tuple(v) for v in by_pair.values()]
                else:
                    s = sides
                    d = lambda x, y: np.hypot(*np.subtract(points[x].coords, points[y].coords))
                    opt1 = d(s[0], s[1]) + d(s[2], s[3])
                    opt2 = d(s[0], s[3]) + d(s[1], s[2])
                    pairs = [(s[0], s[1]), (s[2], s[3])] if opt1 <= opt2 else [(s[0], s[3]), (s[1], s[2])]
            else:
                hub = ("c", i, j)
                extra[hub] = BoundaryPoint(tuple(np.mean([points[k].coords for k in sides], axis=0)), math.nan, False)
                adj[hub] = set()
                pairs = [(hub, k) for k in sides]
            for x, y in pairs:
                adj[x].add(y)
                adj[y].add(x)
    points = {**points, **extra}
    return points, adj


def _polylines(points: dict, adj: dict) -> list[list[BoundaryPoint]]:
    used = set()
    lines = []

    def walk(start, nxt):
        path = [start]
        prev, cur = start, nxt
        used.add(frozenset((prev, cur)))
        while True:
            path.append(cur)
            if len(adj[cur]) != 2:
                break
            (n,) = [x for x in adj[cur] if frozenset((cur, x)) not in used] or [None]
            if n is None:
                break
            used.add(frozenset((cur, n)))
            prev, cur = cur, n
        return path

    for k in sorted(adj):
        if len(adj[k]) != 2:
            for n in sorted(adj[k]):
                if frozenset((k, n)) not in used:
                    lines.append(walk(k, n))
    for k in sorted(adj):
        for n in sorted(adj[k]):
            if frozenset((k, n)) not in used:
                lines.append(walk(k, n))
    for k in sorted(adj):
        if not adj[k]:
            lines.append([k])
    return [[points[k] for k in line] for line in lines]


def trace_boundary(grid: LabelGrid, tol: float = LOCATE_TOL) -> list[list[BoundaryPoint]]:
    """Boundary polylines of a labelled 2-D grid.

    Every edge with differing endpoint labels yields a located crossing;
    crossings are linked through shared grid cells.  Points are in slice
    coordinates.
    """
    if grid.slice.dim != 2:
        raise ValueError("boundary tracing needs a two-parameter slice")
    W, H = grid.shape
    points = {}
    for kind, i, j in _flipped_edges(grid.labels):
        i2, j2 = (i + 1, j) if kind == "h" else (i, j + 1)
        la, lb = int(grid.labels[i, j]), int(grid.labels[i2, j2])
        points[(kind, i, j)] = locate_crossing(grid.sym, grid.slice, grid.coords(i, j), grid.coords(i2, j2),
                                               tol, grid.tau_margin, labels=(la, lb))
    points, adj = _link(points, W, H)
    return _polylines(points, adj)
