"""Integer-exponent reduction for all-rational orders.

With every order ``v_i/u_i`` rational and ``m = lcm(u_i)``, the substitution
``s = lambda^m`` turns the characteristic function into an ordinary
polynomial in ``lambda``.  The system is stable iff every root satisfies
``|arg(lambda)| > pi/(2m)``.  The root count grows with ``m``, which is the
whole reason the contour counter exists; here the reduction serves as an
independent check on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .quasipoly import FractionalSystem, ModelError, Number, SymbolicQuasiPolynomial, characteristic_terms
from .rhp_counter import StabilityVerdict

MAX_DEGREE = 4000
TAU_ARG = 1e-9
BACKWARD_TOL = 1e-8


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegerExponentPolynomial:
    """Dense coefficients, ``coeffs[k]`` multiplies ``lambda^k``."""

    coeffs: tuple[Number, ...]
    m: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def nonzero(self) -> tuple[np.ndarray, np.ndarray]:
        """Sparse form ``(powers, coefficients)`` as float arrays."""
        k = np.array([i for i, c in enumerate(self.coeffs) if c != 0], dtype=float)
        c = np.array([float(c) for c in self.coeffs if c != 0], dtype=float)
        return k, c


def _exact(value: Number, what: str) -> Fraction:
    if isinstance(value, float):
        raise ModelError(f"{what} {value!r} is a binary float; the rational reduction needs exact "
                         "fractions (use the contour counter for real orders)")
    return Fraction(value)


def _from_exponent_terms(terms: Sequence[tuple[Number, Fraction]], m: int) -> IntegerExponentPolynomial:
    dense: dict[int, Number] = {}
    for c, e in terms:
        k = e * m
        if k.denominator != 1 or k < 0:
            raise ModelError(f"exponent {e} does not become a non-negative integer under m = {m}")
        dense[int(k)] = dense.get(int(k), 0) + c
    degree = max(k for k, c in dense.items() if c != 0) if any(c != 0 for c in dense.values()) else 0
    coeffs = tuple(dense.get(k, Fraction(0)) for k in range(degree + 1))
    return IntegerExponentPolynomial(coeffs, m)


def reduce(system: FractionalSystem, point=None) -> tuple[int, IntegerExponentPolynomial]:
    """``m`` and ``det(diag(lambda^{m alpha_i}) - A)`` for rational orders."""
    orders = [_exact(o, "order") for o in system.order_values(point)]
    m = math.lcm(*(o.denominator for o in orders))
    terms = []
    for subset, coeff in characteristic_terms(system.A):
        terms.append((coeff, sum((orders[i] for i in subset), Fraction(0))))
    return m, _from_exponent_terms(terms, m)


def reduce_terms(sym: SymbolicQuasiPolynomial, point=None) -> tuple[int, IntegerExponentPolynomial]:
    """Reduction of a directly given quasi-polynomial; ``m`` is the lcm of exponent denominators."""
    terms = [(c, _exact(e, "exponent")) for c, e in sym.exact_terms(point or {})]
    m = math.lcm(*(e.denominator for _, e in terms))
    return m, _from_exponent_terms(terms, m)


def _newton_polygon_guesses(k: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Initial points on circles whose radii come from the upper convex hull
    of ``(k, log|c_k|)``; one circle per hull edge, as many points as its width."""
    pts = list(zip(k.tolist(), np.log(np.abs(c)).tolist()))
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    guesses = []
    offset = 0.7  # irrational-ish rotation keeps starts off the symmetry axes
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        width = int(round(x2 - x1))
        radius = math.exp((y1 - y2) / (x2 - x1))
        ang = 2 * np.pi * (np.arange(width) + offset) / width + offset
        guesses.append(radius * np.exp(1j * ang))
        offset += 0.37
    return np.concatenate(guesses)


def _newton_ratio(z: np.ndarray, k: np.ndarray, c: np.ndarray):
    """``p(z)/p'(z)`` and the relative backward error, evaluated in log form
    so that high powers never overflow."""
    logz = np.log(z)[:, None]
    expo = k * logz
    shift = np.max(expo.real, axis=1, keepdims=True)
    t = c * np.exp(expo - shift)
    p = t.sum(axis=1)
    dp = (k * t).sum(axis=1)
    backward = np.abs(p) / np.abs(t).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = z * p / dp
    return ratio, backward


def polynomial_roots(poly: IntegerExponentPolynomial, max_iter: int = 500) -> np.ndarray:
    """All roots with multiplicity, via Aberth-Ehrlich simultaneous iteration.

    Roots at the origin are returned exactly (as zeros).  Each nonzero root
    satisfies ``|p(z)| <= 1e-8 * sum |c_k||z|^k``; otherwise
    :class:`RootFindingError` is raised.
    """
    d = poly.degree
    if d < 1:
        raise ValueError("polynomial has no roots (degree < 1)")
    if d > MAX_DEGREE:
        raise RootFindingError(f"degree {d} exceeds the root-finding cap of {MAX_DEGREE}")
    k, c = poly.nonzero()
    low = int(k[0])
    k = k - low
    deg = d - low
    if deg == 0:
        return np.zeros(d, dtype=complex)
    z = _newton_polygon_guesses(k, c)
    active = np.ones(deg, dtype=bool)
    backward = np.ones(deg)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ratio, bw = _newton_ratio(z[idx], k, c)
        backward[idx] = bw
        done = bw <= 4 * np.finfo(float).eps * 8
        step = np.zeros(idx.size, dtype=complex)
        todo = np.flatnonzero(~done)
        for chunk in np.array_split(todo, max(1, todo.size // 256)):
            if chunk.size == 0:
                continue
            diff = z[idx[chunk], None] - z[None, :]
            diff[np.arange(chunk.size), idx[chunk]] = np.inf
            aberth = np.sum(1.0 / diff, axis=1)
            n = ratio[chunk]
            step[chunk] = n / (1.0 - n * aberth)
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        z[idx] -= step
        small = np.abs(step) <= 1e-15 * np.abs(z[idx])
        active[idx[done | (small & ~bad)]] = False
    _, backward = _newton_ratio(z, k, c)
    worst = float(np.max(backward))
    if worst > BACKWARD_TOL or not np.all(np.isfinite(z)):
        raise RootFindingError(f"Aberth iteration did not converge (worst backward error {worst:.3g})")
    return np.concatenate([np.zeros(low, dtype=complex), z])


def backward_errors(poly: IntegerExponentPolynomial, roots: np.ndarray) -> np.ndarray:
    """``|p(z)| / sum |c_k||z|^k`` per root (zero roots score 0 when ``c_0 = 0``)."""
    k, c = poly.nonzero()
    out = np.zeros(len(roots))
    nz = roots != 0
    if np.any(nz):
        out[nz] = _newton_ratio(roots[nz], k, c)[1]
    return out


def classify_roots(roots: np.ndarray, m: int, tau_arg: float = TAU_ARG) -> StabilityVerdict:
    """Sector test ``|arg(lambda)| > pi/(2m)``; roots at the origin are ignored."""
    args = np.abs(np.angle(roots[roots != 0]))
    crit = np.pi / (2 * m)
    gap = np.abs(args - crit)
    margin = float(np.min(gap)) if gap.size else np.inf
    if np.any(gap <= tau_arg):
        return StabilityVerdict.marginal(margin)
    count = int(np.sum(args < crit))
    return StabilityVerdict.from_count(count, margin)


def oracle_verdict(system, point=None, tau_arg: float = TAU_ARG) -> StabilityVerdict:
    """Verdict from the rational reduction.

    ``system`` is a :class:`FractionalSystem` (``m`` from the order
    denominators) or a :class:`SymbolicQuasiPolynomial` (``m`` from the
    exponent denominators).
    """
    if isinstance(system, FractionalSystem):
        m, poly = reduce(system, point)
    else:
        m, poly = reduce_terms(system, point)
    if poly.degree < 1 or all(c == 0 for c in poly.coeffs[:-1]):
        return StabilityVerdict.from_count(0, np.inf)
    return classify_roots(polynomial_roots(poly), m, tau_arg)
