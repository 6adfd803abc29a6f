"""Real-exponent quasi-polynomials and characteristic-function expansion.

A fractional-order system ``D^alpha x = A x`` has characteristic function
``det(diag(s^alpha_1, ..., s^alpha_n) - A)``.  Expanding the determinant over
the diagonal gives a finite sum ``sum_k c_k s^{e_k}`` whose exponents are sums
of subsets of the orders.  Orders (and, for directly specified equations,
coefficients) may be affine expressions in up to two slice parameters, so the
expansion keeps exponents symbolic until a concrete parameter point is bound.

Powers always use the principal branch, ``arg(s)`` in ``(-pi, pi]``.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Number = Union[int, Fraction, float]

MAX_DIMENSION = 8
EXPONENT_MERGE_TOL = 1e-12
COEFF_DROP_RTOL = 1e-14


class ModelError(ValueError):
    """Input lies outside the system model (bad order, bad matrix, ...)."""


# --------------------------------------------------------------------------
# numbers and affine expressions
# --------------------------------------------------------------------------

_NUMBER_RE = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_TOKEN_RE = re.compile(rf"(?P<num>{_NUMBER_RE})|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*])")


def parse_number(value) -> Number:
    """Exact rational for ints and numeric strings, binary float for floats.

    ``"1000/3"`` and ``"0.993"`` become :class:`Fraction` without passing
    through a float.
    """
    if isinstance(value, bool):
        raise ModelError(f"not a number: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ModelError(f"non-finite number: {value!r}")
        return value
    if isinstance(value, str):
        text = value.strip()
        neg = text.startswith("-")
        body = text[1:].strip() if text[:1] in "+-" else text
        if not re.fullmatch(_NUMBER_RE, body):
            raise ModelError(f"not a number: {value!r}")
        try:
            num = Fraction(body)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"not a number: {value!r}") from exc
        return -num if neg else num
    raise ModelError(f"not a number: {value!r}")


def _add(a: Number, b: Number) -> Number:
    if isinstance(a, float) or isinstance(b, float):
        return float(a) + float(b)
    return a + b


def _mul(a: Number, b: Number) -> Number:
    if isinstance(a, float) or isinstance(b, float):
        return float(a) * float(b)
    return a * b


@dataclass(frozen=True)
class Affine:
    """``const + sum(coeff * symbol)`` with rational or float coefficients."""

    const: Number = Fraction(0)
    coeffs: tuple[tuple[str, Number], ...] = ()

    def __post_init__(self):
        merged: dict[str, Number] = {}
        for name, c in self.coeffs:
            merged[name] = _add(merged.get(name, Fraction(0)), c)
        cleaned = tuple(sorted((k, v) for k, v in merged.items() if v != 0))
        object.__setattr__(self, "coeffs", cleaned)

    @classmethod
    def symbol(cls, name: str) -> "Affine":
        return cls(Fraction(0), ((name, Fraction(1)),))

    @classmethod
    def constant(cls, value) -> "Affine":
        return cls(parse_number(value) if not isinstance(value, float) else value)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Affine") -> "Affine":
        return Affine(_add(self.const, other.const), self.coeffs + other.coeffs)

    def scaled(self, factor: Number) -> "Affine":
        return Affine(_mul(self.const, factor), tuple((k, _mul(v, factor)) for k, v in self.coeffs))

    def substitute(self, binding: Mapping[str, "Affine"]) -> "Affine":
        out = Affine(self.const)
        for name, c in self.coeffs:
            out = out + (binding[name].scaled(c) if name in binding else Affine.symbol(name).scaled(c))
        return out

    def evaluate(self, point: Mapping[str, Number]) -> Number:
        """Exact when every participating number is rational."""
        value = self.const
        for name, c in self.coeffs:
            try:
                value = _add(value, _mul(c, point[name]))
            except KeyError:
                raise ModelError(f"symbol {name!r} is not bound") from None
        return value

    def __str__(self) -> str:
        parts = []
        for name, c in self.coeffs:
            parts.append(name if c == 1 else f"-{name}" if c == -1 else f"{c}*{name}")
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        return "+".join(parts).replace("+-", "-")


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ModelError(f"cannot parse expression {text!r} at column {pos + 1}")
        pos = m.end()
        kind = m.lastgroup
        yield kind, m.group(kind)


def parse_affine(text) -> Affine:
    """Parse ``"2*q1"``, ``"alpha + beta"``, ``"-b"``, ``"993/1000"`` ..."""
    if isinstance(text, Affine):
        return text
    if not isinstance(text, str):
        return Affine.constant(text)
    toks = list(_tokens(text))
    if not toks:
        raise ModelError("empty expression")
    out, i = Affine(), 0
    while i < len(toks):
        sign = Fraction(1)
        while i < len(toks) and toks[i] in (("op", "+"), ("op", "-")):
            sign = -sign if toks[i][1] == "-" else sign
            i += 1
        if i == len(toks):
            raise ModelError(f"expression {text!r} ends with an operator")
        coeff: Number = sign
        kind, val = toks[i]
        if kind == "num":
            coeff = _mul(sign, parse_number(val))
            i += 1
            if i < len(toks) and toks[i] == ("op", "*"):
                i += 1
                if i == len(toks) or toks[i][0] != "name":
                    raise ModelError(f"expected a symbol after '*' in {text!r}")
            if i < len(toks) and toks[i][0] == "name":
                out = out + Affine.symbol(toks[i][1]).scaled(coeff)
                i += 1
            else:
                out = out + Affine(coeff)
        elif kind == "name":
            out = out + Affine.symbol(val).scaled(coeff)
            i += 1
        else:
            raise ModelError(f"unexpected {val!r} in {text!r}")
        if i < len(toks) and toks[i] not in (("op", "+"), ("op", "-")):
            raise ModelError(f"unexpected {toks[i][1]!r} in {text!r}")
    return out


# --------------------------------------------------------------------------
# systems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FractionalSystem:
    """``D^alpha x = A x`` with orders given as numbers or affine expressions."""

    A: tuple[tuple[Number, ...], ...]
    orders: tuple[Affine, ...]

    def __init__(self, A, orders):
        rows = tuple(tuple(parse_number(v) for v in row) for row in A)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ModelError("system matrix must be square and non-empty")
        orders = tuple(parse_affine(o) for o in orders)
        if len(orders) != n:
            raise ModelError(f"expected {n} orders, got {len(orders)}")
        for i, o in enumerate(orders):
            if o.is_constant and not 0 < o.const < 2:
                raise ModelError(f"order {i + 1} = {o.const} outside the open interval (0, 2)")
        object.__setattr__(self, "A", rows)
        object.__setattr__(self, "orders", orders)

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted({s for o in self.orders for s in o.symbols}))

    def matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.A])

    def order_values(self, point: Mapping[str, Number] | None = None) -> tuple[Number, ...]:
        vals = tuple(o.evaluate(point or {}) for o in self.orders)
        for i, v in enumerate(vals):
            if not 0 < v < 2:
                raise ModelError(f"order {i + 1} = {v} outside the open interval (0, 2)")
        return vals


def _det(rows: Sequence[Sequence[Number]]) -> Number:
    """Determinant by Gaussian elimination; exact for rational input."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return Fraction(1)
    det: Number = Fraction(1)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[pivot][col] == 0:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        p = m[col][col]
        det = _mul(det, p)
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f != 0:
                for c in range(col, n):
                    m[r][c] = m[r][c] - f * m[col][c]
    return det


def characteristic_terms(A: Sequence[Sequence[Number]]) -> list[tuple[frozenset[int], Number]]:
    """Subset expansion of ``det(diag(x_1..x_n) - A)``.

    Returns ``(S, c_S)`` pairs meaning ``c_S * prod_{i in S} x_i`` with
    ``c_S = det(-A)`` restricted to the complement of ``S``.  Zero
    coefficients are dropped; order is largest subsets first.
    """
    n = len(A)
    if n > MAX_DIMENSION:
        raise ModelError(f"dimension {n} exceeds the expansion cap of {MAX_DIMENSION}")
    out = []
    for size in range(n, -1, -1):
        for subset in itertools.combinations(range(n), size):
            rest = [i for i in range(n) if i not in subset]
            minor = _det([[-A[i][j] for j in rest] for i in rest])
            if minor != 0:
                out.append((frozenset(subset), minor))
    return out


# --------------------------------------------------------------------------
# numeric quasi-polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasiPolynomial:
    """``sum_k c_k s^{e_k}``, exponents strictly decreasing, coefficients nonzero."""

    coeffs: tuple[float, ...]
    exponents: tuple[float, ...]
    _c: np.ndarray = field(init=False, repr=False, compare=False)
    _e: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.coeffs or len(self.coeffs) != len(self.exponents):
            raise ModelError("quasi-polynomial needs matching, non-empty term lists")
        c = np.asarray(self.coeffs, dtype=float)
        e = np.asarray(self.exponents, dtype=float)
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(e))):
            raise ModelError("non-finite coefficient or exponent")
        if np.any(e < 0):
            raise ModelError("negative exponent")
        if np.any(np.diff(e) >= 0) or np.any(c == 0):
            raise ModelError("terms must have strictly decreasing exponents and nonzero coefficients")
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "_e", e)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, float]]) -> "QuasiPolynomial":
        """Sort, merge exponents within 1e-12, drop negligible coefficients."""
        items = sorted(((float(e), float(c)) for c, e in terms), reverse=True)
        if any(e < 0 for e, _ in items):
            raise ModelError("negative exponent (order outside the model)")
        merged: list[list[float]] = []
        for e, c in items:
            if merged and abs(merged[-1][0] - e) <= EXPONENT_MERGE_TOL:
                merged[-1][1] += c
            else:
                merged.append([e, c])
        cmax = max((abs(c) for _, c in merged), default=0.0)
        kept = [(c, e) for e, c in merged if cmax > 0 and abs(c) > COEFF_DROP_RTOL * cmax]
        if not kept:
            raise ModelError("quasi-polynomial is identically zero")
        return cls(tuple(c for c, _ in kept), tuple(e for _, e in kept))

    @property
    def c(self) -> np.ndarray:
        return self._c

    @property
    def e(self) -> np.ndarray:
        return self._e

    def __len__(self) -> int:
        return len(self.coeffs)

    def __str__(self) -> str:
        parts = []
        for c, e in zip(self.coeffs, self.exponents):
            mono = "" if e == 0 else "s" if e == 1 else f"s^{e:g}"
            parts.append(f"{c:+g}{'*' + mono if mono else ''}")
        return " ".join(parts)


def evaluate(qp: QuasiPolynomial, s):
    """Principal-branch value of ``qp`` at ``s`` (scalar or array, ``s != 0``)."""
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr == 0):
        raise ValueError("evaluation at s = 0 is undefined (branch point)")
    mod = np.abs(s_arr)[..., None]
    arg = np.angle(s_arr)[..., None]
    # np.angle gives -pi for (-x, -0.0); the principal branch wants +pi
    arg = np.where(arg == -np.pi, np.pi, arg)
    vals = np.sum(qp.c * mod ** qp.e * np.exp(1j * qp.e * arg), axis=-1)
    return vals if s_arr.ndim else complex(vals)


def scale(qp: QuasiPolynomial, factor: float) -> QuasiPolynomial:
    if factor == 0:
        raise ValueError("scaling by zero")
    return QuasiPolynomial(tuple(c * factor for c in qp.coeffs), qp.exponents)


def factor_origin(qp: QuasiPolynomial) -> QuasiPolynomial:
    """Divide out ``s^{e_min}`` so the smallest exponent is zero."""
    e_min = qp.exponents[-1]
    if e_min == 0:
        return qp
    return QuasiPolynomial(qp.coeffs, tuple(e - e_min for e in qp.exponents))


# --------------------------------------------------------------------------
# symbolic quasi-polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolicQuasiPolynomial:
    """Terms ``(coefficient, exponent)``, each an :class:`Affine` in slice symbols."""

    terms: tuple[tuple[Affine, Affine], ...]

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted({s for c, e in self.terms for s in c.symbols + e.symbols}))

    def substitute(self, binding: Mapping[str, Affine]) -> "SymbolicQuasiPolynomial":
        return _merge_symbolic((c.substitute(binding), e.substitute(binding)) for c, e in self.terms)

    def exact_terms(self, point: Mapping[str, Number]) -> list[tuple[Number, Number]]:
        """``(coefficient, exponent)`` values, exact where the inputs are."""
        return [(c.evaluate(point), e.evaluate(point)) for c, e in self.terms]

    def __str__(self) -> str:
        return " + ".join(f"({c})*s^({e})" for c, e in self.terms)


def _merge_symbolic(pairs) -> SymbolicQuasiPolynomial:
    merged: dict[Affine, Affine] = {}
    for c, e in pairs:
        merged[e] = merged[e] + c if e in merged else c
    terms = tuple((c, e) for e, c in merged.items() if not (c.is_constant and c.const == 0))
    if not terms:
        raise ModelError("characteristic function is identically zero")
    return SymbolicQuasiPolynomial(terms)


def symbolic_from_terms(terms: Iterable[tuple[object, object]]) -> SymbolicQuasiPolynomial:
    """Build from ``(coefficient, exponent)`` expressions (strings, numbers, Affine)."""
    return _merge_symbolic((parse_affine(c), parse_affine(e)) for c, e in terms)


def expand_characteristic(system: FractionalSystem) -> SymbolicQuasiPolynomial:
    """Expand ``det(diag(s^alpha_i) - A)`` keeping exponents symbolic.

    Each term's exponent is the sum of the orders in a subset of the diagonal;
    terms whose exponent expressions coincide are merged.  Dimension is capped
    at :data:`MAX_DIMENSION` because the subset expansion has ``2^n`` terms.
    """
    pairs = []
    for subset, coeff in characteristic_terms(system.A):
        exponent = Affine()
        for i in sorted(subset):
            exponent = exponent + system.orders[i]
        pairs.append((Affine(coeff), exponent))
    return _merge_symbolic(pairs)


def bind(sym: SymbolicQuasiPolynomial, point: Mapping[str, Number] | None = None) -> QuasiPolynomial:
    """Numeric quasi-polynomial at a slice point."""
    vals = sym.exact_terms(point or {})
    for _, e in vals:
        if e < 0:
            raise ModelError(f"negative exponent {e} at {dict(point or {})} (order outside the model)")
    return QuasiPolynomial.from_terms((float(c), float(e)) for c, e in vals)
