"""System-spec files.

A spec is one JSON document in either of two forms.

Matrix form::

    {"name": "boost converter",
     "A": [["0", "-1000/3"], ["10000", "-1000/3"]],
     "orders": ["alpha", "beta"],
     "forcing": [4000, 0],
     "slice": {"params": {"alpha": [0, 2], "beta": [0, 2]}}}

Equation form (a characteristic function given term by term)::

    {"terms": [["1", "a1+a2"], ["12", "a1"], ["34", "0"]],
     "orders": ["a1", "a2"],
     "slice": {"params": {"a1": [0, 2], "a2": [0, 2]}}}

Numbers may be JSON numbers or strings; strings such as ``"1000/3"`` or
``"0.993"`` are read as exact fractions.  Orders, exponents and (in equation
form) coefficients are affine expressions in the slice parameters.  The slice
may bind extra symbols, e.g. ``"bind": {"q3": "2*q1"}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .quasipoly import (Affine, FractionalSystem, ModelError, Number, QuasiPolynomial, SymbolicQuasiPolynomial,
                        bind, expand_characteristic, parse_affine, parse_number, symbolic_from_terms)
from .regions import OrderSlice


class SpecError(ModelError):
    pass


@dataclass(frozen=True)
class Problem:
    name: str
    sym: SymbolicQuasiPolynomial
    orders: tuple[Affine, ...]
    system: FractionalSystem | None = None
    forcing: tuple[Number, ...] | None = None
    slice: OrderSlice | None = None

    @property
    def free(self) -> tuple[str, ...]:
        return self.slice.params if self.slice else ()

    def restricted(self) -> SymbolicQuasiPolynomial:
        return self.slice.restrict(self.sym) if self.slice else self.sym

    def point(self, at: Sequence[Number] | None = None) -> dict[str, Number]:
        """Slice coordinates as a symbol binding; checks the orders stay in (0, 2)."""
        at = tuple(at or ())
        if len(at) != len(self.free):
            need = ",".join(self.free) if self.free else "nothing"
            raise SpecError(f"expected {len(self.free)} coordinate(s) ({need}), got {len(at)}")
        point = dict(zip(self.free, at))
        for name, expr in (self.slice.binding.items() if self.slice else ()):
            point[name] = expr.evaluate(point)
        for o in self.orders:
            v = o.evaluate(point)
            if not 0 < v < 2:
                raise SpecError(f"order {o} = {v} outside the open interval (0, 2)")
        return point

    def qp_at(self, at: Sequence[Number] | None = None) -> QuasiPolynomial:
        return bind(self.sym, self.point(at))

    def to_dict(self) -> dict:
        out: dict = {"name": self.name}
        if self.system is not None:
            out["A"] = [[_num_out(v) for v in row] for row in self.system.A]
            out["orders"] = [str(o) for o in self.system.orders]
            if self.forcing is not None:
                out["forcing"] = [_num_out(v) for v in self.forcing]
        else:
            out["terms"] = [[str(c), str(e)] for c, e in self.sym.terms]
            out["orders"] = [str(o) for o in self.orders]
        if self.slice is not None:
            out["slice"] = {"params": {p: list(b) for p, b in zip(self.slice.params, self.slice.bounds)}}
            if self.slice.binding:
                out["slice"]["bind"] = {k: str(v) for k, v in self.slice.binding.items()}
        return out


def _num_out(v: Number):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return v


def _field(path: str, fn, value):
    try:
        return fn(value)
    except ModelError as exc:
        raise SpecError(f"field {path}: {exc}") from None


def _parse_slice(raw, symbols: set[str]) -> OrderSlice:
    if not isinstance(raw, dict) or "params" not in raw:
        raise SpecError("field slice: expected an object with 'params'")
    params = raw["params"]
    if isinstance(params, list):
        params = {p: [0, 2] for p in params}
    if not isinstance(params, dict):
        raise SpecError("field slice.params: expected an object name -> [low, high] or a list of names")
    bounds = []
    for name, b in params.items():
        if not (isinstance(b, list) and len(b) == 2):
            raise SpecError(f"field slice.params.{name}: expected [low, high]")
        bounds.append(tuple(float(_field(f"slice.params.{name}", parse_number, x)) for x in b))
    binding = raw.get("bind", {})
    if not isinstance(binding, dict):
        raise SpecError("field slice.bind: expected an object symbol -> expression")
    binding = {k: _field(f"slice.bind.{k}", parse_affine, v) for k, v in binding.items()}
    try:
        slc = OrderSlice(tuple(params), bounds, binding)
    except ModelError as exc:
        raise SpecError(f"field slice: {exc}") from None
    missing = symbols - set(slc.params) - set(slc.binding)
    if missing:
        raise SpecError(f"field slice: symbols {sorted(missing)} are neither free nor bound")
    return slc


def load_dict(raw: dict, name: str = "") -> Problem:
    if not isinstance(raw, dict):
        raise SpecError("spec must be a JSON object")
    if ("A" in raw) == ("terms" in raw):
        raise SpecError("spec needs exactly one of 'A' (matrix form) or 'terms' (equation form)")
    orders_raw = raw.get("orders", [])
    if not isinstance(orders_raw, list):
        raise SpecError("field orders: expected a list")
    orders = tuple(_field(f"orders[{i}]", parse_affine, o) for i, o in enumerate(orders_raw))
    system = forcing = None
    if "A" in raw:
        A = raw["A"]
        if not isinstance(A, list) or not all(isinstance(r, list) for r in A):
            raise SpecError("field A: expected a list of rows")
        A = [[_field(f"A[{i}][{j}]", parse_number, v) for j, v in enumerate(row)] for i, row in enumerate(A)]
        system = _field("A/orders", lambda _: FractionalSystem(A, orders), None)
        sym = _field("A", expand_characteristic, system)
        if "forcing" in raw:
            forcing = tuple(_field(f"forcing[{i}]", parse_number, v) for i, v in enumerate(raw["forcing"]))
            if len(forcing) != system.n:
                raise SpecError(f"field forcing: expected {system.n} entries")
    else:
        terms = raw["terms"]
        if not isinstance(terms, list) or not all(isinstance(t, list) and len(t) == 2 for t in terms):
            raise SpecError("field terms: expected a list of [coefficient, exponent] pairs")
        pairs = [(_field(f"terms[{i}][0]", parse_affine, c), _field(f"terms[{i}][1]", parse_affine, e))
                 for i, (c, e) in enumerate(terms)]
        sym = _field("terms", symbolic_from_terms, pairs)
        for o in orders:
            if o.is_constant and not 0 < o.const < 2:
                raise SpecError(f"field orders: {o.const} outside the open interval (0, 2)")
    symbols = set(sym.symbols) | {s for o in orders for s in o.symbols}
    slc = None
    if "slice" in raw:
        slc = _parse_slice(raw["slice"], symbols)
        slc = OrderSlice(slc.params, slc.bounds, slc.binding, orders)
    elif symbols:
        raise SpecError(f"symbols {sorted(symbols)} need a 'slice' section")
    return Problem(str(raw.get("name", name)), sym, orders, system, forcing, slc)


def load(path: str | Path) -> Problem:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None
    try:
        return load_dict(raw, path.stem)
    except SpecError as exc:
        raise SpecError(f"{path}: {exc}") from None


def parse_point(text: str | None) -> tuple[Number, ...]:
    """``"1,1"`` or ``"993/1000,0.997"`` -> exact coordinates."""
    if not text:
        return ()
    return tuple(parse_number(part) for part in text.split(","))
