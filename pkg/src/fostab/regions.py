"""Decomposition of an order slice into regions of uniform root count.

The stability boundary splits parameter space into finitely many connected
regions, and every point of one region has the same number of right
half-plane zeros.  Here the slice is sampled on a grid of cell centres, each
node gets the contour-counter label, 4-connected equal-label cells form the
regions, and one interior point per region is re-checked.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from . import rational_oracle
from .quasipoly import Affine, ModelError, Number, SymbolicQuasiPolynomial, bind, parse_affine
from .rhp_counter import TAU_MARGIN, Kind, StabilityVerdict, verdict

MARGINAL = -1
OUT_OF_MODEL = -2
MIN_RESOLUTION = 16
MAX_RESOLUTION = 2048


class ConsistencyError(RuntimeError):
    """A region's re-verified verdict disagrees with its grid label."""


@dataclass(frozen=True)
class OrderSlice:
    """Affine family of parameter points over a rectangle.

    ``params`` are the free axes (one or two) with ``bounds``; ``binding``
    expresses further symbols through them (``q3 = 2*q1``); every expression
    in ``orders`` must stay inside (0, 2).  Free parameters may also be
    equation coefficients, whose axes are not restricted to (0, 2).
    """

    params: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    binding: Mapping[str, Affine] = field(default_factory=dict)
    orders: tuple[Affine, ...] = ()

    def __init__(self, params: Sequence[str], bounds, binding=None, orders=()):
        params = tuple(params)
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if not 1 <= len(params) <= 2 or len(bounds) != len(params):
            raise ModelError("a slice has one or two free parameters, each with bounds")
        if any(not lo < hi for lo, hi in bounds):
            raise ModelError(f"empty slice bounds {bounds}")
        binding = {k: parse_affine(v) for k, v in (binding or {}).items()}
        for name, expr in binding.items():
            extra = set(expr.symbols) - set(params)
            if extra:
                raise ModelError(f"binding for {name!r} uses non-free symbols {sorted(extra)}")
        orders = tuple(parse_affine(o).substitute(binding) for o in orders)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "binding", binding)
        object.__setattr__(self, "orders", orders)

    @property
    def dim(self) -> int:
        return len(self.params)

    def restrict(self, sym: SymbolicQuasiPolynomial) -> SymbolicQuasiPolynomial:
        """Substitute the binding; the result depends on the free parameters only."""
        out = sym.substitute(self.binding)
        extra = set(out.symbols) - set(self.params)
        if extra:
            raise ModelError(f"symbols {sorted(extra)} are neither free nor bound by the slice")
        return out

    def point(self, coords: Sequence[Number]) -> dict[str, Number]:
        return dict(zip(self.params, coords))

    def in_model(self, coords: Sequence[Number]) -> bool:
        pt = self.point(coords)
        return all(0 < o.evaluate(pt) < 2 for o in self.orders)

    def axes(self, resolution: int | Sequence[int]) -> list[np.ndarray]:
        """Cell-centre coordinates along each free axis."""
        res = [resolution] * self.dim if np.isscalar(resolution) else list(resolution)
        for r in res:
            if not MIN_RESOLUTION <= r <= MAX_RESOLUTION:
                raise ModelError(f"resolution {r} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]")
        return [lo + (np.arange(r) + 0.5) * (hi - lo) / r for r, (lo, hi) in zip(res, self.bounds)]


def label_point(sym: SymbolicQuasiPolynomial, slc: OrderSlice, coords: Sequence[Number],
                tau_margin: float = TAU_MARGIN) -> int:
    """Grid label at one slice point (``sym`` already restricted)."""
    if not slc.in_model(coords):
        return OUT_OF_MODEL
    try:
        qp = bind(sym, slc.point(coords))
    except ModelError:
        return OUT_OF_MODEL
    return verdict(qp, tau_margin).label


@dataclass
class LabelGrid:
    slice: OrderSlice
    sym: SymbolicQuasiPolynomial
    axes: list[np.ndarray]
    labels: np.ndarray  # shape (len(axes[0]), len(axes[1])) or (len(axes[0]), 1)
    tau_margin: float = TAU_MARGIN

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def cell(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    def coords(self, i: int, j: int = 0) -> tuple[float, ...]:
        return (float(self.axes[0][i]),) if self.slice.dim == 1 else (float(self.axes[0][i]), float(self.axes[1][j]))

    def label_at(self, coords: Sequence[Number]) -> int:
        return label_point(self.sym, self.slice, coords, self.tau_margin)


def classify_grid(sym: SymbolicQuasiPolynomial, slc: OrderSlice, resolution=100,
                  tau_margin: float = TAU_MARGIN, progress: Callable[[int, int], None] | None = None) -> LabelGrid:
    """Label every cell centre with its RHP count (``MARGINAL``, ``OUT_OF_MODEL``)."""
    sym = slc.restrict(sym)
    axes = slc.axes(resolution)
    shape = (len(axes[0]), len(axes[1]) if slc.dim == 2 else 1)
    labels = np.empty(shape, dtype=int)
    for i in range(shape[0]):
        for j in range(shape[1]):
            coords = (axes[0][i],) if slc.dim == 1 else (axes[0][i], axes[1][j])
            labels[i, j] = label_point(sym, slc, coords, tau_margin)
        if progress:
            progress(i + 1, shape[0])
    return LabelGrid(slc, sym, axes, labels, tau_margin)


@dataclass(frozen=True)
class Region:
    id: int
    label: int
    cells: int
    representative: tuple[int, int]


@dataclass
class RegionMap:
    grid: LabelGrid
    components: np.ndarray  # component id per cell, -1 for Marginal / out-of-model cells
    regions: list[Region]
    marginal_cells: int
    polylines: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.regions)

    def region_at(self, coords: Sequence[float]) -> Region:
        idx = tuple(int(np.argmin(np.abs(ax - c))) for ax, c in zip(self.grid.axes, coords))
        cid = self.components[idx if len(idx) == 2 else (idx[0], 0)]
        if cid < 0:
            raise KeyError(f"{coords} falls on a Marginal or out-of-model cell")
        return self.regions[cid]


def _interior_most(mask: np.ndarray) -> tuple[int, int]:
    """Cell farthest (city-block) from any other label or the grid edge;
    ties broken towards the component centroid."""
    dist = ndimage.distance_transform_cdt(np.pad(mask, 1), metric="taxicab")[1:-1, 1:-1]
    best = np.argwhere(dist == dist[mask].max())
    centroid = np.argwhere(mask).mean(axis=0)
    k = np.argmin(((best - centroid) ** 2).sum(axis=1))
    return int(best[k][0]), int(best[k][1])


def _certified_diagonals(grid: LabelGrid, lab_ids: np.ndarray):
    """Diagonal contacts between different components of equal label that a
    re-classification along the connecting segment confirms.

    A wedge narrower than one cell shows up on the grid as a chain of cells
    touching only at corners; 4-connectivity alone would cut it into pieces.
    In a saddle block (both diagonals equal-labelled, labels differing) at
    most one of the two chains can be real, so a link is accepted only if
    the crossing diagonal fails its own check.
    """
    labels = grid.labels
    W, H = labels.shape
    fractions = np.arange(1, 8) / 8

    def holds(a, b):
        pa, pb = np.array(grid.coords(*a)), np.array(grid.coords(*b))
        return all(grid.label_at(pa + f * (pb - pa)) == labels[a] for f in fractions)

    links = []
    for i in range(W - 1):
        for j in range(H - 1):
            diagonals = (((i, j), (i + 1, j + 1)), ((i + 1, j), (i, j + 1)))
            for k, (a, b) in enumerate(diagonals):
                lab = labels[a]
                if lab < 0 or labels[b] != lab or lab_ids[a] == lab_ids[b]:
                    continue
                if not holds(a, b):
                    continue
                c, d = diagonals[1 - k]
                if labels[c] >= 0 and labels[c] == labels[d] and holds(c, d):
                    continue
                links.append((a, b))
    return links


def connected_components(grid: LabelGrid, certify_diagonals: bool = True) -> RegionMap:
    """Maximal connected sets of equal label.

    Cells join through shared edges (4-connectivity).  A corner-only contact
    joins two cells as well when ``certify_diagonals`` is set and the
    diagonal between their centres re-classifies with the same label at seven
    interior points (see :func:`_certified_diagonals`).  Marginal and out-of-model cells never join a region.
    Region ids follow raster order of each region's first cell.
    """
    labels = grid.labels
    four = ndimage.generate_binary_structure(2, 1)
    lab_ids = np.full(labels.shape, -1, dtype=int)
    next_id = 0
    for lab in np.unique(labels):
        if lab < 0:
            continue
        ids, count = ndimage.label(labels == lab, structure=four)
        lab_ids[ids > 0] = ids[ids > 0] - 1 + next_id
        next_id += count
    parent = list(range(next_id))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    if certify_diagonals and grid.sym is not None and labels.shape[1] > 1:
        for a, b in _certified_diagonals(grid, lab_ids):
            ra, rb = find(lab_ids[a]), find(lab_ids[b])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(k) for k in range(next_id)], dtype=int)
    merged = np.where(lab_ids >= 0, roots[np.maximum(lab_ids, 0)], -1)

    comp = np.full(labels.shape, -1, dtype=int)
    order = []
    for flat in np.flatnonzero(merged.ravel() >= 0):
        r = merged.ravel()[flat]
        if r not in order:
            order.append(r)
    regions = []
    for rid, r in enumerate(order):
        mask = merged == r
        comp[mask] = rid
        lab = int(labels[mask][0])
        regions.append(Region(rid, lab, int(mask.sum()), _interior_most(mask)))
    return RegionMap(grid, comp, regions, int(np.sum(labels == MARGINAL)))


def snap_rational(x: float, tol: float, max_den: int = 1000) -> Fraction | None:
    """Lowest-denominator fraction within ``tol`` of ``x``."""
    for d in range(1, max_den + 1):
        f = Fraction(round(x * d), d)
        if abs(f - Fraction(x)) <= tol:
            return f
    return None


@dataclass(frozen=True)
class RegionEntry:
    id: int
    label: int
    verdict: StabilityVerdict
    area_fraction: float
    representative: tuple[float, ...]
    snapped: tuple[Fraction, ...] | None
    oracle: StabilityVerdict | None
    oracle_note: str = ""


@dataclass
class RegionReport:
    entries: list[RegionEntry]
    marginal_cells: int
    params: tuple[str, ...]

    def entry_at(self, region: Region) -> RegionEntry:
        return next(e for e in self.entries if e.id == region.id)

    def text(self) -> str:
        lines = [f"regions: {len(self.entries)}  marginal cells: {self.marginal_cells}"]
        for e in self.entries:
            rep = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.params, e.representative))
            snap = "" if e.snapped is None else " snapped=(" + ", ".join(str(f) for f in e.snapped) + ")"
            orc = f" oracle={e.oracle}" if e.oracle is not None else f" oracle: {e.oracle_note}" if e.oracle_note else ""
            lines.append(f"region {e.id}: {e.verdict}  area={e.area_fraction:.4f}  at ({rep}){snap}{orc}")
        return "\n".join(lines)


def region_report(rmap: RegionMap, oracle_max_degree: int = 2000) -> RegionReport:
    """Re-verify one representative per region.

    The representative is snapped to a nearby low-denominator rational point
    (within a quarter cell); the contour counter is re-run there and, when the
    reduced degree allows, the rational reduction as well.  Any disagreement
    with the region's label raises :class:`ConsistencyError`.
    """
    grid = rmap.grid
    total = rmap.components.size
    entries = []
    for reg in rmap.regions:
        coords = grid.coords(*reg.representative)
        snapped = tuple(snap_rational(c, 0.25 * h) for c, h in zip(coords, grid.cell))
        if any(f is None for f in snapped):
            snapped = None
        check = snapped if snapped is not None else coords
        point = grid.slice.point(check)
        v = verdict(bind(grid.sym, point), grid.tau_margin)
        if v.label != reg.label:
            raise ConsistencyError(f"region {reg.id} labelled {reg.label} but its representative "
                                   f"{check} re-verifies as {v}; refine the grid")
        oracle, note = None, ""
        if snapped is not None:
            try:
                m, poly = rational_oracle.reduce_terms(grid.sym, point)
                if poly.degree > oracle_max_degree:
                    note = f"skipped (degree {poly.degree})"
                else:
                    oracle = rational_oracle.oracle_verdict(grid.sym, point)
            except (ModelError, rational_oracle.RootFindingError) as exc:
                note = f"skipped ({exc})"
            if oracle is not None and oracle.kind is not Kind.MARGINAL and oracle.label != reg.label:
                raise ConsistencyError(f"region {reg.id}: rational reduction gives {oracle}, grid label {reg.label}")
        else:
            note = "skipped (no rational point within a quarter cell)"
        entries.append(RegionEntry(reg.id, reg.label, v, reg.cells / total, tuple(float(c) for c in check),
                                   snapped, oracle, note))
    return RegionReport(entries, rmap.marginal_cells, grid.slice.params)


def build_region_map(sym: SymbolicQuasiPolynomial, slc: OrderSlice, resolution=100,
                     tau_margin: float = TAU_MARGIN, trace: bool = True, progress=None) -> RegionMap:
    """Classify, label components and (optionally) trace the boundary polylines."""
    grid = classify_grid(sym, slc, resolution, tau_margin, progress)
    rmap = connected_components(grid)
    if trace and slc.dim == 2:
        from .boundary import trace_boundary

        rmap.polylines = trace_boundary(grid)
    return rmap
