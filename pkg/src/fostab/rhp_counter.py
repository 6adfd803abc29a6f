"""Right-half-plane zero counting by the argument principle.

A system is asymptotically stable iff its characteristic quasi-polynomial
has no zero with ``|arg(s)| <= pi/2`` on the principal sheet.  The number of
zeros in the open right half-plane is the winding number of ``Delta`` along
the boundary of ``{Re s > 0, eps < |s| < R}``; ``eps`` and ``R`` are chosen so
that no zero lies inside the small disc or outside the big one.

Everything is done in ``log|s|`` so that contours with astronomically large
``R`` (exponent gaps close to zero) never overflow.  Because the coefficients
are real, ``Delta(conj s) = conj Delta(s)`` and only the upper half of the
contour is traversed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .quasipoly import QuasiPolynomial, factor_origin

TAU_MARGIN = 1e-7
STEP_LIMIT = np.pi / 4
MAX_ROUNDS = 60
MAX_NODES = 200_000
RETRY_FACTOR = 1.37
MAX_RETRIES = 3


class MarginalSignal(ArithmeticError):
    """A zero sits on (or numerically on) the contour."""


class Kind(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class StabilityVerdict:
    kind: Kind
    rhp_count: int | None
    margin: float

    @classmethod
    def from_count(cls, count: int, margin: float = np.inf) -> "StabilityVerdict":
        if count < 0:
            raise ValueError("negative root count")
        return cls(Kind.STABLE if count == 0 else Kind.UNSTABLE, count, margin)

    @classmethod
    def marginal(cls, margin: float = 0.0) -> "StabilityVerdict":
        return cls(Kind.MARGINAL, None, margin)

    @property
    def stable(self) -> bool:
        return self.kind is Kind.STABLE

    @property
    def label(self) -> int:
        """Grid label: the RHP count, or -1 for Marginal."""
        return -1 if self.rhp_count is None else self.rhp_count

    def __str__(self) -> str:
        if self.kind is Kind.UNSTABLE:
            return f"Unstable({self.rhp_count})"
        return self.kind.value


@dataclass(frozen=True)
class Contour:
    """Indented half-annulus, stored by ``log eps`` and ``log R``."""

    log_eps: float
    log_R: float

    @property
    def eps(self) -> float:
        return float(np.exp(self.log_eps))

    @property
    def R(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_R))

    def perturbed(self) -> "Contour":
        step = math.log(RETRY_FACTOR)
        return Contour(self.log_eps - step, self.log_R + step)


def _solve_increasing(h, lo: float = -1.0, hi: float = 1.0) -> float:
    """Root of an increasing function by bracketing and bisection."""
    while h(lo) > 0:
        lo *= 2
    while h(hi) < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, abs(mid)):
            break
    return hi


def contour_radii(qp: QuasiPolynomial) -> Contour:
    """Radii from strict (factor 2) dominance of the extreme terms.

    ``qp`` must have its smallest exponent at zero (see ``factor_origin``)
    and at least two terms.  Beyond ``R`` the leading term outweighs twice
    the rest, inside ``eps`` the constant term does, so no zero lies there.
    """
    if len(qp) < 2:
        raise ValueError("a single-term quasi-polynomial has no nonzero roots")
    if qp.exponents[-1] != 0:
        raise ValueError("factor out s^e_min before building the contour")
    logc = np.log(np.abs(qp.c))
    e = qp.e
    lead_gap = lambda u: logc[0] + e[0] * u - math.log(2) - logsumexp(logc[1:] + e[1:] * u)
    tail_gap = lambda u: logsumexp(logc[:-1] + e[:-1] * u) + math.log(2) - logc[-1]
    log_R = _solve_increasing(lead_gap)
    log_eps = _solve_increasing(tail_gap)
    pad = 0.1
    return Contour(log_eps - pad, log_R + pad)


def _values(qp: QuasiPolynomial, u: np.ndarray, theta: np.ndarray):
    """``Delta(e^{u + i theta})`` scaled by a positive factor, with the term
    magnitude sum under the same scaling."""
    u = np.asarray(u, dtype=float)[:, None]
    theta = np.asarray(theta, dtype=float)[:, None]
    logmag = np.log(np.abs(qp.c)) + qp.e * u
    logmag = logmag - np.max(logmag, axis=1, keepdims=True)
    terms = np.sign(qp.c) * np.exp(logmag + 1j * qp.e * theta)
    return terms.sum(axis=1), np.abs(terms).sum(axis=1)


@dataclass
class _Segment:
    """Path piece ``t -> (u(t), theta(t))``, linear in ``t`` on ``[0, 1]``."""

    u0: float
    u1: float
    th0: float
    th1: float
    on_axis: bool

    def point(self, t):
        return self.u0 + (self.u1 - self.u0) * t, self.th0 + (self.th1 - self.th0) * t


def _segment_phase(qp: QuasiPolynomial, seg: _Segment, density: int):
    """Continuous phase change along one segment plus the smallest normalized
    modulus seen at the sampled nodes.

    Nodes are refined until every step turns by less than ``STEP_LIMIT`` and
    a midpoint check confirms no hidden full turn.
    """
    t = np.linspace(0.0, 1.0, density + 1)
    vals, norm = _values(qp, *seg.point(t))
    for _ in range(MAX_ROUNDS):
        inc = np.angle(vals[1:] / vals[:-1])
        need = np.abs(inc) > STEP_LIMIT
        if not np.any(need):
            mid = 0.5 * (t[1:] + t[:-1])
            mv, mn = _values(qp, *seg.point(mid))
            split = np.angle(mv / vals[:-1]) + np.angle(vals[1:] / mv)
            need = np.abs(split - inc) > 1e-6
            if not np.any(need):
                ratio = np.abs(np.concatenate([vals, mv])) / np.concatenate([norm, mn])
                return float(inc.sum()), float(ratio.min())
        else:
            mid = 0.5 * (t[1:] + t[:-1])
        tiny = (t[1:] - t[:-1]) < 1e-13
        if np.any(need & tiny) or t.size > MAX_NODES:
            raise MarginalSignal("phase could not be resolved; a zero lies on the contour")
        new_t = mid[need]
        nv, nn = _values(qp, *seg.point(new_t))
        order = np.argsort(np.concatenate([t, new_t]), kind="stable")
        t = np.concatenate([t, new_t])[order]
        vals = np.concatenate([vals, nv])[order]
        norm = np.concatenate([norm, nn])[order]
        rel = np.abs(vals) / norm
        if rel.min() < 1e-15:
            raise MarginalSignal("contour passes through a zero")
    raise MarginalSignal("refinement limit reached")


def _path(contour: Contour, part: str) -> list[_Segment]:
    le, lr, h = contour.log_eps, contour.log_R, np.pi / 2
    upper = [
        _Segment(lr, lr, 0.0, h, False),
        _Segment(lr, le, h, h, True),
        _Segment(le, le, h, 0.0, False),
    ]
    lower = [
        _Segment(le, le, 0.0, -h, False),
        _Segment(le, lr, -h, -h, True),
        _Segment(lr, lr, -h, 0.0, False),
    ]
    return {"upper": upper, "lower": lower, "full": upper + lower}[part]


def phase_change(qp: QuasiPolynomial, contour: Contour, part: str = "upper",
                 density: int = 32) -> tuple[float, float]:
    """Total phase change of ``Delta`` along ``part`` of the counter-clockwise
    contour (``"upper"``, ``"lower"`` or ``"full"``), and the minimum
    normalized modulus on the imaginary-axis pieces."""
    total, margin = 0.0, np.inf
    for seg in _path(contour, part):
        dphi, m = _segment_phase(qp, seg, density)
        total += dphi
        if seg.on_axis:
            margin = min(margin, m)
    return total, margin


def winding_number(qp: QuasiPolynomial, contour: Contour, density: int = 32,
                   symmetric: bool = True) -> int:
    """Zeros of ``qp`` inside the contour.

    With ``symmetric`` only the upper half is traversed and the phase change
    doubled.  Raises :class:`MarginalSignal` if the phase cannot be tracked.
    """
    if symmetric:
        dphi, _ = phase_change(qp, contour, "upper", density)
        w = dphi / np.pi
    else:
        dphi, _ = phase_change(qp, contour, "full", density)
        w = dphi / (2 * np.pi)
    k = round(w)
    if abs(w - k) > 1e-6:
        raise MarginalSignal(f"non-integral winding {w!r}")
    return int(k)


def verdict(qp: QuasiPolynomial, tau_margin: float = TAU_MARGIN, density: int = 32) -> StabilityVerdict:
    """Stable / Unstable(k) / Marginal for the principal-sheet zeros of ``qp``.

    Zeros at the origin (a common factor ``s^e_min``) are not in the open
    right half-plane and are not counted.
    """
    qp = factor_origin(qp)
    if len(qp) == 1:
        return StabilityVerdict.from_count(0, 1.0)
    contour = contour_radii(qp)
    for _ in range(MAX_RETRIES + 1):
        try:
            dphi, margin = phase_change(qp, contour, "upper", density)
        except MarginalSignal:
            contour = contour.perturbed()
            continue
        w = dphi / np.pi
        k = round(w)
        if abs(w - k) > 1e-6:
            contour = contour.perturbed()
            continue
        if margin < tau_margin:
            return StabilityVerdict.marginal(margin)
        return StabilityVerdict.from_count(int(k), margin)
    return StabilityVerdict.marginal(0.0)
