"""Remez-type polynomial inequalities and a certified maximum oracle.

For a polynomial p of degree d, an interval I, and a measurable subset E
(here: a finite union of closed subintervals),

    max_I |p| <= (4 |I| / |E|)^d  sup_E |p|,

and in the discrete version, if |p| <= M at d + l points of I with
pairwise spacing >= 1,

    max_I |p| <= (4 |I| / l)^d  M.

The simplified constant 4 is used exactly as stated; no attempt is made
at the sharp Chebyshev constant.  poly_max certifies the interval
maximum by exact root isolation of the derivative (Sturm sign changes,
rational bisection), or in fast mode by float root finding followed by
exact evaluation, which yields an exact attained value only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq

from .numeric import RATIONAL, Scalar, ScalarError


class RemezError(ValueError):
    pass


MAX_DEGREE = 64
ISOLATION_WIDTH = mpq(1, 10**12)


def _as_mpq(value) -> mpq:
    """Exact rational content of an int, mpq, or Scalar of any real kind."""
    if isinstance(value, Scalar):
        k = value.kind.name
        if k == "rational":
            return value.payload
        if k == "float":
            return mpq(value.payload)
        if k == "quadratic" and value.payload[1] == 0:
            return value.payload[0]
        raise RemezError(f"need a rational value, got kind {value.kind}")
    return mpq(value)


class Polynomial:
    """Polynomial with exact rational coefficients, constant term first."""

    __slots__ = ("coeffs",)

    def __init__(self, coefficients):
        cs = [_as_mpq(c) for c in coefficients]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial assigned degree 0."""
        return max(len(self.coeffs) - 1, 0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x) -> mpq:
        x = _as_mpq(x)
        acc = mpq(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Polynomial":
        return Polynomial([i * c for i, c in enumerate(self.coeffs)][1:])

    def scale_argument(self, s) -> "Polynomial":
        """The polynomial x -> p(s x)."""
        s = _as_mpq(s)
        return Polynomial([c * s**i for i, c in enumerate(self.coeffs)])

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial([{', '.join(str(c) for c in self.coeffs)}])"

    @staticmethod
    def from_string(text: str) -> "Polynomial":
        """Comma-separated coefficients, constant term first."""
        return Polynomial([mpq(part.strip()) for part in text.split(",")])

    def to_string(self) -> str:
        return ",".join(str(c) for c in (self.coeffs or (mpq(0),)))


@dataclass(frozen=True)
class RemezInstance:
    """Interval I = [lo, hi] with either a union of subintervals E or a
    set of points of pairwise spacing >= 1."""

    lo: mpq
    hi: mpq
    subintervals: tuple | None = None
    points: tuple | None = None

    @staticmethod
    def with_subintervals(lo, hi, subintervals) -> "RemezInstance":
        lo, hi = _as_mpq(lo), _as_mpq(hi)
        subs = tuple((_as_mpq(a), _as_mpq(b)) for a, b in subintervals)
        if lo >= hi:
            raise RemezError("empty interval")
        for a, b in subs:
            if not lo <= a <= b <= hi:
                raise RemezError(f"subinterval [{a}, {b}] not inside [{lo}, {hi}]")
        if sum((b - a for a, b in subs), mpq(0)) == 0:
            raise RemezError("E must have positive measure")
        return RemezInstance(lo, hi, subintervals=subs)

    @staticmethod
    def with_points(lo, hi, points) -> "RemezInstance":
        lo, hi = _as_mpq(lo), _as_mpq(hi)
        pts = tuple(sorted(_as_mpq(x) for x in points))
        if lo >= hi:
            raise RemezError("empty interval")
        for x in pts:
            if not lo <= x <= hi:
                raise RemezError(f"point {x} outside [{lo}, {hi}]")
        for a, b in zip(pts, pts[1:]):
            if b - a < 1:
                raise RemezError("points must have pairwise spacing >= 1")
        return RemezInstance(lo, hi, points=pts)

    @property
    def length(self) -> mpq:
        return self.hi - self.lo

    @property
    def measure(self) -> mpq:
        if self.subintervals is None:
            raise RemezError("instance has no subinterval set")
        return sum((b - a for a, b in self.subintervals), mpq(0))


@dataclass(frozen=True)
class PolyMaxResult:
    """Certified bracket for max over I of |p|.

    attained is an exact value of |p| at the best candidate point, hence
    a lower bound; bound is a certified upper bound (equal to attained
    in fast mode, where only the lower bound is certified).
    """

    bound: mpq
    attained: mpq
    argmax: mpq
    certified: bool


def _sign_variations(chain, x: mpq) -> int:
    signs = []
    for q in chain:
        v = q(x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _sturm_chain(p: Polynomial) -> list[Polynomial]:
    chain = [p, p.derivative()]
    while not chain[-1].is_zero() and chain[-1].degree > 0:
        a, b = chain[-2].coeffs, chain[-1].coeffs
        # negated polynomial remainder of chain[-2] by chain[-1]
        r = list(a)
        for i in range(len(a) - 1, len(b) - 2, -1):
            f = r[i] / b[-1]
            for j, c in enumerate(b):
                r[i - len(b) + 1 + j] -= f * c
        chain.append(Polynomial([-c for c in r[: len(b) - 1]]))
    if chain[-1].is_zero():
        chain.pop()
    return chain


def _isolate_roots(p: Polynomial, lo: mpq, hi: mpq, width: mpq) -> list[tuple[mpq, mpq]]:
    """Disjoint intervals of length <= width together covering every root
    of p in (lo, hi]."""
    if p.is_zero() or p.degree == 0:
        return []
    chain = _sturm_chain(p)
    out = []
    stack = [(lo, hi, _sign_variations(chain, lo), _sign_variations(chain, hi))]
    while stack:
        a, b, va, vb = stack.pop()
        if va == vb:
            continue
        if b - a <= width:
            out.append((a, b))
            continue
        mid = (a + b) / 2
        vm = _sign_variations(chain, mid)
        stack.append((a, mid, va, vm))
        stack.append((mid, b, vm, vb))
    return out


def _derivative_slope_bound(p: Polynomial, lo: mpq, hi: mpq) -> mpq:
    r = max(abs(lo), abs(hi), mpq(1))
    return sum((i * abs(c) * r ** (i - 1) for i, c in enumerate(p.coeffs) if i), mpq(0))


def poly_max(p: Polynomial, lo, hi, mode: str = "certified") -> PolyMaxResult:
    """Max over [lo, hi] of |p|.

    certified mode isolates the critical points exactly and returns an
    upper bound valid up to the slope of p across the isolation width;
    fast mode locates critical points in floating point and certifies
    only the exact attained value.
    """
    lo, hi = _as_mpq(lo), _as_mpq(hi)
    if lo > hi:
        raise RemezError("empty interval")
    if p.degree > MAX_DEGREE:
        raise RemezError(f"degree above {MAX_DEGREE}")
    candidates = [lo, hi]
    slack = mpq(0)
    if mode == "certified":
        isolated = _isolate_roots(p.derivative(), lo, hi, ISOLATION_WIDTH)
        for a, b in isolated:
            candidates.extend((a, b))
        if isolated:
            slack = _derivative_slope_bound(p, lo, hi) * ISOLATION_WIDTH
    elif mode == "fast":
        dp = p.derivative()
        if dp.degree >= 1 and not dp.is_zero():
            roots = np.roots([float(c) for c in reversed(dp.coeffs)])
            for r in roots:
                if abs(r.imag) < 1e-7:
                    x = mpq(float(np.clip(r.real, float(lo), float(hi))))
                    candidates.append(x)
    else:
        raise RemezError(f"unknown mode {mode!r}")
    attained, argmax = mpq(-1), lo
    for x in candidates:
        v = abs(p(x))
        if v > attained:
            attained, argmax = v, x
    certified = mode == "certified"
    return PolyMaxResult(attained + slack if certified else attained, attained, argmax, certified)


def remez_bound(p: Polynomial, inst: RemezInstance, sup_on_E) -> mpq:
    """(4 |I| / |E|)^d * sup_E |p|; always >= max_I |p| when sup_on_E is
    an upper bound for |p| on E."""
    measure = inst.measure
    return (4 * inst.length / measure) ** p.degree * _as_mpq(sup_on_E)


def remez_bound_discrete(p: Polynomial, inst: RemezInstance, M) -> mpq:
    """(4 |I| / l)^d * M for d + l points of spacing >= 1 where |p| <= M."""
    if inst.points is None:
        raise RemezError("instance has no point set")
    d = p.degree
    count = len(inst.points)
    if count < d + 1:
        raise RemezError(f"need at least {d + 1} points for degree {d}, got {count}")
    l = count - d
    return (4 * inst.length / l) ** d * _as_mpq(M)
