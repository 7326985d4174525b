"""Harmonic extension mechanisms on the sloped lattice and half-plane.

An L-shape seed consists of values on the two bottom lines and two left
columns of a sloped rectangle; the five-point stencil, rearranged as

    U(s+1/2, k+1/2) = 4U(s, k) - U(s+1/2, k-1/2) - U(s-1/2, k-1/2)
                      - U(s-1/2, k+1/2),

determines the rest uniquely, with the growth bounds

    max_R |U| <= 7^{a(R)+b(R)} max_S |U|,
    |U(s, k)| <= 7^{s+k-a1-b1} max_S |U|.

When the two bottom lines vanish, the values along each line k form a
polynomial in s of degree at most 2(k - b1) - 2 up to the sign factor
(-1)^{s+k}; the coefficients come out exactly by Newton forward
differences.  The half-plane construction produces functions vanishing
on {n - m >= 0} that are exactly harmonic everywhere, one free value
per diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .lattice import (
    Cell,
    GridFunction,
    LatticeError,
    SlopedCell,
    SlopedRect,
    Square,
    sloped_cell,
)
from .numeric import Kind, RATIONAL, Scalar, format_scalar, parse_kind, parse_scalar
from .remez import Polynomial, RemezInstance, _as_mpq, remez_bound_discrete


class ExtensionError(ValueError):
    pass


def seed_cells(rect: SlopedRect) -> list[SlopedCell]:
    """The L-shape S: cells with min(s - a1, k - b1) in {0, 1/2}."""
    out = []
    for p in rect.cells():
        if min(p.s2 - rect.a1_2, p.k2 - rect.b1_2) in (0, 1):
            out.append(p)
    return out


@dataclass
class LShapeData:
    """Values on the L-shape of a sloped rectangle."""

    rect: SlopedRect
    values: dict[SlopedCell, Scalar]

    def __post_init__(self):
        expected = set(seed_cells(self.rect))
        if set(self.values) != expected:
            raise ExtensionError("values must cover exactly the L-shape cells")

    @property
    def kind(self) -> Kind:
        return next(iter(self.values.values())).kind

    def max_abs(self) -> Scalar:
        return max((abs(v) for v in self.values.values()), default=Scalar.zero(self.kind))

    def to_json(self) -> dict:
        r = self.rect
        return {
            "rect": [r.a1_2, r.a2_2, r.b1_2, r.b2_2],
            "scalar_kind": str(self.kind),
            "values": [
                [p.s2, p.k2, format_scalar(self.values[p])] for p in seed_cells(self.rect)
            ],
        }

    @staticmethod
    def from_json(d: dict) -> "LShapeData":
        rect = SlopedRect(*d["rect"])
        kind = parse_kind(d["scalar_kind"])
        values = {
            sloped_cell(s2, k2): parse_scalar(text, kind) for s2, k2, text in d["values"]
        }
        return LShapeData(rect, values)


@dataclass
class DiagonalSeed:
    """One free value per diagonal d = 1 .. D of {m - n = d}."""

    window: int
    values: list[Scalar]

    def __post_init__(self):
        if len(self.values) < 1:
            raise ExtensionError("need at least one diagonal value")
        if len(self.values) > self.window:
            raise ExtensionError(
                f"window radius {self.window} holds at most {self.window} anchored diagonals"
            )

    @property
    def kind(self) -> Kind:
        return self.values[0].kind

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "scalar_kind": str(self.kind),
            "values": [[d + 1, format_scalar(v)] for d, v in enumerate(self.values)],
        }

    @staticmethod
    def from_json(d: dict) -> "DiagonalSeed":
        kind = parse_kind(d["scalar_kind"])
        vals = [parse_scalar(text, kind) for _, text in d["values"]]
        return DiagonalSeed(d["window"], vals)


def extend_lshape(data: LShapeData) -> GridFunction:
    """Unique sloped-harmonic extension of L-shape data to its rectangle.

    Fills by induction on k, then on s, so outputs are bit-reproducible.
    """
    rect = data.rect
    known = dict(data.values)
    for k2 in range(rect.b1_2 + 2, rect.b2_2 + 1):
        for s2 in rect.line_s2_range(k2):
            if s2 - rect.a1_2 <= 1:
                continue
            known[SlopedCell(s2, k2)] = (
                4 * known[SlopedCell(s2 - 1, k2 - 1)]
                - known[SlopedCell(s2, k2 - 2)]
                - known[SlopedCell(s2 - 2, k2 - 2)]
                - known[SlopedCell(s2 - 2, k2)]
            )
    return GridFunction("sloped", rect, data.kind, [known[p] for p in rect.cells()])


def lshape_growth_bound(data: LShapeData) -> Scalar:
    """7^{a(R)+b(R)} max_S |U|, an upper bound for max_R of the extension."""
    rect = data.rect
    exp2 = (rect.side_a2 - 1) + (rect.side_b2 - 1)  # 2(a(R) + b(R)), an integer
    if exp2 % 2:
        raise ExtensionError("a(R) + b(R) must be an integer for this bound")
    return data.max_abs() * Scalar.of(7, data.kind) ** (exp2 // 2)


def cellwise_growth_bound(data: LShapeData, p: SlopedCell) -> Scalar:
    """7^{s+k-a1-b1} max_S |U| at one cell (integer exponent on valid cells)."""
    rect = data.rect
    exp2 = (p.s2 - rect.a1_2) + (p.k2 - rect.b1_2)
    if exp2 % 2:
        raise ExtensionError("s + k - a1 - b1 must be an integer")
    return data.max_abs() * Scalar.of(7, data.kind) ** (exp2 // 2)


def halfplane_construct(seed: DiagonalSeed) -> GridFunction:
    """Harmonic function on Q_N vanishing on the half-plane {n - m >= 0}.

    On each diagonal m - n = d >= 1 the mean value property at the cells
    of diagonal d - 1 forces v(x-1) + v(x) = s(x), where v(x) = u(x, x+d)
    and s(x) collects already-known values; the one remaining degree of
    freedom is anchored at the cell (0, d) with value t_d (zero for
    diagonals beyond the seed).
    """
    N = seed.window
    kind = seed.kind
    zero = Scalar.zero(kind)
    u: dict[Cell, Scalar] = {}

    def val(c: Cell) -> Scalar:
        return u.get(c, zero)

    for d in range(1, 2 * N + 1):
        t = seed.values[d - 1] if d <= len(seed.values) else zero

        def rhs(x: int) -> Scalar:
            return 4 * val(Cell(x, x + d - 1)) - val(Cell(x + 1, x + d - 1)) - val(
                Cell(x, x + d - 2)
            )

        x_hi = N - d
        x_anchor = min(0, x_hi)
        v = {x_anchor: t}
        for x in range(x_anchor + 1, x_hi + 1):
            v[x] = rhs(x) - v[x - 1]
        for x in range(x_anchor, -N, -1):
            v[x - 1] = rhs(x) - v[x]
        for x, value in v.items():
            u[Cell(x, x + d)] = value
    window = Square(Cell(0, 0), N)
    return GridFunction.from_callable(window, kind, lambda c: u.get(c, zero))


@dataclass(frozen=True)
class LinePolynomial:
    """p_k with U(s, k) = (-1)^{s+k} p_k(s), degree <= 2(k - b1) - 2."""

    k2: int
    poly: Polynomial
    degree_bound: int


def _check_zero_bottom(U: GridFunction, rect: SlopedRect) -> None:
    for k2 in (rect.b1_2, rect.b1_2 + 1):
        for s2 in rect.line_s2_range(k2):
            if not U.get(SlopedCell(s2, k2)).is_zero():
                raise ExtensionError("the two bottom lines must vanish identically")


def line_polynomial(U: GridFunction, rect: SlopedRect, k2: int) -> LinePolynomial:
    """Exact interpolating polynomial of one line of a zero-bottom extension.

    Newton forward differences at the unit-spaced s nodes give the
    coefficients without a linear solve; a nonvanishing difference above
    the degree bound signals non-harmonic input.
    """
    if U.coords != "sloped":
        raise ExtensionError("need a sloped grid")
    if not rect.b1_2 + 2 <= k2 <= rect.b2_2:
        raise ExtensionError(f"line k2={k2} outside [b1+1, b2]")
    _check_zero_bottom(U, rect)
    bound = (k2 - rect.b1_2) - 2  # 2(k - b1) - 2
    s2_nodes = list(rect.line_s2_range(k2))
    g = []
    for s2 in s2_nodes:
        sign = -1 if ((s2 + k2) // 2) % 2 else 1
        g.append(sign * _as_mpq(U.get(SlopedCell(s2, k2))))
    # forward difference table; entries above the bound must vanish
    diffs = [g[0]] if g else []
    row = g
    for order in range(1, len(g)):
        row = [b - a for a, b in zip(row, row[1:])]
        diffs.append(row[0])
        if order > bound and any(x != 0 for x in row):
            raise ExtensionError(
                f"finite difference of order {order} does not vanish; "
                f"input is not a zero-bottom harmonic extension"
            )
    # expand sum_j diffs[j]/j! prod_{i<j} (t - i) around t = (s - s0)
    s0 = mpq(s2_nodes[0], 2)
    p = Polynomial([])
    basis = Polynomial([1])
    fact = 1
    for j, dj in enumerate(diffs[: bound + 1]):
        if j:
            fact *= j
            basis = Polynomial(
                [
                    (basis.coeffs[i - 1] if i else 0)
                    - (s0 + (j - 1)) * (basis.coeffs[i] if i < len(basis.coeffs) else 0)
                    for i in range(len(basis.coeffs) + 1)
                ]
            )
        term = [dj * c / fact for c in basis.coeffs]
        merged = list(p.coeffs) + [mpq(0)] * (len(term) - len(p.coeffs))
        for i, c in enumerate(term):
            merged[i] += c
        p = Polynomial(merged)
    return LinePolynomial(k2, p, max(bound, 0))


def remez_line_bound(U: GridFunction, rect: SlopedRect, M: Scalar) -> Scalar:
    """Certified bound for the top-line maximum from smallness on half of it.

    Uses the discrete Remez bound with the points of T_{b2} where
    |U| <= M; requires aspect a(R) >= 10 b(R) and vanishing bottom lines.
    """
    if (rect.side_a2 - 1) < 10 * (rect.side_b2 - 1):
        raise ExtensionError("need a(R) >= 10 b(R)")
    lp = line_polynomial(U, rect, rect.b2_2)
    s2_nodes = list(rect.line_s2_range(rect.b2_2))
    m = abs(M)
    small = [mpq(s2, 2) for s2 in s2_nodes if abs(U.get(SlopedCell(s2, rect.b2_2))) <= m]
    if 2 * len(small) < len(s2_nodes):
        raise ExtensionError("need |U| <= M on at least half of the top line")
    if len(small) < lp.poly.degree + 1:
        raise ExtensionError("not enough small points for the polynomial degree")
    inst = RemezInstance.with_points(mpq(s2_nodes[0], 2), mpq(s2_nodes[-1], 2), small)
    return Scalar.rational(remez_bound_discrete(lp.poly, inst, _as_mpq(m)))
