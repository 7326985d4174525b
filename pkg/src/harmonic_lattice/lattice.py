"""Lattice geometry, grid-function storage and measurements.

Two coordinate systems are supported: the standard lattice with integer
cells (n, m), and the 45-degree "sloped" lattice whose points (s, k) are
half-integers with s + k integral.  Sloped coordinates are stored doubled
(S = 2s, K = 2k) so that all indexing stays in plain integers.

Grid functions are finite rectangular windows of Scalar values in a fixed
row-major traversal: outer coordinate m (or k) increasing, inner n (or s)
increasing.  Values are immutable after construction; a value may be None
for cells that carry no data (e.g. square corners in Dirichlet solves).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .numeric import (
    Kind,
    Scalar,
    ToleranceProfile,
    format_scalar,
    parse_kind,
    parse_scalar,
)


class LatticeError(ValueError):
    """Invalid window, cell or operation on a grid function."""


class Cell(NamedTuple):
    n: int
    m: int


class SlopedCell(NamedTuple):
    """A point of the sloped lattice, stored as doubled coordinates."""

    s2: int
    k2: int

    @property
    def s(self) -> mpq:
        return mpq(self.s2, 2)

    @property
    def k(self) -> mpq:
        return mpq(self.k2, 2)


def sloped_cell(s2: int, k2: int) -> SlopedCell:
    if (s2 + k2) % 2 != 0:
        raise LatticeError(f"({s2}/2, {k2}/2) violates the s+k integrality constraint")
    return SlopedCell(s2, k2)


@dataclass(frozen=True)
class Square:
    """Centered square window Q_N(center) with (2N+1)^2 cells."""

    center: Cell = Cell(0, 0)
    radius: int = 0

    def __post_init__(self):
        if self.radius < 0:
            raise LatticeError("square radius must be nonnegative")

    def __contains__(self, cell) -> bool:
        n, m = cell
        return max(abs(n - self.center.n), abs(m - self.center.m)) <= self.radius

    def cell_count(self) -> int:
        return (2 * self.radius + 1) ** 2

    def cells(self) -> Iterator[Cell]:
        cn, cm = self.center
        N = self.radius
        for m in range(cm - N, cm + N + 1):
            for n in range(cn - N, cn + N + 1):
                yield Cell(n, m)

    def boundary_cells(self) -> Iterator[Cell]:
        """The four sides without corners: top, bottom, left, right."""
        cn, cm = self.center
        N = self.radius
        for n in range(cn - N + 1, cn + N):
            yield Cell(n, cm + N)
        for n in range(cn - N + 1, cn + N):
            yield Cell(n, cm - N)
        for m in range(cm - N + 1, cm + N):
            yield Cell(cn - N, m)
        for m in range(cm - N + 1, cm + N):
            yield Cell(cn + N, m)

    def corner_cells(self) -> tuple[Cell, Cell, Cell, Cell]:
        cn, cm = self.center
        N = self.radius
        return (
            Cell(cn - N, cm - N),
            Cell(cn + N, cm - N),
            Cell(cn - N, cm + N),
            Cell(cn + N, cm + N),
        )


@dataclass(frozen=True)
class SlopedRect:
    """Rectangle of the sloped lattice with half-integer bounds (doubled)."""

    a1_2: int
    a2_2: int
    b1_2: int
    b2_2: int

    def __post_init__(self):
        if self.a1_2 > self.a2_2 or self.b1_2 > self.b2_2:
            raise LatticeError("empty sloped rectangle")

    @staticmethod
    def from_halves(a1, a2, b1, b2) -> "SlopedRect":
        """Build from half-integer bounds given as exact numbers."""
        vals = [mpq(v) * 2 for v in (a1, a2, b1, b2)]
        for v in vals:
            if v.denominator != 1:
                raise LatticeError("bounds must be half-integers")
        return SlopedRect(*[int(v) for v in vals])

    @staticmethod
    def centered_square(radius: int) -> "SlopedRect":
        """The sloped square [-N, N] x [-N, N]."""
        r = 2 * radius
        return SlopedRect(-r, r, -r, r)

    @property
    def side_a2(self) -> int:
        """Doubled side length: 2*a(R) = a2 - a1 + 1/2, doubled."""
        return self.a2_2 - self.a1_2 + 1

    @property
    def side_b2(self) -> int:
        return self.b2_2 - self.b1_2 + 1

    def __contains__(self, p) -> bool:
        s2, k2 = p
        return (
            self.a1_2 <= s2 <= self.a2_2
            and self.b1_2 <= k2 <= self.b2_2
            and (s2 + k2) % 2 == 0
        )

    def line_s2_range(self, k2: int) -> range:
        """Doubled s-coordinates of the lattice points on the line k = k2/2."""
        start = self.a1_2 if (self.a1_2 + k2) % 2 == 0 else self.a1_2 + 1
        return range(start, self.a2_2 + 1, 2)

    def cells(self) -> Iterator[SlopedCell]:
        for k2 in range(self.b1_2, self.b2_2 + 1):
            for s2 in self.line_s2_range(k2):
                yield SlopedCell(s2, k2)

    def cell_count(self) -> int:
        return sum(len(self.line_s2_range(k2)) for k2 in range(self.b1_2, self.b2_2 + 1))

    def contains_rect(self, other: "SlopedRect") -> bool:
        return (
            self.a1_2 <= other.a1_2
            and other.a2_2 <= self.a2_2
            and self.b1_2 <= other.b1_2
            and other.b2_2 <= self.b2_2
        )

    def intersect(self, other: "SlopedRect") -> "SlopedRect | None":
        a1 = max(self.a1_2, other.a1_2)
        a2 = min(self.a2_2, other.a2_2)
        b1 = max(self.b1_2, other.b1_2)
        b2 = min(self.b2_2, other.b2_2)
        if a1 > a2 or b1 > b2:
            return None
        return SlopedRect(a1, a2, b1, b2)


Window = Square | SlopedRect


class GridFunction:
    """Finite window of Scalar values in one coordinate system."""

    __slots__ = ("coords", "window", "kind", "values", "_index")

    def __init__(self, coords: str, window: Window, kind: Kind, values: Sequence):
        if coords not in ("standard", "sloped"):
            raise LatticeError(f"unknown coordinate system {coords!r}")
        if coords == "standard" and not isinstance(window, Square):
            raise LatticeError("standard coordinates need a Square window")
        if coords == "sloped" and not isinstance(window, SlopedRect):
            raise LatticeError("sloped coordinates need a SlopedRect window")
        count = window.cell_count()
        values = list(values)
        if len(values) != count:
            raise LatticeError(f"expected {count} values, got {len(values)}")
        self.coords = coords
        self.window = window
        self.kind = kind
        self.values = values
        self._index = None

    # -- construction -------------------------------------------------

    @staticmethod
    def from_callable(window: Window, kind: Kind, fn: Callable) -> "GridFunction":
        coords = "standard" if isinstance(window, Square) else "sloped"
        return GridFunction(coords, window, kind, [fn(c) for c in window.cells()])

    @staticmethod
    def constant(window: Window, value: Scalar) -> "GridFunction":
        coords = "standard" if isinstance(window, Square) else "sloped"
        return GridFunction(coords, window, value.kind, [value] * window.cell_count())

    # -- access -------------------------------------------------------

    def index_of(self, cell) -> int:
        if self.coords == "standard":
            n, m = cell
            w = self.window
            N = w.radius
            cn, cm = w.center
            if max(abs(n - cn), abs(m - cm)) > N:
                raise LatticeError(f"cell {cell} outside window")
            return (m - cm + N) * (2 * N + 1) + (n - cn + N)
        s2, k2 = cell
        w = self.window
        if (s2, k2) not in w:
            raise LatticeError(f"sloped cell ({s2}/2, {k2}/2) outside window")
        if self._index is None:
            idx = {}
            i = 0
            for k in range(w.b1_2, w.b2_2 + 1):
                for s in w.line_s2_range(k):
                    idx[(s, k)] = i
                    i += 1
            self._index = idx
        return self._index[(s2, k2)]

    def get(self, cell) -> Scalar:
        v = self.values[self.index_of(cell)]
        if v is None:
            raise LatticeError(f"cell {cell} has no value")
        return v

    def get_or_none(self, cell):
        try:
            return self.values[self.index_of(cell)]
        except LatticeError:
            return None

    def cells(self):
        return self.window.cells()

    def items(self):
        return zip(self.window.cells(), self.values)


@dataclass(frozen=True)
class HarmonicityReport:
    harmonic: bool
    worst_abs: float
    worst_at: tuple | None
    stencils_checked: int


@dataclass
class GrowthProfile:
    """Radii K and maxima M(K) of |u| over nested centered squares."""

    radii: list[int]
    maxima: list[Scalar]

    def log_maxima(self) -> list[float]:
        out = []
        with gmpy2.context(precision=256):
            for v in self.maxima:
                f = v.to_float(256) if v.kind.exact else v
                out.append(float(gmpy2.log(f.payload)))
        return out

    def fitted_slope(self, k_min: int | None = None, k_max: int | None = None) -> float:
        """Least-squares slope of log M(K) against K over the given range."""
        logs = self.log_maxima()
        pts = [
            (k, y)
            for k, y in zip(self.radii, logs)
            if (k_min is None or k >= k_min) and (k_max is None or k <= k_max)
        ]
        if len(pts) < 2:
            raise LatticeError("need at least two radii to fit a slope")
        n = len(pts)
        sx = sum(p[0] for p in pts)
        sy = sum(p[1] for p in pts)
        sxx = sum(p[0] ** 2 for p in pts)
        sxy = sum(p[0] * p[1] for p in pts)
        return (n * sxy - sx * sy) / (n * sxx - sx * sx)


@dataclass(frozen=True)
class DoublingEntry:
    radius: int
    power32: bool
    exponential: bool

    @property
    def label(self) -> str:
        if self.power32 and self.exponential:
            return "both"
        if self.power32:
            return "power"
        if self.exponential:
            return "exponential"
        return "neither"


# -- residuals and harmonicity ---------------------------------------


def laplacian_residual(u: GridFunction, x: Cell) -> Scalar:
    """Four-neighbor sum minus 4 u(x); zero iff the mean value property holds."""
    if u.coords != "standard":
        raise LatticeError("laplacian_residual needs standard coordinates")
    n, m = x
    return (
        u.get((n + 1, m))
        + u.get((n - 1, m))
        + u.get((n, m + 1))
        + u.get((n, m - 1))
        - 4 * u.get((n, m))
    )


def sloped_residual(U: GridFunction, p) -> Scalar:
    """4 U(s+1/2, k+1/2) minus the four corner values U(s..s+1, k..k+1).

    p = (s, k) in doubled coordinates is the lower-left corner of the stencil.
    """
    if U.coords != "sloped":
        raise LatticeError("sloped_residual needs sloped coordinates")
    s2, k2 = p
    return (
        4 * U.get((s2 + 1, k2 + 1))
        - U.get((s2, k2))
        - U.get((s2 + 2, k2))
        - U.get((s2, k2 + 2))
        - U.get((s2 + 2, k2 + 2))
    )


def interior_stencils(u: GridFunction) -> Iterator[tuple]:
    if u.coords == "standard":
        w = u.window
        cn, cm = w.center
        N = w.radius
        for m in range(cm - N + 1, cm + N):
            for n in range(cn - N + 1, cn + N):
                yield Cell(n, m)
    else:
        w = u.window
        for k2 in range(w.b1_2, w.b2_2 - 1):
            start = w.a1_2 if (w.a1_2 + k2) % 2 == 0 else w.a1_2 + 1
            for s2 in range(start, w.a2_2 - 1, 2):
                yield (s2, k2)


def is_harmonic(
    u: GridFunction, tol: ToleranceProfile = ToleranceProfile()
) -> HarmonicityReport:
    """Check every interior stencil; exact kinds must have residual zero."""
    residual = laplacian_residual if u.coords == "standard" else sloped_residual
    worst = None
    worst_at = None
    ok = True
    checked = 0
    for p in interior_stencils(u):
        r = residual(u, p)
        checked += 1
        if not tol.accepts(r):
            ok = False
        ra = abs(r)
        if worst is None or ra > worst:
            worst, worst_at = ra, p
    return HarmonicityReport(ok, float(worst) if worst is not None else 0.0, worst_at, checked)


# -- coordinate transforms -------------------------------------------


def to_sloped(u: GridFunction, target: SlopedRect | None = None) -> GridFunction:
    """U(s, k) = u(s + k, s - k) on a sloped window inside the support."""
    if u.coords != "standard":
        raise LatticeError("to_sloped needs a standard grid")
    w = u.window
    cn, cm = w.center
    N = w.radius
    if target is None:
        target = SlopedRect(cn + cm - N, cn + cm + N, cn - cm - N, cn - cm + N)

    def val(p: SlopedCell):
        n = (p.s2 + p.k2) // 2
        m = (p.s2 - p.k2) // 2
        return u.get((n, m))

    return GridFunction.from_callable(target, u.kind, val)


def from_sloped(U: GridFunction, target: Square | None = None) -> GridFunction:
    """Inverse transform u(n, m) = U((n+m)/2, (n-m)/2)."""
    if U.coords != "sloped":
        raise LatticeError("from_sloped needs a sloped grid")
    w = U.window
    if target is None:
        n0 = round((w.a1_2 + w.a2_2 + w.b1_2 + w.b2_2) / 4)
        m0 = round((w.a1_2 + w.a2_2 - w.b1_2 - w.b2_2) / 4)
        r = min(w.a2_2 - w.a1_2, w.b2_2 - w.b1_2) // 4
        target = Square(Cell(n0, m0), r)
        while not all(Cell(n, m) in _diamond(w) for n, m in target.cells()):
            if target.radius == 0:
                raise LatticeError("no standard square fits the sloped window")
            target = Square(target.center, target.radius - 1)

    def val(c: Cell):
        return U.get((c.n + c.m, c.n - c.m))

    return GridFunction.from_callable(target, U.kind, val)


class _diamond:
    def __init__(self, w: SlopedRect):
        self.w = w

    def __contains__(self, cell) -> bool:
        n, m = cell
        return (n + m, n - m) in self.w


# -- measurements ----------------------------------------------------


def portion_below(u: GridFunction, threshold, Q: Square) -> mpq:
    """Exact fraction of cells of Q where |u| <= threshold."""
    if u.coords != "standard":
        raise LatticeError("portion_below needs standard coordinates")
    if isinstance(threshold, int):
        threshold = Scalar.of(threshold, u.kind)
    count = 0
    cache: dict[int, bool] = {}
    for c in Q.cells():
        v = u.get(c)
        key = id(v)
        hit = cache.get(key)
        if hit is None:
            hit = abs(v) <= threshold
            cache[key] = hit
        if hit:
            count += 1
    return mpq(count, Q.cell_count())


def growth_profile(u: GridFunction, radii: Iterable[int]) -> GrowthProfile:
    """M(K) = max |u| over Q_K centered at the window center, for each K."""
    if u.coords != "standard":
        raise LatticeError("growth_profile needs standard coordinates")
    radii = sorted(set(radii))
    w = u.window
    if radii and radii[-1] > w.radius:
        raise LatticeError(f"radius {radii[-1]} exceeds window radius {w.radius}")
    cn, cm = w.center
    best = None
    maxima = []
    prev = -1
    for K in radii:
        for r in range(prev + 1, K + 1):
            ring = (
                [Cell(cn + dn, cm + dm) for dn in range(-r, r + 1) for dm in (-r, r)]
                + [Cell(cn + dn, cm + dm) for dm in range(-r + 1, r) for dn in (-r, r)]
                if r > 0
                else [Cell(cn, cm)]
            )
            for c in ring:
                v = u.get_or_none(c)
                if v is None:
                    continue
                a = abs(v)
                if best is None or a > best:
                    best = a
        prev = K
        maxima.append(best)
    return GrowthProfile(list(radii), maxima)


def doubling_report(profile: GrowthProfile, c1: float) -> list[DoublingEntry]:
    """Label M(2K) against the M(K)^32 and M(K) e^{c1 K} branches."""
    by_radius = dict(zip(profile.radii, profile.log_maxima()))
    out = []
    for K in profile.radii:
        if 2 * K not in by_radius:
            continue
        lm, lm2 = by_radius[K], by_radius[2 * K]
        out.append(DoublingEntry(K, lm2 >= 32 * lm, lm2 >= lm + c1 * K))
    return out


# -- serialization ---------------------------------------------------


def _window_to_json(w: Window) -> dict:
    if isinstance(w, Square):
        return {"type": "square", "center": [w.center.n, w.center.m], "radius": w.radius}
    return {"type": "sloped_rect", "bounds2": [w.a1_2, w.a2_2, w.b1_2, w.b2_2]}


def _window_from_json(d: dict) -> Window:
    if d["type"] == "square":
        return Square(Cell(*d["center"]), d["radius"])
    if d["type"] == "sloped_rect":
        return SlopedRect(*d["bounds2"])
    raise LatticeError(f"unknown window type {d['type']!r}")


def grid_to_json(u: GridFunction) -> dict:
    return {
        "coords": u.coords,
        "window": _window_to_json(u.window),
        "scalar_kind": str(u.kind),
        "values": [None if v is None else format_scalar(v) for v in u.values],
    }


def grid_from_json(d: dict) -> GridFunction:
    kind = parse_kind(d["scalar_kind"])
    values = [None if s is None else parse_scalar(s, kind) for s in d["values"]]
    return GridFunction(d["coords"], _window_from_json(d["window"]), kind, values)


def _half_str(v2: int) -> str:
    return str(v2 // 2) if v2 % 2 == 0 else f"{v2}/2"


def grid_to_csv(u: GridFunction) -> str:
    buf = io.StringIO()
    buf.write(f"# coords={u.coords}\n")
    buf.write(f"# kind={u.kind}\n")
    buf.write(f"# window={json.dumps(_window_to_json(u.window))}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if u.coords == "standard":
        writer.writerow(["n", "m", "value"])
        for c, v in u.items():
            writer.writerow([c.n, c.m, "" if v is None else format_scalar(v)])
    else:
        writer.writerow(["s", "k", "value"])
        for c, v in u.items():
            writer.writerow([_half_str(c.s2), _half_str(c.k2), "" if v is None else format_scalar(v)])
    return buf.getvalue()


def grid_from_csv(text: str) -> GridFunction:
    meta = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition("=")
            meta[key] = val
        elif line:
            rows.append(line)
    kind = parse_kind(meta["kind"])
    window = _window_from_json(json.loads(meta["window"]))
    values = []
    for row in csv.reader(rows[1:]):
        values.append(None if row[2] == "" else parse_scalar(row[2], kind))
    return GridFunction(meta["coords"], window, kind, values)
