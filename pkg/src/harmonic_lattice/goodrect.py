"""Good-rectangle machinery on the sloped lattice.

A rectangle R with side half-lengths a(R), b(R) (so a(R) = l + 1/2 for a
square of size l) is good for a base A > 1 when its aspect ratio lies in
[1/10, 10] and max_R |U| <= A^{a(R)+b(R)}.  The exponent a(R)+b(R) is
always an integer for valid rectangles, and the comparison is made
exactly as max^2 <= A^{2(a+b)} so that half-integer sides never force
square roots.

The module provides the goodness predicate, the n-dilate of a square,
the forty-band expansion procedure, exhaustive maximal-good-square
enumeration (float-screened, exactly re-verified near the threshold),
the greedy Vitali selection with its disjointness and 3x-cover
guarantees, and the good-square search dichotomy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from .lattice import GridFunction, SlopedCell, SlopedRect
from .numeric import RATIONAL, Scalar


class GoodRectError(ValueError):
    pass


@dataclass(frozen=True)
class GoodnessConfig:
    """Base A of the goodness bound; the paper's A is symbolic, so it is
    configurable with default 7."""

    A: Scalar = field(default_factory=lambda: Scalar.rational(7))
    aspect: int = 10

    def __post_init__(self):
        if not self.A > 1:
            raise GoodRectError("A must exceed 1")


def side_sum_exponent(R: SlopedRect) -> int:
    """2 (a(R) + b(R)), always an integer."""
    return R.side_a2 + R.side_b2


def aspect_ok(R: SlopedRect, cfg: GoodnessConfig) -> bool:
    return (
        R.side_a2 <= cfg.aspect * R.side_b2 and R.side_b2 <= cfg.aspect * R.side_a2
    )


def rect_max_abs(U: GridFunction, R: SlopedRect) -> Scalar:
    best = None
    for p in R.cells():
        v = U.get_or_none(p)
        if v is None:
            continue
        av = abs(v)
        if best is None or av > best:
            best = av
    if best is None:
        raise GoodRectError("rectangle contains no valid cells")
    return best


def is_good(U: GridFunction, R: SlopedRect, cfg: GoodnessConfig = GoodnessConfig()) -> bool:
    """Aspect in [1/10, 10] and max_R |U| <= A^{a(R)+b(R)}, exactly."""
    if U.coords != "sloped":
        raise GoodRectError("need a sloped grid")
    if not U.window.contains_rect(R):
        raise GoodRectError("rectangle outside the grid window")
    if not aspect_ok(R, cfg):
        return False
    m = rect_max_abs(U, R)
    return m * m <= cfg.A ** side_sum_exponent(R)


def dilate(R: SlopedRect, n: int) -> SlopedRect:
    """The square nR with the same center and side length n (l + 1/2)."""
    if n < 1 or n % 2 == 0:
        raise GoodRectError("dilation factor must be odd and >= 1")
    if R.side_a2 != R.side_b2:
        raise GoodRectError("dilate is defined for squares")
    Ea = R.a2_2 - R.a1_2
    shift = (n - 1) * (Ea + 1) // 2
    new_e = n * (Ea + 1) - 1
    return SlopedRect(R.a1_2 - shift, R.a1_2 - shift + new_e, R.b1_2 - shift, R.b1_2 - shift + new_e)


def count_bad_cells(U: GridFunction, R: SlopedRect, threshold: Scalar | None = None) -> int:
    """Number of valid cells of R with |U| > 1 (or a supplied threshold)."""
    if threshold is None:
        threshold = Scalar.one(U.kind) if not U.kind.exact else Scalar.rational(1)
    n = 0
    for p in R.cells():
        v = U.get_or_none(p)
        if v is not None and abs(v) > threshold:
            n += 1
    return n


@dataclass
class BandSelection:
    band: int
    k2: int | None
    small_fraction: mpq | None


@dataclass
class ExpansionReport:
    rect: SlopedRect
    hypothesis_ok: bool
    bad_cells: int
    budget: mpq
    bands: list[BandSelection]
    missing_bands: list[int]
    line_maxima: list[float]
    goodness: dict[int, bool]  # b2_2 of the taller rectangle -> good?

    @property
    def all_good(self) -> bool:
        return bool(self.goodness) and all(self.goodness.values())


def expand_good(U: GridFunction, R: SlopedRect, cfg: GoodnessConfig = GoodnessConfig()) -> ExpansionReport:
    """Forty-band height expansion of a good rectangle with a(R) >= b(R).

    Checks the bad-cell budget |{|U| > 1}| < |R| / 10^5 on the
    tripled-height rectangle, selects in each of the twenty upper bands
    (b (1 + (2k-1)/40), b (1 + 2k/40)] a line with at least half small
    cells, and reports goodness of R_{a,b'} for every b' in [3b/2, 2b]
    by direct evaluation.  Failures are reported, not raised.
    """
    if R.side_a2 < R.side_b2:
        raise GoodRectError("expansion needs a(R) >= b(R)")
    if not is_good(U, R, cfg):
        raise GoodRectError("base rectangle is not good")
    eb = R.b2_2 - R.b1_2
    tripled = SlopedRect(R.a1_2, R.a2_2, R.b1_2, R.b1_2 + 3 * eb + 2)
    if not U.window.contains_rect(tripled):
        raise GoodRectError("tripled-height rectangle leaves the window")
    bad = count_bad_cells(U, tripled)
    budget = mpq(R.cell_count(), 10**5)
    one = Scalar.rational(1)

    bands: list[BandSelection] = []
    missing: list[int] = []
    maxima: list[float] = []
    side_b = R.side_b2
    for k in range(1, 21):
        lo = R.b1_2 + mpq(side_b * (40 + 2 * k - 1), 40)
        hi = R.b1_2 + mpq(side_b * (40 + 2 * k), 40)
        chosen = None
        frac = None
        k2 = math.floor(lo) + 1
        while k2 <= hi:
            cells = [U.get_or_none(SlopedCell(s2, k2)) for s2 in R.line_s2_range(k2)]
            cells = [v for v in cells if v is not None]
            if cells:
                small = sum(1 for v in cells if abs(v) <= one)
                if 2 * small >= len(cells):
                    chosen = k2
                    frac = mpq(small, len(cells))
                    break
            k2 += 1
        bands.append(BandSelection(k, chosen, frac))
        if chosen is None:
            missing.append(k)
        else:
            sub = SlopedRect(R.a1_2, R.a2_2, R.b1_2, chosen)
            maxima.append(float(rect_max_abs(U, sub)))

    goodness: dict[int, bool] = {}
    for b2_new in range(R.b1_2 + (3 * side_b) // 2 - 1, R.b1_2 + 2 * side_b):
        taller = SlopedRect(R.a1_2, R.a2_2, R.b1_2, b2_new)
        goodness[b2_new] = is_good(U, taller, cfg)
    return ExpansionReport(
        rect=R,
        hypothesis_ok=bad < budget,
        bad_cells=bad,
        budget=budget,
        bands=bands,
        missing_bands=missing,
        line_maxima=maxima,
        goodness=goodness,
    )


@dataclass
class SquareFamily:
    ambient: SlopedRect
    squares: list[SlopedRect]

    def __post_init__(self):
        for q in self.squares:
            if q.side_a2 != q.side_b2:
                raise GoodRectError("family members must be squares")
            if not self.ambient.contains_rect(q):
                raise GoodRectError("family member outside the ambient rectangle")

    def to_json(self) -> dict:
        a = self.ambient
        return {
            "ambient": [a.a1_2, a.a2_2, a.b1_2, a.b2_2],
            "squares": [[q.a1_2, q.a2_2, q.b1_2, q.b2_2] for q in self.squares],
        }

    @staticmethod
    def from_json(d: dict) -> "SquareFamily":
        return SquareFamily(
            SlopedRect(*d["ambient"]), [SlopedRect(*q) for q in d["squares"]]
        )


def _overlap(p: SlopedRect, q: SlopedRect) -> bool:
    """True when the rectangles share at least one valid lattice cell."""
    inter = p.intersect(q)
    return inter is not None and inter.cell_count() > 0


def vitali_select(fam: SquareFamily) -> SquareFamily:
    """Greedy largest-first selection; ties by lexicographic center, then
    input order.  Selected squares are pairwise cell-disjoint and their
    3-dilates cover every input square."""
    order = sorted(
        range(len(fam.squares)),
        key=lambda i: (
            -fam.squares[i].side_a2,
            fam.squares[i].a1_2 + fam.squares[i].a2_2,
            fam.squares[i].b1_2 + fam.squares[i].b2_2,
            i,
        ),
    )
    selected: list[SlopedRect] = []
    for i in order:
        q = fam.squares[i]
        if q.cell_count() == 0:
            continue  # no valid cells: disjointness and covering are vacuous
        if not any(_overlap(q, s) for s in selected):
            selected.append(q)
    for a in range(len(selected)):
        for b in range(a + 1, len(selected)):
            if _overlap(selected[a], selected[b]):
                raise GoodRectError("selection is not disjoint")
    for q in fam.squares:
        if q.cell_count() == 0:
            continue
        covered = any(
            s.side_a2 >= q.side_a2 and _overlap(q, s) and dilate(s, 3).contains_rect(q)
            for s in selected
        )
        if not covered:
            raise GoodRectError("tripled selection fails to cover the family")
    return SquareFamily(fam.ambient, selected)


class _ScreenGrid:
    """Float view of |U| over a sloped window with running-max tables,
    used to screen goodness; borderline squares are re-checked exactly."""

    def __init__(self, U: GridFunction):
        w = U.window
        self.U = U
        self.b1, self.a1 = w.b1_2, w.a1_2
        rows = w.b2_2 - w.b1_2 + 1
        cols = w.a2_2 - w.a1_2 + 1
        g = np.full((rows, cols), -np.inf)
        for p, v in U.items():
            if v is not None:
                g[p.k2 - self.b1, p.s2 - self.a1] = abs(float(v))
        self.abs = g
        self._tables: dict[int, np.ndarray] = {0: g}

    def _sliding(self, size: int) -> np.ndarray:
        """Max over size x size windows; entry [i, j] covers rows i..i+size-1."""
        if size in self._tables:
            return self._tables[size]
        t = self.abs
        done = 1
        while done < size:
            step = min(done, size - done)
            t = np.maximum(t[: t.shape[0] - step, :], t[step:, :])
            done += step
        done = 1
        while done < size:
            step = min(done, size - done)
            t = np.maximum(t[:, : t.shape[1] - step], t[:, step:])
            done += step
        self._tables[size] = t
        return t

    def window_max(self, size: int) -> np.ndarray:
        return self._sliding(size)


def maximal_good_squares(
    U: GridFunction,
    ambient: SlopedRect,
    cfg: GoodnessConfig = GoodnessConfig(),
    seed: SlopedRect | None = None,
) -> SquareFamily:
    """Good squares meeting the seed region that admit no good strict
    super-square inside the ambient rectangle.

    All squares are screened with a float max table; any square whose
    squared maximum lands within a relative 1e-9 band of the threshold
    A^{2(a+b)} is re-decided exactly.
    """
    if not U.window.contains_rect(ambient):
        raise GoodRectError("ambient outside the grid window")
    if seed is None:
        seed = ambient
    grid = _ScreenGrid(U)
    a_lo, a_hi = ambient.a1_2, ambient.a2_2
    b_lo, b_hi = ambient.b1_2, ambient.b2_2
    max_e = min(a_hi - a_lo, b_hi - b_lo)
    A_f = float(cfg.A)

    good_masks: dict[int, np.ndarray] = {}
    for e in range(0, max_e + 1):
        size = e + 1
        t = grid.window_max(size)
        rows = b_hi - b_lo - e + 1
        cols = a_hi - a_lo - e + 1
        sub = t[b_lo - grid.b1 : b_lo - grid.b1 + rows, a_lo - grid.a1 : a_lo - grid.a1 + cols]
        rhs = A_f ** (2 * size)
        sq = sub * sub
        mask = sq <= rhs * (1 - 1e-9)
        border = (~mask) & (sq <= rhs * (1 + 1e-9))
        if border.any():
            for bi, ai in zip(*np.nonzero(border)):
                R = SlopedRect(a_lo + int(ai), a_lo + int(ai) + e, b_lo + int(bi), b_lo + int(bi) + e)
                if R.cell_count() > 0:
                    mask[bi, ai] = is_good(U, R, cfg)
        # squares without any valid cell are not rectangles of the lattice
        if e == 0:
            for bi in range(rows):
                for ai in range(cols):
                    if (a_lo + ai + b_lo + bi) % 2:
                        mask[bi, ai] = False
        good_masks[e] = mask

    # integral images for O(1) "any good square in a window" queries
    integrals = {
        e: np.pad(m.astype(np.int64), ((1, 0), (1, 0))).cumsum(0).cumsum(1)
        for e, m in good_masks.items()
    }

    def any_good_containing(e: int, bi: int, ai: int, e2: int) -> bool:
        """Is there a good e2-square (e2 > e) containing the e-square at
        (bi, ai) (ambient-relative doubled offsets)?"""
        m = good_masks[e2]
        if m.size == 0:
            return False
        d = e2 - e
        r0, r1 = max(bi - d, 0), min(bi, m.shape[0] - 1)
        c0, c1 = max(ai - d, 0), min(ai, m.shape[1] - 1)
        if r0 > r1 or c0 > c1:
            return False
        s = integrals[e2]
        total = s[r1 + 1, c1 + 1] - s[r0, c1 + 1] - s[r1 + 1, c0] + s[r0, c0]
        return total > 0

    out: list[SlopedRect] = []
    for e in range(max_e, -1, -1):
        mask = good_masks[e]
        for bi, ai in zip(*np.nonzero(mask)):
            bi, ai = int(bi), int(ai)
            R = SlopedRect(a_lo + ai, a_lo + ai + e, b_lo + bi, b_lo + bi + e)
            if R.cell_count() == 0:
                continue
            inter = R.intersect(seed)
            if inter is None or inter.cell_count() == 0:
                continue
            if any(
                any_good_containing(e, bi, ai, e2) for e2 in range(e + 1, max_e + 1)
            ):
                continue
            out.append(R)
    out.sort(key=lambda r: (-r.side_a2, r.a1_2, r.b1_2))
    return SquareFamily(ambient, out)


@dataclass
class FindSquareResult:
    found: SlopedRect | None
    base: SlopedRect | None
    bad_fraction: mpq
    candidates: int
    rejected_by_dilate: int

    @property
    def succeeded(self) -> bool:
        return self.found is not None


def find_good_square(
    U: GridFunction,
    K: int,
    cfg: GoodnessConfig = GoodnessConfig(),
    bad_threshold=mpq(1, 1000),
) -> FindSquareResult:
    """Search for a good square R with Q_{[K/100]} cap R nonempty and
    side at least K/50; return its 3-dilate when the 9-dilate passes the
    bad-cell test, or a diagnostic report otherwise."""
    ambient = SlopedRect.centered_square(K)
    if not U.window.contains_rect(ambient):
        raise GoodRectError("Q_K outside the grid window")
    bad = count_bad_cells(U, ambient)
    frac = mpq(bad, ambient.cell_count())
    if frac > mpq(bad_threshold):
        return FindSquareResult(None, None, frac, 0, 0)
    seed = SlopedRect.centered_square(max(K // 100, 1))
    fam = maximal_good_squares(U, ambient, cfg, seed)
    tried = 0
    rejected = 0
    for R in fam.squares:
        if 25 * R.side_a2 < K:  # side length (l + 1/2) >= K / 50
            continue
        tried += 1
        nine = dilate(R, 9)
        clipped = nine.intersect(U.window)
        if clipped is None:
            continue
        if count_bad_cells(U, clipped) >= mpq(R.cell_count(), 10**5):
            rejected += 1
            continue
        return FindSquareResult(dilate(R, 3), R, frac, tried, rejected)
    return FindSquareResult(None, None, frac, tried, rejected)
