"""Good rectangles, dilation geometry, maximal squares, Vitali selection."""

import numpy as np
import pytest
from gmpy2 import mpq

from harmonic_lattice.goodrect import (
    GoodnessConfig,
    GoodRectError,
    SquareFamily,
    count_bad_cells,
    dilate,
    expand_good,
    find_good_square,
    is_good,
    maximal_good_squares,
    rect_max_abs,
    side_sum_exponent,
    vitali_select,
)
from harmonic_lattice.lattice import (
    Cell,
    GridFunction,
    SlopedRect,
    Square,
    to_sloped,
)
from harmonic_lattice.numeric import RATIONAL, Scalar


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def sloped_grid(radius, fn):
    u = GridFunction.from_callable(Square(Cell(0, 0), radius), RATIONAL, fn)
    return to_sloped(u)


def zero_grid(radius):
    return sloped_grid(radius, lambda c: Scalar.rational(0))


class TestGoodness:
    def test_exponent_and_max(self):
        U = sloped_grid(8, lambda c: Scalar.rational(c.n + c.m))
        R = SlopedRect(0, 4, 0, 4)
        # side lengths are (span + 1) half-steps: (4+1) + (4+1)
        assert side_sum_exponent(R) == 10
        # cell (s,k)=(2,0) is (n,m)=(2,-2)? no: n=s+k, m=s-k
        assert rect_max_abs(U, R) == max(
            abs(Scalar.rational((p.s2 + p.k2) // 2 + (p.s2 - p.k2) // 2))
            for p in R.cells()
        )

    def test_small_values_good(self):
        U = zero_grid(10)
        assert is_good(U, SlopedRect(-4, 4, -2, 2))

    def test_large_values_bad(self):
        big = Scalar.rational(7**10)
        U = sloped_grid(10, lambda c: big)
        assert not is_good(U, SlopedRect(0, 2, 0, 2))

    def test_aspect_violation_bad(self):
        U = zero_grid(30)
        # ratio of side lengths beyond 10 is never good
        assert not is_good(U, SlopedRect(-28, 28, 0, 2))

    def test_threshold_boundary_exact(self):
        # max^2 == A^{side_sum} is still good; one more is bad
        R = SlopedRect(0, 2, 0, 2)
        exp = side_sum_exponent(R)  # 4 -> bound 7^2
        ok = Scalar.rational(7 ** (exp // 2))
        U_ok = sloped_grid(4, lambda c: ok)
        assert is_good(U_ok, R)
        U_bad = sloped_grid(4, lambda c: ok + Scalar.rational(1))
        assert not is_good(U_bad, R)


class TestDilate:
    def test_triple_centered(self):
        R = SlopedRect(0, 3, 10, 13)
        D = dilate(R, 3)
        assert D.a2_2 - D.a1_2 == 3 * (R.a2_2 - R.a1_2 + 1) - 1
        # symmetric growth on both sides
        assert R.a1_2 - D.a1_2 == D.a2_2 - R.a2_2

    def test_contains_original(self):
        R = SlopedRect(-2, 4, -1, 5)
        assert dilate(R, 5).contains_rect(R)

    def test_even_factor_rejected(self):
        with pytest.raises(GoodRectError):
            dilate(SlopedRect(0, 2, 0, 2), 2)


class TestExpandGood:
    def test_zero_grid_expands(self):
        U = zero_grid(40)
        R = SlopedRect(-20, 20, 0, 4)
        rep = expand_good(U, R)
        assert rep.hypothesis_ok
        assert rep.all_good

    def test_requires_wide_base(self):
        U = zero_grid(20)
        with pytest.raises(GoodRectError):
            expand_good(U, SlopedRect(0, 2, 0, 8))


class TestMaximalSquares:
    def _all_squares(self, ambient):
        out = []
        for e in range(0, ambient.a2_2 - ambient.a1_2 + 1):
            for a1 in range(ambient.a1_2, ambient.a2_2 - e + 1):
                for b1 in range(ambient.b1_2, ambient.b2_2 - e + 1):
                    q = SlopedRect(a1, a1 + e, b1, b1 + e)
                    if q.cell_count() > 0:
                        out.append(q)
        return out

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_no_good_strict_super_square(self, seed):
        rng = _rng(seed)
        base = Scalar.rational(3)
        U = sloped_grid(12, lambda c: base ** abs(c.m) * Scalar.rational(int(rng.integers(1, 3))))
        ambient = SlopedRect(-10, 10, -10, 10)
        fam = maximal_good_squares(U, ambient, GoodnessConfig())
        all_sq = self._all_squares(ambient)
        for R in fam.squares:
            assert is_good(U, R)
            for Q in all_sq:
                if Q != R and Q.contains_rect(R) and Q.cell_count() > R.cell_count():
                    assert not is_good(U, Q)

    def test_every_good_square_is_dominated(self):
        rng = _rng(4)
        U = sloped_grid(
            10, lambda c: Scalar.rational(int(rng.integers(-40, 41)))
        )
        ambient = SlopedRect(-8, 8, -8, 8)
        fam = maximal_good_squares(U, ambient, GoodnessConfig())
        maximal = set(fam.squares)
        for Q in self._all_squares(ambient):
            if is_good(U, Q):
                assert any(
                    R == Q or (R.contains_rect(Q) and R.cell_count() >= Q.cell_count())
                    for R in maximal
                )


class TestBadCells:
    def test_count_on_threshold(self):
        U = sloped_grid(6, lambda c: Scalar.rational(2 if c == Cell(0, 0) else 0))
        R = SlopedRect(-4, 4, -4, 4)
        assert count_bad_cells(U, R) == 1


class TestFindGoodSquare:
    def test_zero_grid_succeeds(self):
        U = zero_grid(40)
        res = find_good_square(U, 20)
        assert res.succeeded
        assert is_good(U, res.base)
        assert res.found == dilate(res.base, 3)
        assert 25 * res.base.side_a2 >= 20

    def test_dense_bad_fails_with_fraction(self):
        big = Scalar.rational(7**40)
        U = sloped_grid(40, lambda c: big)
        res = find_good_square(U, 20)
        assert not res.succeeded
        assert res.bad_fraction == 1


class TestVitali:
    def test_selected_disjoint_and_covering(self):
        rng = _rng(7)
        for _ in range(30):
            amb = SlopedRect(-15, 15, -15, 15)
            squares = []
            for _ in range(int(rng.integers(3, 12))):
                e = int(rng.integers(0, 6))
                a1 = int(rng.integers(-15, 16 - e))
                b1 = int(rng.integers(-15, 16 - e))
                squares.append(SlopedRect(a1, a1 + e, b1, b1 + e))
            sel = vitali_select(SquareFamily(amb, squares))
            # every input square is inside the 3-dilate of a selected one
            for q in squares:
                if q.cell_count() == 0:
                    continue
                assert any(dilate(s, 3).contains_rect(q) for s in sel.squares)

    def test_family_json_round_trip(self):
        amb = SlopedRect(-4, 4, -4, 4)
        fam = SquareFamily(amb, [SlopedRect(0, 2, 0, 2), SlopedRect(-3, -1, 1, 3)])
        back = SquareFamily.from_json(fam.to_json())
        assert back.ambient == fam.ambient and back.squares == fam.squares

    def test_non_square_rejected(self):
        with pytest.raises(GoodRectError):
            SquareFamily(SlopedRect(-4, 4, -4, 4), [SlopedRect(0, 3, 0, 1)])
