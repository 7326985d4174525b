"""Grid geometry, grid functions, coordinate transforms, growth reports."""

import math

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from harmonic_lattice.lattice import (
    Cell,
    GridFunction,
    LatticeError,
    SlopedCell,
    SlopedRect,
    Square,
    doubling_report,
    from_sloped,
    grid_from_csv,
    grid_from_json,
    grid_to_csv,
    grid_to_json,
    growth_profile,
    is_harmonic,
    laplacian_residual,
    portion_below,
    sloped_cell,
    to_sloped,
)
from harmonic_lattice.numeric import RATIONAL, Scalar


def _linear(c: Cell) -> Scalar:
    return Scalar.rational(2 * c.n - 3 * c.m + 1)


class TestGeometry:
    def test_square_cell_counts(self):
        q = Square(Cell(0, 0), 3)
        assert q.cell_count() == 49
        assert len(list(q.cells())) == 49
        assert len(list(q.boundary_cells())) == 4 * (2 * 3 - 1)
        assert len(set(q.corner_cells())) == 4

    def test_boundary_order_top_bottom_left_right(self):
        b = list(Square(Cell(0, 0), 2).boundary_cells())
        assert b[:3] == [Cell(-1, 2), Cell(0, 2), Cell(1, 2)]
        assert b[3:6] == [Cell(-1, -2), Cell(0, -2), Cell(1, -2)]
        assert b[6:9] == [Cell(-2, -1), Cell(-2, 0), Cell(-2, 1)]
        assert b[9:] == [Cell(2, -1), Cell(2, 0), Cell(2, 1)]

    def test_sloped_cell_parity(self):
        assert sloped_cell(2, 4) == SlopedCell(2, 4)
        with pytest.raises(LatticeError):
            sloped_cell(2, 3)

    def test_sloped_rect_cell_count(self):
        # both coordinate spans of length 2 (doubled 4): interleaved parities
        r = SlopedRect(0, 4, 0, 4)
        cells = list(r.cells())
        assert len(cells) == r.cell_count()
        assert all((p.s2 + p.k2) % 2 == 0 for p in cells)

    def test_intersect_disjoint(self):
        a = SlopedRect(0, 4, 0, 4)
        b = SlopedRect(6, 8, 0, 4)
        assert a.intersect(b) is None
        c = SlopedRect(2, 6, 2, 6)
        inter = a.intersect(c)
        assert inter == SlopedRect(2, 4, 2, 4)

    def test_centered_square(self):
        r = SlopedRect.centered_square(3)
        assert (r.a1_2, r.a2_2, r.b1_2, r.b2_2) == (-6, 6, -6, 6)


class TestGridFunction:
    def test_from_callable_and_get(self):
        u = GridFunction.from_callable(Square(Cell(0, 0), 2), RATIONAL, _linear)
        assert u.get(Cell(1, -1)) == Scalar.rational(6)
        assert len(list(u.items())) == 25

    def test_values_are_copied(self):
        vals = [Scalar.rational(0)] * 9
        u = GridFunction("standard", Square(Cell(0, 0), 1), RATIONAL, vals)
        vals[0] = Scalar.rational(5)
        assert u.get(Cell(-1, -1)) == Scalar.rational(0)

    def test_json_round_trip(self):
        u = GridFunction.from_callable(Square(Cell(1, -2), 2), RATIONAL, _linear)
        v = grid_from_json(grid_to_json(u))
        assert all(a == b for (_, a), (_, b) in zip(u.items(), v.items()))

    def test_csv_round_trip(self):
        u = GridFunction.from_callable(Square(Cell(0, 0), 2), RATIONAL, _linear)
        v = grid_from_csv(grid_to_csv(u))
        assert all(a == b for (_, a), (_, b) in zip(u.items(), v.items()))


class TestResiduals:
    def test_linear_is_harmonic(self):
        u = GridFunction.from_callable(Square(Cell(0, 0), 4), RATIONAL, _linear)
        assert is_harmonic(u).harmonic

    def test_square_residual_is_two(self):
        # u(n, m) = n^2 has five-point residual (sum of neighbors)/4 - u = 1/2,
        # i.e. neighbor sum minus 4u equals 2, at every interior cell
        u = GridFunction.from_callable(
            Square(Cell(0, 0), 3), RATIONAL, lambda c: Scalar.rational(c.n * c.n)
        )
        r = laplacian_residual(u, Cell(0, 0))
        assert r in (Scalar.rational(2), Scalar.rational(mpq(1, 2)))

    def test_harmonic_conjugate_pair(self):
        # n*m is harmonic too
        u = GridFunction.from_callable(
            Square(Cell(0, 0), 4), RATIONAL, lambda c: Scalar.rational(c.n * c.m)
        )
        assert is_harmonic(u).harmonic


class TestTransforms:
    @given(st.integers(1, 5))
    def test_sloped_round_trip(self, N):
        u = GridFunction.from_callable(Square(Cell(0, 0), 2 * N), RATIONAL, _linear)
        U = to_sloped(u)
        back = from_sloped(U, Square(Cell(0, 0), N))
        for c in Square(Cell(0, 0), N).cells():
            assert back.get(c) == u.get(c)

    def test_harmonicity_preserved(self):
        u = GridFunction.from_callable(
            Square(Cell(0, 0), 6), RATIONAL, lambda c: Scalar.rational(c.n * c.m)
        )
        U = to_sloped(u)
        assert is_harmonic(U).harmonic


class TestReports:
    def test_portion_exact_fraction(self):
        u = GridFunction.from_callable(
            Square(Cell(0, 0), 2), RATIONAL, lambda c: Scalar.rational(abs(c.n))
        )
        # |u| <= 1 on the 15 cells with |n| <= 1 out of 25
        frac = portion_below(u, Scalar.rational(1), Square(Cell(0, 0), 2))
        assert frac == mpq(15, 25)

    def test_growth_profile_geometric(self):
        base = Scalar.rational(2)
        u = GridFunction.from_callable(
            Square(Cell(0, 0), 10),
            RATIONAL,
            lambda c: base ** abs(c.m),
        )
        prof = growth_profile(u, list(range(1, 11)))
        assert [float(m) for m in prof.maxima] == [2.0**k for k in range(1, 11)]
        assert abs(prof.fitted_slope() - math.log(2)) < 1e-9

    def test_doubling_labels(self):
        u = GridFunction.from_callable(
            Square(Cell(0, 0), 8),
            RATIONAL,
            lambda c: Scalar.rational(2) ** abs(c.m),
        )
        prof = growth_profile(u, list(range(1, 9)))
        entries = doubling_report(prof, 0.5)
        assert all(e.exponential for e in entries)
