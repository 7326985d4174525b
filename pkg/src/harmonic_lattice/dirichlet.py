"""Explicit discrete Poisson kernel on centered squares and Dirichlet solvers.

The kernel for the top side of Q_N is the finite sine series

    P((n, m), (n1, N)) =
        1/N * sum_{k=1}^{2N-1} sin(pi k (n+N)/2N) sin(pi k (n1+N)/2N)
                               * sinh(a_k (m+N)) / sinh(2 a_k N),

with cosh a_k = 2 - cos(k pi / 2N); the other three sides follow by the
dihedral symmetries of the square.  The sinh ratio is evaluated through
exponentials of negative arguments so large N never overflows.

Two independent solvers are provided: kernel summation and a direct
solver (exact banded Gaussian elimination over rationals, or red-black
SOR sweeps in floating point), used as oracles for each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from . import _kernels
from .lattice import Cell, GridFunction, Square
from .numeric import Kind, RATIONAL, Scalar, float_kind


class DirichletError(ValueError):
    pass


class IterationCapError(DirichletError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(f"iteration cap {sweeps} reached, residual {residual:.3e}")
        self.residual = residual
        self.sweeps = sweeps


def boundary_cells(N: int) -> list[Cell]:
    """Canonical boundary traversal: top, bottom, left, right sides."""
    return list(Square(Cell(0, 0), N).boundary_cells())


def interior_cells(N: int) -> list[Cell]:
    return [Cell(n, m) for m in range(-N + 1, N) for n in range(-N + 1, N)]


@dataclass
class BoundaryData:
    """Values on the four sides of Q_N, corners excluded."""

    N: int
    values: dict[Cell, Scalar]

    def __post_init__(self):
        expected = boundary_cells(self.N)
        if set(self.values) != set(expected):
            raise DirichletError(
                f"boundary data must cover exactly the 4(2N-1) side cells of Q_{self.N}"
            )

    @property
    def kind(self) -> Kind:
        return next(iter(self.values.values())).kind

    def vector(self) -> list[Scalar]:
        return [self.values[c] for c in boundary_cells(self.N)]

    def vector_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.vector()])

    def max_abs_float(self) -> float:
        v = self.vector_float()
        return float(np.max(np.abs(v))) if len(v) else 0.0

    @staticmethod
    def from_vector(N: int, values) -> "BoundaryData":
        cells = boundary_cells(N)
        if len(values) != len(cells):
            raise DirichletError(f"expected {len(cells)} values")
        return BoundaryData(N, dict(zip(cells, values)))

    @staticmethod
    def from_grid(u: GridFunction) -> "BoundaryData":
        """Restriction of a standard grid on Q_N to its boundary sides."""
        if u.coords != "standard" or u.window.center != Cell(0, 0):
            raise DirichletError("need a grid on a centered square")
        N = u.window.radius
        return BoundaryData(N, {c: u.get(c) for c in boundary_cells(N)})

    def to_json(self) -> dict:
        from .numeric import format_scalar

        return {
            "coords": "standard",
            "window": {"type": "square", "center": [0, 0], "radius": self.N},
            "subset": "boundary",
            "scalar_kind": str(self.kind),
            "values": [format_scalar(v) for v in self.vector()],
        }

    @staticmethod
    def from_json(d: dict) -> "BoundaryData":
        from .numeric import parse_kind, parse_scalar

        kind = parse_kind(d["scalar_kind"])
        N = d["window"]["radius"]
        return BoundaryData.from_vector(N, [parse_scalar(s, kind) for s in d["values"]])


def compute_ak(N: int, k: int, precision: int = 53) -> Scalar:
    """The positive solution of cosh a = 2 - cos(k pi / 2N)."""
    if not 0 < k < 2 * N:
        raise DirichletError(f"k must lie in (0, {2 * N}), got {k}")
    with gmpy2.context(precision=precision + 32):
        c = 2 - gmpy2.cos(gmpy2.const_pi() * k / (2 * N))
        a = gmpy2.log(c + gmpy2.sqrt(c * c - 1))
    return Scalar(float_kind(precision), mpfr(a, precision))


def _side_of(N: int, y: Cell) -> str:
    n1, m1 = y
    if abs(n1) == N and abs(m1) == N:
        raise DirichletError(f"{y} is a corner of Q_{N}; the kernel excludes corners")
    if m1 == N and abs(n1) < N:
        return "top"
    if m1 == -N and abs(n1) < N:
        return "bottom"
    if n1 == -N and abs(m1) < N:
        return "left"
    if n1 == N and abs(m1) < N:
        return "right"
    raise DirichletError(f"{y} is not a boundary cell of Q_{N}")


def _sinh_ratio_real(a: np.ndarray, j: int, N: int) -> np.ndarray:
    """sinh(a (j+N)) / sinh(2 a N) for a vector of a_k, scalar integer j."""
    return np.exp(a * (j - N)) * (1.0 - np.exp(-2.0 * a * (j + N))) / (
        1.0 - np.exp(-4.0 * a * N)
    )


def _sinh_ratio_complex(a: np.ndarray, z, N: int) -> np.ndarray:
    """sinh(a N (1 + z)) / sinh(2 a N) for complex z (broadcastable)."""
    aN = a * N
    num = np.exp(np.multiply.outer(z - 1.0, aN)) - np.exp(np.multiply.outer(-(z + 3.0), aN))
    return num / (1.0 - np.exp(-4.0 * aN))


def kernel_value(N: int, x, y: Cell):
    """Poisson kernel P(x, y) of Q_N.

    x is either a lattice cell (n, m) with |n|, |m| <= N, or a pair
    (z, m) whose first coordinate is complex and stands for n = z N,
    giving the holomorphic extension in the horizontal variable
    (restricted to |m| <= N/2).  Returns a float, or complex for
    complex x.
    """
    side = _side_of(N, Cell(*y))
    n1 = y[0] if side in ("top", "bottom") else y[1]
    k = np.arange(1, 2 * N, dtype=np.float64)
    a = np.arccosh(2.0 - np.cos(k * np.pi / (2 * N)))
    sin_y = np.sin(np.pi * k * (n1 + N) / (2 * N))

    first, second = x
    if isinstance(first, complex):
        z, m = first, second
        if not isinstance(m, int) or 2 * abs(m) > N:
            raise DirichletError("complex evaluation needs an integer line |m| <= N/2")
        if side in ("top", "bottom"):
            mm = m if side == "top" else -m
            ratio = _sinh_ratio_real(a, mm, N)
            sin_z = np.sin(0.5 * np.pi * k * (z + 1.0))
            return complex(np.sum(sin_z * sin_y * ratio) / N)
        zz = z if side == "right" else -z
        sin_m = np.sin(np.pi * k * (m + N) / (2 * N))
        ratio = _sinh_ratio_complex(a, np.complex128(zz), N)
        return complex(np.sum(sin_m * sin_y * ratio) / N)

    n, m = int(first), int(second)
    if max(abs(n), abs(m)) > N:
        raise DirichletError(f"({n}, {m}) outside Q_{N}")
    if side == "top":
        sin_x, j = np.sin(np.pi * k * (n + N) / (2 * N)), m
    elif side == "bottom":
        sin_x, j = np.sin(np.pi * k * (n + N) / (2 * N)), -m
    elif side == "right":
        sin_x, j = np.sin(np.pi * k * (m + N) / (2 * N)), n
    else:
        sin_x, j = np.sin(np.pi * k * (m + N) / (2 * N)), -n
    ratio = _sinh_ratio_real(a, j, N)
    return float(np.sum(sin_x * sin_y * ratio) / N)


@dataclass
class PoissonKernelTable:
    """Dense kernel matrix over interior x (rows) and boundary y (columns)."""

    N: int
    P: np.ndarray = field(repr=False)

    def __post_init__(self):
        nb = 2 * self.N - 1
        if self.P.shape != (nb * nb, 4 * nb):
            raise DirichletError("kernel table has wrong shape")

    def interior(self) -> list[Cell]:
        return interior_cells(self.N)

    def boundary(self) -> list[Cell]:
        return boundary_cells(self.N)

    def value(self, x: Cell, y: Cell) -> float:
        nb = 2 * self.N - 1
        n, m = x
        row = (m + self.N - 1) * nb + (n + self.N - 1)
        col = self.boundary().index(Cell(*y))
        return float(self.P[row, col])

    def row_sums(self) -> np.ndarray:
        return self.P.sum(axis=1)

    def min_entry(self) -> float:
        return float(self.P.min())

    def to_csv(self) -> str:
        lines = ["xn,xm,yn,ym,value"]
        bnd = self.boundary()
        for i, x in enumerate(self.interior()):
            for jdx, y in enumerate(bnd):
                lines.append(f"{x.n},{x.m},{y.n},{y.m},{self.P[i, jdx]!r}")
        return "\n".join(lines) + "\n"


def build_kernel_table(N: int) -> PoissonKernelTable:
    if N < 1:
        raise DirichletError("N must be >= 1")
    return PoissonKernelTable(N, _kernels.kernel_table(N))


def solve_kernel(data: BoundaryData, table: PoissonKernelTable | None = None) -> GridFunction:
    """Interior values by kernel summation; corners are left unset."""
    N = data.N
    if table is None:
        table = build_kernel_table(N)
    interior = table.P @ data.vector_float()
    kind = float_kind(53)
    filled = {
        c: Scalar(kind, mpfr(float(interior[i]), 53))
        for i, c in enumerate(interior_cells(N))
    }
    for c in boundary_cells(N):
        filled[c] = Scalar(kind, mpfr(float(data.values[c]), 53))
    return _grid_from_dict(N, kind, filled)


def _grid_from_dict(N: int, kind, filled: dict) -> GridFunction:
    """Grid on Q_N from a cell -> Scalar map; missing cells stay unset."""
    window = Square(Cell(0, 0), N)
    return GridFunction("standard", window, kind, [filled.get(c) for c in window.cells()])


def _neighbors(c: Cell):
    n, m = c
    return (Cell(n + 1, m), Cell(n - 1, m), Cell(n, m + 1), Cell(n, m - 1))


def _solve_exact(data: BoundaryData) -> GridFunction:
    N = data.N
    if N > 16:
        raise DirichletError("exact mode supports N <= 16")
    kind = data.kind
    if kind.name != "rational":
        raise DirichletError("exact mode needs rational boundary data")
    w = 2 * N - 1
    cells = interior_cells(N)
    index = {c: i for i, c in enumerate(cells)}
    n_unknown = w * w
    band = [[mpq(0)] * (2 * w + 1) for _ in range(n_unknown)]
    rhs = [mpq(0)] * n_unknown
    for i, c in enumerate(cells):
        band[i][w] = mpq(4)
        for nb_cell in _neighbors(c):
            j = index.get(nb_cell)
            if j is not None:
                band[i][j - i + w] = mpq(-1)
            else:
                rhs[i] += data.values[nb_cell].payload
    # banded elimination, no pivoting (diagonally dominant M-matrix)
    for i in range(n_unknown):
        piv = band[i][w]
        for r in range(i + 1, min(i + w + 1, n_unknown)):
            f = band[r][i - r + w]
            if f == 0:
                continue
            f = f / piv
            row_i, row_r = band[i], band[r]
            for col in range(i, min(i + w + 1, n_unknown)):
                row_r[col - r + w] -= f * row_i[col - i + w]
            rhs[r] -= f * rhs[i]
    sol = [mpq(0)] * n_unknown
    for i in range(n_unknown - 1, -1, -1):
        acc = rhs[i]
        for col in range(i + 1, min(i + w + 1, n_unknown)):
            acc -= band[i][col - i + w] * sol[col]
        sol[i] = acc / band[i][w]
    filled = {c: Scalar(RATIONAL, sol[i]) for i, c in enumerate(cells)}
    for c in boundary_cells(N):
        filled[c] = data.values[c]
    return _grid_from_dict(N, RATIONAL, filled)


def _solve_float(data: BoundaryData, max_sweeps: int | None = None) -> GridFunction:
    N = data.N
    size = 2 * N + 1
    grid = np.zeros((size, size))
    for c in boundary_cells(N):
        grid[c.m + N, c.n + N] = float(data.values[c])
    omega = 2.0 / (1.0 + math.sin(math.pi / (2 * N))) if N > 1 else 1.0
    scale = data.max_abs_float()
    tol = 1e-12 * scale if scale > 0 else 1e-300
    if max_sweeps is None:
        max_sweeps = max(2000, 200 * N)
    out, sweeps, res = _kernels.sor_solve(grid, omega, tol, max_sweeps)
    if res > tol:
        raise IterationCapError(res, sweeps)
    kind = float_kind(53)
    filled = {
        c: Scalar(kind, mpfr(float(out[c.m + N, c.n + N]), 53)) for c in interior_cells(N)
    }
    for c in boundary_cells(N):
        filled[c] = data.values[c].to_float(53) if data.kind.exact else data.values[c]
    return _grid_from_dict(N, kind, filled)


def solve_direct(data: BoundaryData, mode: str = "float") -> GridFunction:
    """Independent Dirichlet oracle: exact elimination or SOR sweeps."""
    if mode == "exact":
        return _solve_exact(data)
    if mode == "float":
        return _solve_float(data)
    raise DirichletError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class ComplexRegion:
    """Sampling grid on the rectangle |Re z| <= 1/2, |Im z| <= 1/16."""

    re_half: float = 0.5
    im_half: float = 1.0 / 16.0
    n_re: int = 129
    n_im: int = 33

    def grid(self) -> np.ndarray:
        re = np.linspace(-self.re_half, self.re_half, self.n_re)
        im = np.linspace(-self.im_half, self.im_half, self.n_im)
        return re[None, :] + 1j * im[:, None]

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros((self.n_im, self.n_re), dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask


def complex_extension_scan(
    N: int, m: int, y: Cell, region: ComplexRegion = ComplexRegion()
) -> tuple[float, complex]:
    """Max of |g(z)| = |P((zN, m), y)| over the sampling grid of Omega.

    Returns (max, argmax z).  N * max is the empirical constant of the
    holomorphic-extension bound.
    """
    if 2 * abs(m) > N:
        raise DirichletError("the extension bound is probed only for |m| <= N/2")
    side = _side_of(N, Cell(*y))
    zs = region.grid()
    k = np.arange(1, 2 * N, dtype=np.float64)
    a = np.arccosh(2.0 - np.cos(k * np.pi / (2 * N)))
    n1 = y[0] if side in ("top", "bottom") else y[1]
    sin_y = np.sin(np.pi * k * (n1 + N) / (2 * N))
    if side in ("top", "bottom"):
        mm = m if side == "top" else -m
        ratio = _sinh_ratio_real(a, mm, N)
        g = np.sin(0.5 * np.pi * np.multiply.outer(zs + 1.0, k)) @ (sin_y * ratio) / N
    else:
        sin_m = np.sin(np.pi * k * (m + N) / (2 * N))
        zz = zs if side == "right" else -zs
        g = _sinh_ratio_complex(a, zz.ravel(), N).reshape(zs.shape + (len(k),)) @ (
            sin_m * sin_y
        ) / N
    idx = np.unravel_index(np.argmax(np.abs(g)), g.shape)
    return float(np.abs(g[idx])), complex(zs[idx])


def extension_constant(N: int, region: ComplexRegion = ComplexRegion()) -> float:
    """N * max |g| over all boundary cells y and all lines |m| <= N/2."""
    zs = region.grid().ravel()
    best = _kernels.complex_scan_max(N, zs)
    return N * float(best.max())


def gradient_ratio(u: GridFunction, R: int) -> Scalar:
    """Empirical constant of the discrete gradient estimate.

    max over adjacent pairs in Q_R of |u(q) - u(q')| * R / max_{Q_2R} |u|.
    """
    if u.coords != "standard":
        raise DirichletError("gradient_ratio needs standard coordinates")
    center = u.window.center
    if u.window.radius < 2 * R:
        raise DirichletError("window must contain Q_2R")
    peak = None
    for c in Square(center, 2 * R).cells():
        v = u.get_or_none(c)
        if v is None:
            continue
        av = abs(v)
        if peak is None or av > peak:
            peak = av
    if peak is None or peak.is_zero():
        return Scalar.zero(u.kind)
    diff = None
    cn, cm = center
    for c in Square(center, R).cells():
        for nb_cell in (Cell(c.n + 1, c.m), Cell(c.n, c.m + 1)):
            if max(abs(nb_cell.n - cn), abs(nb_cell.m - cm)) > R:
                continue
            a, b = u.get_or_none(c), u.get_or_none(nb_cell)
            if a is None or b is None:
                continue
            d = abs(a - b)
            if diff is None or d > diff:
                diff = d
    if diff is None:
        return Scalar.zero(u.kind)
    return diff * R / peak
