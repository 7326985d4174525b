"""Exact constructions of the example harmonic functions.

Each example lives in its native algebraic field, so harmonicity is a
zero-residual statement rather than a numerical approximation:

  chelkak34  sin(pi n / 2) (2 + sqrt 3)^m in Q(sqrt 3); the growth rate
             e^b solves e^b + e^{-b} = 4.  Bounded by 1 on
             (2Z x Z) u (Z x Z_-), with Z_- taken to include 0.
  halfplane  a seeded member of the family vanishing on {n - m >= 0}.
  eigen2d    u0(x, y): (-1)^x on the diagonal x = y, zero off it; an
             exact eigenfunction with Delta u0 = -4 u0.
  lift3d     u(x, y, z) = c^z u0(x, y) in Q(sqrt 2), c + 1/c = 6, a
             nonzero six-neighbor harmonic function on Z^3 vanishing
             off the hyperplane {x = y}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .extension import DiagonalSeed, halfplane_construct
from .lattice import Cell, GridFunction, Square
from .numeric import Kind, RATIONAL, Scalar, format_scalar, quadratic_kind

EXAMPLE_NAMES = ("chelkak34", "halfplane", "eigen2d", "lift3d")

KIND_SQRT3 = quadratic_kind(3)
KIND_SQRT2 = quadratic_kind(2)

# e^b = 2 + sqrt 3, the positive root of e^b + e^{-b} = 4
GROWTH_2D = Scalar.quadratic(3, 2, 1)
# c = 3 + 2 sqrt 2, the larger root of c + 1/c = 6
GROWTH_3D = Scalar.quadratic(2, 3, 2)


class GalleryError(ValueError):
    pass


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    window: int
    seed: tuple = ()

    def __post_init__(self):
        if self.name not in EXAMPLE_NAMES:
            raise GalleryError(f"unknown example {self.name!r}")
        if self.window < 1:
            raise GalleryError("window radius must be >= 1")
        if self.name == "halfplane" and not self.seed:
            raise GalleryError("halfplane needs at least one diagonal seed value")


class Grid3Function:
    """Scalar values on the cube [-R, R]^3 with a six-neighbor stencil."""

    __slots__ = ("radius", "kind", "values")

    def __init__(self, radius: int, kind: Kind, values):
        self.radius = radius
        self.kind = kind
        self.values = list(values)
        if len(self.values) != (2 * radius + 1) ** 3:
            raise GalleryError("value count does not match the cube")

    def index_of(self, x: int, y: int, z: int) -> int:
        R = self.radius
        if max(abs(x), abs(y), abs(z)) > R:
            raise GalleryError(f"({x}, {y}, {z}) outside the cube of radius {R}")
        side = 2 * R + 1
        return ((z + R) * side + (y + R)) * side + (x + R)

    def get(self, x: int, y: int, z: int) -> Scalar:
        return self.values[self.index_of(x, y, z)]

    def cells(self):
        R = self.radius
        for z in range(-R, R + 1):
            for y in range(-R, R + 1):
                for x in range(-R, R + 1):
                    yield (x, y, z)

    def to_csv(self) -> str:
        lines = [f"# kind={self.kind}", f"# radius={self.radius}", "x,y,z,value"]
        for (x, y, z), v in zip(self.cells(), self.values):
            lines.append(f"{x},{y},{z},{format_scalar(v)}")
        return "\n".join(lines) + "\n"


def _sin_quarter(n: int) -> int:
    """sin(pi n / 2) as an exact integer in {0, 1, -1}."""
    return (0, 1, 0, -1)[n % 4]


def _power_cache(base: Scalar, lo: int, hi: int) -> dict[int, Scalar]:
    cache = {0: Scalar.one(base.kind)}
    for e in range(1, hi + 1):
        cache[e] = cache[e - 1] * base
    inv = Scalar.one(base.kind) / base
    for e in range(-1, lo - 1, -1):
        cache[e] = cache[e + 1] * inv
    return cache


def build_chelkak34(N: int) -> GridFunction:
    pow_m = _power_cache(GROWTH_2D, -N, N)
    neg_m = {m: -v for m, v in pow_m.items()}
    zero = Scalar.zero(KIND_SQRT3)

    def val(c: Cell) -> Scalar:
        s = _sin_quarter(c.n)
        if s == 0:
            return zero
        return pow_m[c.m] if s > 0 else neg_m[c.m]

    return GridFunction.from_callable(Square(Cell(0, 0), N), KIND_SQRT3, val)


def build_eigen2d(N: int) -> GridFunction:
    one, neg, zero = Scalar.rational(1), Scalar.rational(-1), Scalar.rational(0)

    def val(c: Cell) -> Scalar:
        if c.n != c.m:
            return zero
        return neg if c.n % 2 else one

    return GridFunction.from_callable(Square(Cell(0, 0), N), RATIONAL, val)


def build_lift3d(R: int) -> Grid3Function:
    pow_z = _power_cache(GROWTH_3D, -R, R)
    neg_z = {z: -v for z, v in pow_z.items()}
    zero = Scalar.zero(KIND_SQRT2)
    values = []
    side = 2 * R + 1
    for z in range(-R, R + 1):
        plane = []
        for y in range(-R, R + 1):
            for x in range(-R, R + 1):
                if x != y:
                    plane.append(zero)
                else:
                    plane.append(neg_z[z] if x % 2 else pow_z[z])
        values.extend(plane)
    assert len(values) == side ** 3
    return Grid3Function(R, KIND_SQRT2, values)


def build_example(spec: ExampleSpec):
    if spec.name == "chelkak34":
        return build_chelkak34(spec.window)
    if spec.name == "eigen2d":
        return build_eigen2d(spec.window)
    if spec.name == "lift3d":
        return build_lift3d(spec.window)
    seed_values = [
        v if isinstance(v, Scalar) else Scalar.rational(v) for v in spec.seed
    ]
    return halfplane_construct(DiagonalSeed(spec.window, seed_values))


def check_eigen(u0: GridFunction, lam: Scalar) -> bool:
    """True iff the five-point Laplacian equals lam * u0 at every interior
    cell, exactly."""
    from .lattice import laplacian_residual

    w = u0.window
    inner = Square(w.center, w.radius - 1)
    for c in inner.cells():
        if laplacian_residual(u0, c) != lam * u0.get(c):
            return False
    return True


def residual3(u: Grid3Function, x: int, y: int, z: int) -> Scalar:
    """Six-neighbor sum minus 6 u at one interior site of the cube."""
    if max(abs(x), abs(y), abs(z)) >= u.radius:
        raise GalleryError("need all six neighbors inside the cube")
    total = (
        u.get(x + 1, y, z)
        + u.get(x - 1, y, z)
        + u.get(x, y + 1, z)
        + u.get(x, y - 1, z)
        + u.get(x, y, z + 1)
        + u.get(x, y, z - 1)
    )
    return total - 6 * u.get(x, y, z)


def bounded_region_cells(N: int):
    """Cells of Q_N in (2Z x Z) u (Z x Z_-), where Z_- includes 0."""
    for c in Square(Cell(0, 0), N).cells():
        if c.n % 2 == 0 or c.m <= 0:
            yield c
