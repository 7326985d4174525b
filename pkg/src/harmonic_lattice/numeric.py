"""Uniform scalar arithmetic over four numeric kinds.

The kinds are exact rationals, real quadratic fields Q(sqrt(d)), binary
floats of a fixed precision, and complex floats of a fixed precision.
Exact kinds make harmonicity a zero-residual statement for algebraic
examples; float kinds carry a precision in bits and round to nearest-even.

Arithmetic never mixes kinds implicitly: converting is always explicit
(the only exception is comparison of a rational against a quadratic value
with vanishing irrational part, which compares equal by definition).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr, mpq


class ScalarError(ValueError):
    """Malformed scalar input or unsupported operation."""


class KindMismatchError(ScalarError):
    """Arithmetic attempted between scalars of different kinds."""


DEFAULT_PRECISION = 256


@dataclass(frozen=True)
class Kind:
    """Identifies one of the four numeric kinds.

    name is one of 'rational', 'quadratic', 'float', 'cfloat'.
    d is the square-free radicand for 'quadratic'; precision is the
    mantissa size in bits for the float kinds.
    """

    name: str
    d: int | None = None
    precision: int | None = None

    def __post_init__(self):
        if self.name == "quadratic":
            if self.d is None or self.d < 2 or _is_square(self.d) or not _squarefree(self.d):
                raise ScalarError(f"quadratic kind needs a square-free d >= 2, got {self.d}")
        elif self.name in ("float", "cfloat"):
            if self.precision is None or self.precision < 2:
                raise ScalarError(f"{self.name} kind needs precision >= 2 bits")
        elif self.name != "rational":
            raise ScalarError(f"unknown scalar kind {self.name!r}")

    @property
    def exact(self) -> bool:
        return self.name in ("rational", "quadratic")

    def __str__(self) -> str:
        if self.name == "quadratic":
            return f"quadratic({self.d})"
        if self.name in ("float", "cfloat"):
            return f"{self.name}({self.precision})"
        return self.name


def _is_square(n: int) -> bool:
    r = math.isqrt(n)
    return r * r == n


def _squarefree(n: int) -> bool:
    i = 2
    while i * i <= n:
        if n % (i * i) == 0:
            return False
        i += 1
    return True


RATIONAL = Kind("rational")


def quadratic_kind(d: int) -> Kind:
    return Kind("quadratic", d=d)


def float_kind(precision: int = DEFAULT_PRECISION) -> Kind:
    return Kind("float", precision=precision)


def cfloat_kind(precision: int = DEFAULT_PRECISION) -> Kind:
    return Kind("cfloat", precision=precision)


def parse_kind(text: str) -> Kind:
    m = re.fullmatch(r"(rational)|(quadratic|float|cfloat)\((\d+)\)", text.strip())
    if not m:
        raise ScalarError(f"unrecognized kind string {text!r}")
    if m.group(1):
        return RATIONAL
    name, arg = m.group(2), int(m.group(3))
    if name == "quadratic":
        return quadratic_kind(arg)
    return Kind(name, precision=arg)


def _ctx(prec: int):
    return gmpy2.context(precision=prec)


_RAT_RE = r"[+-]?\d+(?:/\d+)?"
_QUAD_RE = re.compile(rf"({_RAT_RE})\s*([+-])\s*(\d+(?:/\d+)?)\s*\*\s*sqrt\((\d+)\)")


class Scalar:
    """Immutable value of one numeric kind with uniform arithmetic."""

    __slots__ = ("kind", "_v")

    def __init__(self, kind: Kind, payload):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "_v", payload)

    def __setattr__(self, *a):
        raise AttributeError("Scalar is immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def rational(p, q=1) -> "Scalar":
        if q == 0:
            raise ScalarError("zero denominator")
        return Scalar(RATIONAL, mpq(p, q))

    @staticmethod
    def quadratic(d: int, x, y) -> "Scalar":
        return Scalar(quadratic_kind(d), (mpq(x), mpq(y)))

    @staticmethod
    def float_value(v, precision: int = DEFAULT_PRECISION) -> "Scalar":
        return Scalar(float_kind(precision), mpfr(v, precision))

    @staticmethod
    def cfloat_value(v, precision: int = DEFAULT_PRECISION) -> "Scalar":
        return Scalar(cfloat_kind(precision), mpc(v, precision=precision))

    @staticmethod
    def of(value, kind: Kind) -> "Scalar":
        """Embed an integer (or exact rational) into the given kind."""
        if kind.name == "rational":
            return Scalar(kind, mpq(value))
        if kind.name == "quadratic":
            return Scalar(kind, (mpq(value), mpq(0)))
        if kind.name == "float":
            return Scalar(kind, mpfr(value, kind.precision))
        return Scalar(kind, mpc(value, precision=kind.precision))

    @staticmethod
    def zero(kind: Kind) -> "Scalar":
        return Scalar.of(0, kind)

    @staticmethod
    def one(kind: Kind) -> "Scalar":
        return Scalar.of(1, kind)

    # -- introspection ------------------------------------------------

    @property
    def payload(self):
        return self._v

    def is_zero(self) -> bool:
        if self.kind.name == "quadratic":
            return self._v[0] == 0 and self._v[1] == 0
        return self._v == 0

    def sign(self) -> int:
        """Exact sign in {-1, 0, 1}; floats use their numeric sign."""
        k = self.kind.name
        if k == "rational":
            return _cmp0(self._v)
        if k == "quadratic":
            return _quad_sign(self._v[0], self._v[1], self.kind.d)
        if k == "float":
            return _cmp0(self._v)
        raise ScalarError("complex values have no sign")

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            if other.kind != self.kind:
                raise KindMismatchError(f"cannot mix {self.kind} with {other.kind}")
            return other
        if isinstance(other, int):
            return Scalar.of(other, self.kind)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        k = self.kind
        if k.name == "quadratic":
            return Scalar(k, (self._v[0] + o._v[0], self._v[1] + o._v[1]))
        if k.exact:
            return Scalar(k, self._v + o._v)
        with _ctx(k.precision):
            return Scalar(k, self._v + o._v)

    __radd__ = __add__

    def __neg__(self):
        k = self.kind
        if k.name == "quadratic":
            return Scalar(k, (-self._v[0], -self._v[1]))
        return Scalar(k, -self._v)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        k = self.kind
        if k.name == "quadratic":
            x1, y1 = self._v
            x2, y2 = o._v
            return Scalar(k, (x1 * x2 + k.d * y1 * y2, x1 * y2 + y1 * x2))
        if k.exact:
            return Scalar(k, self._v * o._v)
        with _ctx(k.precision):
            return Scalar(k, self._v * o._v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        k = self.kind
        if k.name == "quadratic":
            x2, y2 = o._v
            n = x2 * x2 - k.d * y2 * y2
            if n == 0:
                if x2 == 0 and y2 == 0:
                    raise ZeroDivisionError("division by zero")
                raise ScalarError("norm-zero divisor; d must be square-free")
            conj = Scalar(k, (x2, -y2))
            num = self * conj
            return Scalar(k, (num._v[0] / n, num._v[1] / n))
        if k.exact:
            if o._v == 0:
                raise ZeroDivisionError("division by zero")
            return Scalar(k, self._v / o._v)
        with _ctx(k.precision):
            return Scalar(k, self._v / o._v)

    def __rtruediv__(self, other):
        return Scalar.of(other, self.kind) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return Scalar.one(self.kind) / (self ** (-n))
        result = Scalar.one(self.kind)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __abs__(self):
        k = self.kind
        if k.name == "cfloat":
            with _ctx(k.precision):
                return Scalar(float_kind(k.precision), abs(self._v))
        if self.sign() < 0:
            return -self
        return self

    def conjugate(self) -> "Scalar":
        """Galois conjugate for quadratic values, complex conjugate for cfloat."""
        k = self.kind
        if k.name == "quadratic":
            return Scalar(k, (self._v[0], -self._v[1]))
        if k.name == "cfloat":
            return Scalar(k, self._v.conjugate())
        return self

    # -- comparison ---------------------------------------------------

    def _cmp(self, other) -> int:
        if isinstance(other, int):
            other = Scalar.of(other, self.kind)
        if not isinstance(other, Scalar):
            raise TypeError(f"cannot compare Scalar with {type(other)}")
        a, b = self, other
        # rational <-> quadratic comparison through the embedding
        if a.kind != b.kind:
            if a.kind.name == "rational" and b.kind.name == "quadratic":
                a = Scalar(b.kind, (a._v, mpq(0)))
            elif a.kind.name == "quadratic" and b.kind.name == "rational":
                b = Scalar(a.kind, (b._v, mpq(0)))
            else:
                raise KindMismatchError(f"cannot compare {a.kind} with {b.kind}")
        if a.kind.name == "cfloat":
            raise ScalarError("complex values are unordered")
        return (a - b).sign()

    def __eq__(self, other):
        if isinstance(other, Scalar) and self.kind.name == "cfloat" == other.kind.name:
            return self._v == other._v
        try:
            return self._cmp(other) == 0
        except (TypeError, KindMismatchError, ScalarError):
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.kind.name == "quadratic" and self._v[1] == 0:
            return hash(("scalar", self._v[0]))
        if self.kind.name == "rational":
            return hash(("scalar", self._v))
        return hash(("scalar", self.kind, str(self._v)))

    # -- conversion ---------------------------------------------------

    def to_float(self, precision: int = 53) -> "Scalar":
        """Round an exact value to the nearest binary float (ties to even)."""
        k = self.kind
        if k.name == "rational":
            return Scalar(float_kind(precision), mpfr(self._v, precision))
        if k.name == "quadratic":
            x, y = self._v
            # 64 guard bits, then a final rounding to the target precision
            with _ctx(precision + 64):
                v = mpfr(x) + mpfr(y) * gmpy2.sqrt(mpfr(k.d))
            return Scalar(float_kind(precision), mpfr(v, precision))
        if k.name == "float":
            return Scalar(float_kind(precision), mpfr(self._v, precision))
        raise ScalarError("cannot convert a complex value to a real float")

    def __float__(self) -> float:
        if self.kind.name == "quadratic":
            return float(self.to_float(53)._v)
        return float(self._v)

    def __complex__(self) -> complex:
        if self.kind.name == "cfloat":
            return complex(self._v)
        return complex(float(self))

    # -- serialization ------------------------------------------------

    def __str__(self) -> str:
        return format_scalar(self)

    def __repr__(self) -> str:
        return f"Scalar[{self.kind}]({format_scalar(self)})"


def _cmp0(v) -> int:
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def _quad_sign(x: mpq, y: mpq, d: int) -> int:
    """Exact sign of x + y*sqrt(d)."""
    sx, sy = _cmp0(x), _cmp0(y)
    if sy == 0:
        return sx
    if sx == 0 or sx == sy:
        return sy
    return sx * _cmp0(x * x - d * y * y)


def _float_digits(prec: int) -> int:
    return max(17, int(math.ceil(prec * math.log10(2))) + 2)


def format_scalar(s: Scalar) -> str:
    """Canonical string form; round-trips bit-exactly through parse_scalar."""
    k = s.kind
    if k.name == "rational":
        return str(s.payload)
    if k.name == "quadratic":
        x, y = s.payload
        op = "-" if y < 0 else "+"
        return f"{x}{op}{abs(y)}*sqrt({k.d})"
    digits = _float_digits(k.precision)
    if k.name == "float":
        return format(s.payload, f".{digits}g")
    re_s = format(s.payload.real, f".{digits}g")
    im = s.payload.imag
    op = "-" if im < 0 else "+"
    return f"{re_s}{op}{format(abs(im), f'.{digits}g')}j"


def parse_scalar(text: str, kind: Kind) -> Scalar:
    """Parse the canonical grammar: 'a/b', 'a', 'a+b*sqrt(d)', or a decimal."""
    text = text.strip()
    if kind.name == "rational":
        m = re.fullmatch(_RAT_RE, text)
        if not m:
            raise ScalarError(f"malformed rational {text!r}")
        if "/" in text:
            num, den = text.split("/")
            if int(den) == 0:
                raise ScalarError(f"zero denominator in {text!r}")
            return Scalar(RATIONAL, mpq(int(num), int(den)))
        return Scalar(RATIONAL, mpq(int(text)))
    if kind.name == "quadratic":
        m = _QUAD_RE.fullmatch(text)
        if m:
            x = parse_scalar(m.group(1), RATIONAL).payload
            y = parse_scalar(m.group(3), RATIONAL).payload
            if m.group(2) == "-":
                y = -y
            d = int(m.group(4))
            if d != kind.d:
                raise ScalarError(f"radicand {d} does not match kind {kind}")
            return Scalar(kind, (x, y))
        if re.fullmatch(_RAT_RE, text):
            x = parse_scalar(text, RATIONAL).payload
            return Scalar(kind, (x, mpq(0)))
        raise ScalarError(f"malformed quadratic value {text!r}")
    if kind.name == "float":
        try:
            return Scalar(kind, mpfr(text, kind.precision))
        except ValueError as e:
            raise ScalarError(f"malformed float {text!r}") from e
    m = re.fullmatch(r"(.+?)([+-][^+-]+)j", text)
    if not m:
        raise ScalarError(f"malformed complex value {text!r}")
    try:
        re_v = mpfr(m.group(1), kind.precision)
        im_v = mpfr(m.group(2), kind.precision)
    except ValueError as e:
        raise ScalarError(f"malformed complex value {text!r}") from e
    return Scalar(kind, mpc(re_v, im_v, precision=kind.precision))


@dataclass(frozen=True)
class ToleranceProfile:
    """Absolute/relative tolerance pair, used only for float kinds."""

    abs_tol: float = 0.0
    rel_tol: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.abs_tol) and math.isfinite(self.rel_tol)):
            raise ScalarError("tolerances must be finite")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ScalarError("tolerances must be nonnegative")

    def accepts(self, residual: Scalar, scale: float = 1.0) -> bool:
        """True if |residual| is within tolerance for its kind.

        Exact kinds are held to exactly zero regardless of the profile.
        """
        if residual.kind.exact:
            return residual.is_zero()
        r = abs(float(abs(residual)))
        return r <= self.abs_tol + self.rel_tol * abs(scale)


EXACT_ZERO = ToleranceProfile(0.0, 0.0)
