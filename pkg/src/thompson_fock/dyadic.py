"""Exact dyadic arithmetic and the ring Z[sqrt2][1/2].

Two exact types live here:

* :class:`Dyadic` -- rationals ``m / 2**e`` kept in canonical form.
* :class:`ExactScalar` -- numbers ``rat + irr*sqrt(2)`` with dyadic parts.

Every Koopman matrix entry on the exact path is an :class:`ExactScalar`.
Approximate values are plain Python/NumPy complex numbers; all approximate
comparisons go through :func:`isclose`, driven by a single tolerance ``tau``.
"""
from __future__ import annotations

import math
import os
from contextlib import contextmanager
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

__all__ = [
    "Dyadic",
    "ExactScalar",
    "exact_add",
    "exact_mul",
    "exact_neg",
    "to_float",
    "get_tau",
    "set_tau",
    "tau_context",
    "isclose",
    "TAU_ENV",
]

TAU_ENV = "THOMPSON_FOCK_TAU"
_DEFAULT_TAU = 1e-9


def _initial_tau() -> float:
    raw = os.environ.get(TAU_ENV)
    if raw is None:
        return _DEFAULT_TAU
    value = float(raw)
    if not value > 0:
        raise ValueError(f"{TAU_ENV} must be positive, got {raw!r}")
    return value


_tau = _initial_tau()


def get_tau() -> float:
    """Current default tolerance for approximate comparisons."""
    return _tau


def set_tau(value: float) -> None:
    global _tau
    if not value > 0:
        raise ValueError("tolerance must be positive")
    _tau = float(value)


@contextmanager
def tau_context(value: float) -> Iterator[float]:
    """Temporarily override the default tolerance."""
    old = get_tau()
    set_tau(value)
    try:
        yield value
    finally:
        set_tau(old)


def isclose(a, b=0.0, tau: float | None = None) -> bool:
    """Absolute comparison ``max|a - b| <= tau`` for scalars or arrays.

    This is the only approximate equality used in the package.
    """
    if tau is None:
        tau = _tau
    if isinstance(a, ExactScalar):
        a = a.to_float()
    if isinstance(b, ExactScalar):
        b = b.to_float()
    diff = np.abs(np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex))
    if diff.size == 0:
        return True
    return bool(np.max(diff) <= tau)


def _trailing_zeros(n: int) -> int:
    return (n & -n).bit_length() - 1


class Dyadic:
    """Exact dyadic rational ``mantissa / 2**exponent``.

    Canonical form has ``exponent == 0`` or an odd mantissa, so equality is
    structural.

    Examples
    --------
    >>> Dyadic(6, 3)
    Dyadic(3, 2)
    >>> Dyadic(1, 2) + Dyadic(1, 2)
    Dyadic(1, 1)
    """

    __slots__ = ("_m", "_e")

    def __init__(self, mantissa: int = 0, exponent: int = 0) -> None:
        m, e = int(mantissa), int(exponent)
        if e < 0:
            m <<= -e
            e = 0
        if m == 0:
            e = 0
        elif e > 0 and not m & 1:
            shift = min(_trailing_zeros(m), e)
            m >>= shift
            e -= shift
        self._m = m
        self._e = e

    @property
    def mantissa(self) -> int:
        return self._m

    @property
    def exponent(self) -> int:
        return self._e

    @classmethod
    def coerce(cls, x: "Dyadic | int | Fraction | str") -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, bool):
            raise TypeError("bool is not a dyadic rational")
        if isinstance(x, int):
            return cls(x, 0)
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, Fraction):
            den = x.denominator
            if den & (den - 1):
                raise ValueError(f"{x} is not dyadic")
            return cls(x.numerator, den.bit_length() - 1)
        raise TypeError(f"cannot interpret {type(x).__name__} as Dyadic")

    def to_fraction(self) -> Fraction:
        return Fraction(self._m, 1 << self._e)

    def __float__(self) -> float:
        return self._m / (1 << self._e)

    def __repr__(self) -> str:
        return f"Dyadic({self._m}, {self._e})"

    def __str__(self) -> str:
        if self._e == 0:
            return str(self._m)
        return f"{self._m}/{1 << self._e}"

    def __hash__(self) -> int:
        return hash((self._m, self._e))

    def _align(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self._e, other._e)
        return self._m << (e - self._e), other._m << (e - other._e), e

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int) and not isinstance(other, bool):
            other = Dyadic(other)
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self._m == other._m and self._e == other._e

    def __lt__(self, other: "Dyadic | int") -> bool:
        a, b, _ = self._align(Dyadic.coerce(other))
        return a < b

    def __le__(self, other: "Dyadic | int") -> bool:
        a, b, _ = self._align(Dyadic.coerce(other))
        return a <= b

    def __gt__(self, other: "Dyadic | int") -> bool:
        a, b, _ = self._align(Dyadic.coerce(other))
        return a > b

    def __ge__(self, other: "Dyadic | int") -> bool:
        a, b, _ = self._align(Dyadic.coerce(other))
        return a >= b

    def __add__(self, other: "Dyadic | int") -> "Dyadic":
        if not isinstance(other, (Dyadic, int)):
            return NotImplemented
        a, b, e = self._align(Dyadic.coerce(other))
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self._m, self._e)

    def __sub__(self, other: "Dyadic | int") -> "Dyadic":
        if not isinstance(other, (Dyadic, int)):
            return NotImplemented
        a, b, e = self._align(Dyadic.coerce(other))
        return Dyadic(a - b, e)

    def __rsub__(self, other: int) -> "Dyadic":
        return Dyadic.coerce(other) - self

    def __mul__(self, other: "Dyadic | int") -> "Dyadic":
        if not isinstance(other, (Dyadic, int)):
            return NotImplemented
        other = Dyadic.coerce(other)
        return Dyadic(self._m * other._m, self._e + other._e)

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return self._m != 0

    def shift(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` (``k`` may be negative)."""
        return Dyadic(self._m, self._e - k)

    def is_integer(self) -> bool:
        return self._e == 0

    def __int__(self) -> int:
        if self._e:
            raise ValueError(f"{self} is not an integer")
        return self._m

    def floor(self) -> int:
        return self._m >> self._e

    def log2(self) -> int:
        """Exact base-2 logarithm of a power of two."""
        if self._m <= 0 or self._m & (self._m - 1):
            raise ValueError(f"{self} is not an integral power of 2")
        return (self._m.bit_length() - 1) - self._e


_Number = Union["ExactScalar", Dyadic, int, Fraction]


class ExactScalar:
    """Element ``rat + irr*sqrt(2)`` of Z[sqrt2][1/2].

    Stored internally as integers ``(a, b, k)`` with value
    ``(a + b*sqrt(2)) / 2**k`` and kept canonical (``k == 0`` or ``a``, ``b``
    not both even), so ``==`` is structural.

    Parameters
    ----------
    rat, irr : Dyadic, int, Fraction or str
        Rational and sqrt(2) parts.

    Examples
    --------
    >>> h = ExactScalar.sqrt2_power(-1)     # sqrt(2)/2
    >>> h * h
    ExactScalar(1/2)
    """

    __slots__ = ("_a", "_b", "_k")

    def __init__(self, rat: _Number = 0, irr: _Number = 0) -> None:
        if isinstance(rat, ExactScalar):
            if irr:
                raise TypeError("irr must be zero when rat is an ExactScalar")
            self._a, self._b, self._k = rat._a, rat._b, rat._k
            return
        r = Dyadic.coerce(rat)
        s = Dyadic.coerce(irr)
        k = max(r.exponent, s.exponent)
        a = r.mantissa << (k - r.exponent)
        b = s.mantissa << (k - s.exponent)
        self._a, self._b, self._k = _canon(a, b, k)

    @classmethod
    def _raw(cls, a: int, b: int, k: int) -> "ExactScalar":
        obj = cls.__new__(cls)
        obj._a, obj._b, obj._k = _canon(a, b, k)
        return obj

    @classmethod
    def sqrt2_power(cls, e: int) -> "ExactScalar":
        """``sqrt(2)**e`` for any integer ``e``."""
        half, odd = divmod(e, 2)
        if odd:
            return cls._raw(0, 1, 0)._shift(half)
        return cls._raw(1, 0, 0)._shift(half)

    @classmethod
    def coerce(cls, x: _Number) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        return cls(x)

    @property
    def rat(self) -> Dyadic:
        return Dyadic(self._a, self._k)

    @property
    def irr(self) -> Dyadic:
        return Dyadic(self._b, self._k)

    @property
    def parts(self) -> tuple[int, int, int]:
        """Integers ``(a, b, k)`` with value ``(a + b*sqrt2) / 2**k``."""
        return self._a, self._b, self._k

    def _shift(self, j: int) -> "ExactScalar":
        # multiply by 2**j
        if j >= 0:
            k = self._k - j
            if k >= 0:
                return ExactScalar._raw(self._a, self._b, k)
            return ExactScalar._raw(self._a << -k, self._b << -k, 0)
        return ExactScalar._raw(self._a, self._b, self._k - j)

    def shift(self, j: int) -> "ExactScalar":
        """Multiply by ``2**j``."""
        return self._shift(j)

    def __repr__(self) -> str:
        return f"ExactScalar({self})"

    def __str__(self) -> str:
        r, s = self.rat, self.irr
        if not s:
            return str(r)
        if not r:
            return f"{s}*sqrt2"
        sign = "-" if s.mantissa < 0 else "+"
        return f"{r}{sign}{-s if s.mantissa < 0 else s}*sqrt2"

    def __hash__(self) -> int:
        return hash((self._a, self._b, self._k))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Dyadic, Fraction)) and not isinstance(other, bool):
            try:
                other = ExactScalar(other)
            except ValueError:
                return False
        if not isinstance(other, ExactScalar):
            return NotImplemented
        return (self._a, self._b, self._k) == (other._a, other._b, other._k)

    def __bool__(self) -> bool:
        return bool(self._a or self._b)

    def is_zero(self) -> bool:
        return not (self._a or self._b)

    def _binary(self, other):
        if isinstance(other, ExactScalar):
            return other
        if isinstance(other, (int, Dyadic, Fraction)) and not isinstance(other, bool):
            return ExactScalar(other)
        return None

    def __add__(self, other):
        o = self._binary(other)
        if o is None:
            if isinstance(other, (float, complex, np.number)):
                return self.to_float() + other
            return NotImplemented
        k = max(self._k, o._k)
        sa, oa = k - self._k, k - o._k
        return ExactScalar._raw(
            (self._a << sa) + (o._a << oa), (self._b << sa) + (o._b << oa), k
        )

    __radd__ = __add__

    def __neg__(self) -> "ExactScalar":
        return ExactScalar._raw(-self._a, -self._b, self._k)

    def __sub__(self, other):
        o = self._binary(other)
        if o is None:
            if isinstance(other, (float, complex, np.number)):
                return self.to_float() - other
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._binary(other)
        if o is None:
            if isinstance(other, (float, complex, np.number)):
                return self.to_float() * other
            return NotImplemented
        a, b, c, d = self._a, self._b, o._a, o._b
        return ExactScalar._raw(a * c + 2 * b * d, a * d + b * c, self._k + o._k)

    __rmul__ = __mul__

    def conjugate(self) -> "ExactScalar":
        # all elements are real
        return self

    def galois(self) -> "ExactScalar":
        """The conjugate ``rat - irr*sqrt2`` under sqrt2 -> -sqrt2."""
        return ExactScalar._raw(self._a, -self._b, self._k)

    def sign(self) -> int:
        """Exact sign of the real number represented."""
        a, b = self._a, self._b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: compare a^2 with 2 b^2
        dominant_a = a * a > 2 * b * b
        if dominant_a:
            return 1 if a > 0 else -1
        return 1 if b > 0 else -1

    def __lt__(self, other) -> bool:
        return (self - ExactScalar.coerce(other)).sign() < 0

    def __le__(self, other) -> bool:
        return (self - ExactScalar.coerce(other)).sign() <= 0

    def __gt__(self, other) -> bool:
        return (self - ExactScalar.coerce(other)).sign() > 0

    def __ge__(self, other) -> bool:
        return (self - ExactScalar.coerce(other)).sign() >= 0

    def __abs__(self) -> "ExactScalar":
        return -self if self.sign() < 0 else self

    def to_float(self) -> float:
        return _to_float(self._a, self._b, self._k)

    def __float__(self) -> float:
        return self.to_float()

    def __complex__(self) -> complex:
        return complex(self.to_float())


def _canon(a: int, b: int, k: int) -> tuple[int, int, int]:
    if a == 0 and b == 0:
        return 0, 0, 0
    if k < 0:
        return a << -k, b << -k, 0
    if k > 0 and not (a & 1) and not (b & 1):
        tz = min(
            _trailing_zeros(a) if a else k,
            _trailing_zeros(b) if b else k,
            k,
        )
        return a >> tz, b >> tz, k - tz
    return a, b, k


def _to_float(a: int, b: int, k: int) -> float:
    # Correctly rounded: bracket (a + b*sqrt2) * 2**s between consecutive
    # integers and refine until both ends round to the same double.
    if b == 0:
        return a / (1 << k) if k else float(a)
    s = 64 + max(a.bit_length(), b.bit_length())
    while True:
        t = math.isqrt((2 * b * b) << (2 * s))  # floor(|b| sqrt2 2^s)
        if b > 0:
            lo = (a << s) + t
        else:
            lo = (a << s) - t - 1
        den = 1 << (s + k)
        flo, fhi = lo / den, (lo + 1) / den
        if flo == fhi:
            return flo
        s *= 2


def exact_add(x: ExactScalar, y: ExactScalar) -> ExactScalar:
    return ExactScalar.coerce(x) + ExactScalar.coerce(y)


def exact_mul(x: ExactScalar, y: ExactScalar) -> ExactScalar:
    return ExactScalar.coerce(x) * ExactScalar.coerce(y)


def exact_neg(x: ExactScalar) -> ExactScalar:
    return -ExactScalar.coerce(x)


def to_float(x: ExactScalar) -> float:
    """Nearest double to ``rat + irr*sqrt(2)``."""
    return ExactScalar.coerce(x).to_float()
