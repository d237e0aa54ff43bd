"""Haar-type bases of L^2[0,1] and exact Koopman windows.

Modes
-----
``f_{n,k}`` is the orthonormal Haar wavelet with support
``[k/2^(n-1), (k+1)/2^(n-1))`` (``f_{0,0} = 1``). The rotated pairs are

* ``p_{1,0} = (f_{0,0} + f_{1,0})/sqrt2``, ``q_{1,0} = (f_{0,0} - f_{1,0})/sqrt2``
  (always this Hadamard pair, whatever ``M`` is);
* ``(p_{n,t}, q_{n,t})^T = M (f_{n,2t}, f_{n,2t+1})^T`` for ``n >= 2``.

The Koopman operator is ``(u_g f)(x) = f(g^-1 x) sqrt((g^-1)'(x))``. Matrix
entries are ``<u_g b_j, b_i>`` with the inner product linear in its first
slot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

from .dyadic import Dyadic, ExactScalar, get_tau, isclose
from .thompson import DPLMap, level

__all__ = [
    "ModeIndex",
    "RotationM",
    "StepFunction",
    "SparseOperator",
    "haar_mode",
    "pq_mode",
    "koopman_apply",
    "expansion",
    "koopman_column",
    "KoopmanColumns",
    "koopman_window",
    "modes_up_to",
    "simple_level",
    "cell_window",
    "haar_analysis",
    "analysis_matrix",
    "to_pq_basis",
]

_SQRT2 = math.sqrt(2.0)
_HALF_ROOT2 = ExactScalar.sqrt2_power(-1)
_ONE = ExactScalar(1)
_ZERO_FLOAT = 1e-14  # float entries below this are treated as structural zeros


# ----------------------------------------------------------------------
# mode labels
# ----------------------------------------------------------------------
@dataclass(frozen=True, order=False)
class ModeIndex:
    """Basis label ``f_{n,t}``, ``p_{n,t}`` or ``q_{n,t}``.

    Linear indices follow the lexicographic order (level, P before Q,
    position). For P/Q modes, level 1 gives ``P1,0 -> 0`` and ``Q1,0 -> 1``
    and level ``n >= 2`` occupies ``[2^(n-1), 2^n)``. For F modes,
    ``f_{0,0} -> 0`` and ``f_{n,k} -> 2^(n-1) + k``.
    """

    family: str
    n: int
    t: int = 0

    def __post_init__(self) -> None:
        fam, n, t = self.family, self.n, self.t
        if fam == "F":
            if n < 0 or not 0 <= t < (1 if n == 0 else 1 << (n - 1)):
                raise ValueError(f"invalid Haar index ({n}, {t})")
        elif fam in ("P", "Q"):
            if n < 1 or not 0 <= t < (1 if n == 1 else 1 << (n - 2)):
                raise ValueError(f"invalid {fam} index ({n}, {t})")
        else:
            raise ValueError(f"unknown family {fam!r}")

    @property
    def index(self) -> int:
        fam, n, t = self.family, self.n, self.t
        if fam == "F":
            return 0 if n == 0 else (1 << (n - 1)) + t
        if n == 1:
            return 0 if fam == "P" else 1
        return (1 << (n - 1)) + (0 if fam == "P" else 1 << (n - 2)) + t

    @property
    def rank(self) -> int:
        """Position among modes of the same family (P or Q)."""
        if self.family == "F":
            return self.index
        return 0 if self.n == 1 else (1 << (self.n - 2)) + self.t

    @classmethod
    def from_index(cls, i: int, family: str = "PQ") -> "ModeIndex":
        if i < 0:
            raise ValueError("negative index")
        if family == "F":
            if i == 0:
                return cls("F", 0, 0)
            n = i.bit_length()
            return cls("F", n, i - (1 << (n - 1)))
        if i < 2:
            return cls("P" if i == 0 else "Q", 1, 0)
        n = i.bit_length()
        off = i - (1 << (n - 1))
        half = 1 << (n - 2)
        return cls("P", n, off) if off < half else cls("Q", n, off - half)

    @classmethod
    def from_rank(cls, family: str, r: int) -> "ModeIndex":
        if r == 0:
            return cls(family, 1, 0)
        n = r.bit_length() + 1
        return cls(family, n, r - (1 << (n - 2)))

    def support(self) -> tuple[Dyadic, Dyadic]:
        """Support interval ``[a, b)``."""
        fam, n, t = self.family, self.n, self.t
        if fam == "F":
            if n == 0:
                return Dyadic(0), Dyadic(1)
            return Dyadic(t, n - 1), Dyadic(t + 1, n - 1)
        if n == 1:
            return (Dyadic(0), Dyadic(1, 1)) if fam == "P" else (Dyadic(1, 1), Dyadic(1))
        return Dyadic(t, n - 2), Dyadic(t + 1, n - 2)

    @property
    def label(self) -> str:
        return f"{self.family}{self.n},{self.t}"

    @classmethod
    def parse(cls, text: str) -> "ModeIndex":
        fam = text[0].upper()
        n, t = text[1:].replace("_", "").split(",")
        return cls(fam, int(n), int(t))

    def __lt__(self, other: "ModeIndex") -> bool:
        return (self.family == "F", self.index) < (other.family == "F", other.index)

    def __repr__(self) -> str:
        return self.label


@lru_cache(maxsize=64)
def _modes_up_to(N: int) -> tuple[ModeIndex, ...]:
    return tuple(ModeIndex.from_index(i) for i in range(1 << N))


def modes_up_to(N: int) -> tuple[ModeIndex, ...]:
    """All P/Q modes of level ``<= N`` in linear order (``2**N`` of them)."""
    if N < 1:
        raise ValueError("window level must be >= 1")
    return _modes_up_to(N)


# ----------------------------------------------------------------------
# rotation matrices
# ----------------------------------------------------------------------
_EXACT_TRIG = {
    0: (1, 0),
    45: ("h", "h"),
    90: (0, 1),
    135: ("-h", "h"),
    180: (-1, 0),
    225: ("-h", "-h"),
    270: (0, -1),
    315: ("h", "-h"),
}


def _exact_value(v) -> ExactScalar:
    if v == "h":
        return _HALF_ROOT2
    if v == "-h":
        return -_HALF_ROOT2
    return ExactScalar(v)


class RotationM:
    """2x2 unitary acting on ``(f_{n,2t}, f_{n,2t+1})``.

    Use :meth:`hadamard`, :meth:`rotation` or :meth:`from_entries`. When all
    entries lie in Z[sqrt2][1/2], :attr:`exact` holds them as
    :class:`ExactScalar` and windows are computed exactly.
    """

    __slots__ = ("matrix", "exact", "label", "theta_deg")

    def __init__(self, matrix, exact=None, label: str = "custom", theta_deg=None) -> None:
        m = np.asarray(matrix, dtype=complex).reshape(2, 2)
        if not isclose(m @ m.conj().T, np.eye(2)):
            raise ValueError("M is not unitary within tolerance")
        if exact is not None:
            exact = tuple(tuple(ExactScalar.coerce(x) for x in row) for row in exact)
            prod = [
                [sum((exact[i][k] * exact[j][k] for k in range(2)), ExactScalar(0)) for j in range(2)]
                for i in range(2)
            ]
            if prod != [[_ONE, ExactScalar(0)], [ExactScalar(0), _ONE]]:
                raise ValueError("exact entries are not orthogonal")
        self.matrix = m
        self.exact = exact
        self.label = label
        self.theta_deg = theta_deg

    @classmethod
    def hadamard(cls) -> "RotationM":
        h = _HALF_ROOT2
        return cls(np.array([[1, 1], [1, -1]]) / _SQRT2, ((h, h), (h, -h)), "hadamard")

    @classmethod
    def rotation(cls, theta_deg: float) -> "RotationM":
        """``[[cos t, sin t], [-sin t, cos t]]``; exact for multiples of 45 degrees."""
        th = float(theta_deg)
        key = th % 360.0
        exact = None
        if key.is_integer() and int(key) in _EXACT_TRIG:
            c, s = (_exact_value(v) for v in _EXACT_TRIG[int(key)])
            exact = ((c, s), (-s, c))
            mat = [[c.to_float(), s.to_float()], [-s.to_float(), c.to_float()]]
        else:
            r = math.radians(th)
            mat = [[math.cos(r), math.sin(r)], [-math.sin(r), math.cos(r)]]
        return cls(mat, exact, f"rotation({th:g}deg)", th)

    @classmethod
    def from_entries(cls, entries) -> "RotationM":
        return cls(entries, None, "custom")

    @property
    def exact_hadamard(self) -> bool:
        h = _HALF_ROOT2
        return self.exact == ((h, h), (h, -h))

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.matrix.imag == 0))

    def entry(self, i: int, j: int, exact: bool = True):
        if exact and self.exact is not None:
            return self.exact[i][j]
        v = self.matrix[i, j]
        return v.real if v.imag == 0 else complex(v)

    def key(self) -> tuple:
        if self.exact is not None:
            return ("exact", self.exact)
        return ("float", tuple(self.matrix.ravel().tolist()))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RotationM) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def describe(self) -> dict:
        d = {
            "label": self.label,
            "convention": "(p,q)^T = M (f_{n,2t}, f_{n,2t+1})^T for n>=2; rotation(t) = [[cos t, sin t], [-sin t, cos t]]",
            "entries": [[[z.real, z.imag] for z in row] for row in self.matrix.tolist()],
            "exact": self.exact is not None,
        }
        if self.theta_deg is not None:
            d["theta_deg"] = self.theta_deg
        return d

    def __repr__(self) -> str:
        return f"RotationM({self.label})"


# ----------------------------------------------------------------------
# generic scalar helpers
# ----------------------------------------------------------------------
def _is_zero(x) -> bool:
    if isinstance(x, ExactScalar):
        return x.is_zero()
    return abs(x) <= _ZERO_FLOAT


def _conj(x):
    if isinstance(x, ExactScalar):
        return x
    return x.conjugate() if isinstance(x, complex) else x


def _root2_pow(e: int, exact: bool):
    if exact:
        return ExactScalar.sqrt2_power(e)
    return 2.0 ** (e / 2)


def _scale_pow2(x, j: int):
    if isinstance(x, ExactScalar):
        return x.shift(j)
    return x * 2.0**j


def _abs2(x) -> float:
    if isinstance(x, ExactScalar):
        return (x * x).to_float()
    return abs(x) ** 2


# ----------------------------------------------------------------------
# step functions
# ----------------------------------------------------------------------
class StepFunction:
    """Function constant on the cells ``[j/2^m, (j+1)/2^m)``.

    Stored sparsely as ``{j: value}``; values are :class:`ExactScalar`
    (exact path) or Python floats/complex numbers.
    """

    __slots__ = ("m", "cells")

    def __init__(self, m: int, cells: Mapping[int, object]) -> None:
        if m < 0:
            raise ValueError("grid exponent must be non-negative")
        size = 1 << m
        clean = {}
        for j, v in cells.items():
            if not 0 <= j < size:
                raise ValueError(f"cell {j} outside grid 2^-{m}")
            if not _is_zero(v):
                clean[int(j)] = v
        self.m = m
        self.cells = clean

    @property
    def exact(self) -> bool:
        return all(isinstance(v, ExactScalar) for v in self.cells.values())

    def refine(self, m2: int) -> "StepFunction":
        if m2 < self.m:
            raise ValueError("can only refine to a finer grid")
        k = m2 - self.m
        if k == 0:
            return self
        out = {}
        for j, v in self.cells.items():
            base = j << k
            for i in range(1 << k):
                out[base + i] = v
        return StepFunction(m2, out)

    def coarsen(self) -> "StepFunction":
        """Merge equal neighbour pairs until no pair can merge."""
        f = self
        while f.m > 0:
            out = {}
            for j, v in f.cells.items():
                if j >> 1 in out:
                    continue
                a = f.cells.get(j & ~1)
                b = f.cells.get(j | 1)
                if a is None or b is None or not _equal(a, b):
                    return f
                out[j >> 1] = a
            f = StepFunction(f.m - 1, out)
        return f

    def _common(self, other: "StepFunction"):
        m = max(self.m, other.m)
        return self.refine(m), other.refine(m), m

    def __add__(self, other: "StepFunction") -> "StepFunction":
        a, b, m = self._common(other)
        out = dict(a.cells)
        for j, v in b.cells.items():
            out[j] = out[j] + v if j in out else v
        return StepFunction(m, out)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + other.scale(-1)

    def scale(self, c) -> "StepFunction":
        return StepFunction(self.m, {j: v * c for j, v in self.cells.items()})

    def inner(self, other: "StepFunction"):
        """``<self, other> = int self * conj(other)``."""
        a, b, m = self._common(other)
        acc = ExactScalar(0) if (a.exact and b.exact) else 0.0
        for j, v in a.cells.items():
            w = b.cells.get(j)
            if w is not None:
                acc = acc + v * _conj(w)
        return _scale_pow2(acc, -m)

    def norm_sq(self):
        return self.inner(self)

    def value_at(self, x) -> object:
        x = Dyadic.coerce(x)
        j = x.shift(self.m).floor()
        return self.cells.get(min(j, (1 << self.m) - 1), 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        a, b, _ = self._common(other)
        if a.cells.keys() != b.cells.keys():
            return False
        return all(_equal(a.cells[j], b.cells[j]) for j in a.cells)

    def __repr__(self) -> str:
        return f"StepFunction(m={self.m}, cells={self.cells})"


def _equal(a, b) -> bool:
    if isinstance(a, ExactScalar) and isinstance(b, ExactScalar):
        return a == b
    return isclose(a, b)


def haar_mode(n: int, k: int, exact: bool = True) -> StepFunction:
    """Orthonormal Haar function ``f_{n,k}``."""
    ModeIndex("F", n, k)
    if n == 0:
        return StepFunction(0, {0: _root2_pow(0, exact)})
    amp = _root2_pow(n - 1, exact)
    return StepFunction(n, {2 * k: amp, 2 * k + 1: -amp})


def pq_mode(M: RotationM, family: str, n: int, t: int = 0, exact: bool | None = None) -> StepFunction:
    """The mode ``p_{n,t}`` or ``q_{n,t}`` of the basis rotated by ``M``."""
    ModeIndex(family, n, t)
    if exact is None:
        exact = M.is_exact
    if n == 1:
        amp = _root2_pow(1, exact)
        return StepFunction(1, {0 if family == "P" else 1: amp})
    row = 0 if family == "P" else 1
    m0, m1 = M.entry(row, 0, exact), M.entry(row, 1, exact)
    amp = _root2_pow(n - 1, exact)
    a0, a1 = m0 * amp, m1 * amp
    return StepFunction(n, {4 * t: a0, 4 * t + 1: -a0, 4 * t + 2: a1, 4 * t + 3: -a1})


def mode_function(M: RotationM, mode: ModeIndex, exact: bool | None = None) -> StepFunction:
    if mode.family == "F":
        return haar_mode(mode.n, mode.t, M.is_exact if exact is None else exact)
    return pq_mode(M, mode.family, mode.n, mode.t, exact)


# ----------------------------------------------------------------------
# Koopman action
# ----------------------------------------------------------------------
def koopman_apply(g: DPLMap, f: StepFunction) -> StepFunction:
    """Exact ``u_g f`` with ``(u_g f)(x) = f(g^-1 x) sqrt((g^-1)'(x))``."""
    if g.is_identity():
        return f
    exact = f.exact
    xs_exp = max(x.exponent for x, _ in g.breakpoints)
    r = max(f.m, xs_exp)
    emin = min(g.slope_exponents)
    R = max(r - emin, g.max_exponent(), r)
    f = f.refine(r)
    out = {}
    for j, v in f.cells.items():
        a = Dyadic(j, r)
        i = g.piece_index(a)
        x0, _, y0, e = _piece(g, i)
        start = y0 + (a - x0).shift(e)
        first = start.shift(R)
        if not first.is_integer():
            raise AssertionError("image cell not aligned; grid too coarse")
        c0 = int(first)
        val = v * _root2_pow(-e, exact)
        for c in range(c0, c0 + (1 << (R - r + e))):
            out[c] = val
    return StepFunction(R, out).coarsen()


def _piece(g: DPLMap, i: int):
    return g._xs[i], g._xs[i + 1], g._ys[i], g._exps[i]


def expansion(f: StepFunction, M: RotationM, family: str = "PQ") -> dict[ModeIndex, object]:
    """Coefficients ``<f, b>`` of ``f`` in the P/Q basis rotated by ``M``
    (or in the plain Haar basis when ``family == "F"``)."""
    exact = f.exact and (M.is_exact or family == "F")
    if f.m == 0:
        f = f.refine(1)
    m = f.m
    if exact:
        norm = ExactScalar.sqrt2_power(-m)
        r = _HALF_ROOT2
    else:
        norm = 2.0 ** (-m / 2)
        r = 1.0 / _SQRT2
    s = {j: v * norm for j, v in f.cells.items()}
    if not exact:
        s = {j: complex(v) if isinstance(v, complex) else float(v) for j, v in s.items()}
    details: dict[int, dict[int, object]] = {}
    for n in range(m, 0, -1):
        d, s2 = {}, {}
        for j in set(k >> 1 for k in s):
            a = s.get(2 * j)
            b = s.get(2 * j + 1)
            a0 = a if a is not None else (ExactScalar(0) if exact else 0.0)
            b0 = b if b is not None else (ExactScalar(0) if exact else 0.0)
            dd = (a0 - b0) * r
            ss = (a0 + b0) * r
            if not _is_zero(dd):
                d[j] = dd
            if not _is_zero(ss):
                s2[j] = ss
        details[n] = d
        s = s2
    f00 = s.get(0, ExactScalar(0) if exact else 0.0)
    out: dict[ModeIndex, object] = {}
    if family == "F":
        if not _is_zero(f00):
            out[ModeIndex("F", 0, 0)] = f00
        for n, d in details.items():
            for k, v in d.items():
                out[ModeIndex("F", n, k)] = v
        return dict(sorted(out.items()))
    d1 = details.get(1, {}).get(0, ExactScalar(0) if exact else 0.0)
    p = (f00 + d1) * r
    q = (f00 - d1) * r
    if not _is_zero(p):
        out[ModeIndex("P", 1, 0)] = p
    if not _is_zero(q):
        out[ModeIndex("Q", 1, 0)] = q
    mc = [[_conj(M.entry(i, j, exact)) for j in range(2)] for i in range(2)]
    zero = ExactScalar(0) if exact else 0.0
    for n in range(2, m + 1):
        d = details.get(n, {})
        for t in sorted(set(k >> 1 for k in d)):
            e0 = d.get(2 * t, zero)
            e1 = d.get(2 * t + 1, zero)
            pv = mc[0][0] * e0 + mc[0][1] * e1
            qv = mc[1][0] * e0 + mc[1][1] * e1
            if not _is_zero(pv):
                out[ModeIndex("P", n, t)] = pv
            if not _is_zero(qv):
                out[ModeIndex("Q", n, t)] = qv
    return dict(sorted(out.items()))


def simple_level(g: DPLMap) -> int:
    """Level from which every P/Q mode maps to a single same-family mode.

    Beyond it a mode's support sits inside one linear piece and its image is
    aligned to the grid of its new level.
    """
    if g.is_identity():
        return 1
    return g.max_exponent() + g.max_abs_slope_exponent() + 2


def _fast_image(g: DPLMap, mode: ModeIndex) -> ModeIndex | None:
    """Single-mode image of ``mode`` when it exists by affine transport."""
    if mode.family == "F" or mode.n == 1:
        return None
    a, b = mode.support()
    i = g.piece_index(a)
    x0, x1, y0, e = _piece(g, i)
    if b > x1:
        return None
    n2 = mode.n - e
    if n2 < 2:
        return None
    start = (y0 + (a - x0).shift(e)).shift(n2 - 2)
    if not start.is_integer():
        return None
    return ModeIndex(mode.family, n2, int(start))


def koopman_column(g: DPLMap, mode: ModeIndex, M: RotationM) -> dict[ModeIndex, object]:
    """Full expansion of ``u_g b`` for a basis mode ``b`` (no truncation)."""
    img = _fast_image(g, mode)
    if img is not None:
        return {img: _ONE if M.is_exact else 1.0}
    if mode.family == "F":
        return expansion(koopman_apply(g, haar_mode(mode.n, mode.t, True)), M, "F")
    return expansion(koopman_apply(g, pq_mode(M, mode.family, mode.n, mode.t)), M)


class KoopmanColumns:
    """Cached exact columns ``u_g b`` for one ``(g, M)``."""

    def __init__(self, g: DPLMap, M: RotationM) -> None:
        self.g = g
        self.M = M
        self._cache: dict[ModeIndex, dict[ModeIndex, object]] = {}

    def __getitem__(self, mode: ModeIndex) -> dict[ModeIndex, object]:
        col = self._cache.get(mode)
        if col is None:
            col = koopman_column(self.g, mode, self.M)
            self._cache[mode] = col
        return col

    def is_simple(self, mode: ModeIndex) -> bool:
        """True when ``u_g b`` is a single same-family mode with coefficient 1."""
        col = self[mode]
        if len(col) != 1:
            return False
        (m2, v), = col.items()
        if m2.family != mode.family:
            return False
        if isinstance(v, ExactScalar):
            return v == _ONE
        return isclose(v, 1.0)

    def active_modes(self) -> list[ModeIndex]:
        """All non-simple P/Q modes (a finite set below :func:`simple_level`)."""
        top = simple_level(self.g)
        out = []
        for i in range(1 << max(top - 1, 1)):
            mode = ModeIndex.from_index(i)
            if not self.is_simple(mode):
                out.append(mode)
        return out


# ----------------------------------------------------------------------
# sparse windows
# ----------------------------------------------------------------------
class SparseOperator:
    """Column-sparse matrix window over the P/Q modes of level ``<= level``.

    ``columns[j]`` maps row linear index to the entry ``<u b_j, b_i>``.
    ``complete`` holds the column indices whose full image lies in the
    window; ``column_mass`` records the squared norm lost outside it.
    """

    def __init__(
        self,
        level: int,
        columns: dict[int, dict[int, object]],
        complete: set[int],
        exact: bool,
        meta: dict | None = None,
        rows: Iterable[int] | None = None,
        cols: Iterable[int] | None = None,
    ) -> None:
        self.level = level
        self.columns = columns
        self.complete = set(complete)
        self.exact = exact
        self.meta = dict(meta or {})
        size = 1 << level
        self.rows = tuple(range(size)) if rows is None else tuple(rows)
        self.cols = tuple(range(size)) if cols is None else tuple(cols)

    @property
    def order(self) -> tuple[ModeIndex, ...]:
        return tuple(ModeIndex.from_index(i) for i in self.rows)

    def entry(self, i: int | ModeIndex, j: int | ModeIndex):
        i = i.index if isinstance(i, ModeIndex) else i
        j = j.index if isinstance(j, ModeIndex) else j
        zero = ExactScalar(0) if self.exact else 0.0
        return self.columns.get(j, {}).get(i, zero)

    def column(self, j: int | ModeIndex) -> dict[int, object]:
        j = j.index if isinstance(j, ModeIndex) else j
        return self.columns.get(j, {})

    def nnz(self) -> int:
        return sum(len(c) for c in self.columns.values())

    def entries(self) -> Iterator[tuple[int, int, object]]:
        for j in sorted(self.columns):
            for i in sorted(self.columns[j]):
                yield i, j, self.columns[j][i]

    def to_dense(self, dtype=None) -> np.ndarray:
        """Dense float array indexed by positions in :attr:`rows` / :attr:`cols`."""
        complex_vals = any(isinstance(v, complex) for _, _, v in self.entries())
        if dtype is None:
            dtype = complex if complex_vals else float
        out = np.zeros((len(self.rows), len(self.cols)), dtype=dtype)
        rpos = {r: k for k, r in enumerate(self.rows)}
        cpos = {c: k for k, c in enumerate(self.cols)}
        for i, j, v in self.entries():
            out[rpos[i], cpos[j]] = complex(v) if dtype == complex else float(v)
        return out

    def restrict(self, rows: Iterable[int], cols: Iterable[int]) -> "SparseOperator":
        rows, cols = tuple(rows), tuple(cols)
        rs = set(rows)
        newcols = {}
        for j in cols:
            c = {i: v for i, v in self.columns.get(j, {}).items() if i in rs}
            if c:
                newcols[j] = c
        return SparseOperator(
            self.level, newcols, self.complete & set(cols), self.exact, self.meta, rows, cols
        )

    def check_orthonormal(self) -> dict:
        """Gram matrix of complete columns against the identity.

        Exact on the exact path; on the float path the defect is reported
        and judged with :func:`isclose`.
        """
        byrow: dict[int, list[tuple[int, object]]] = {}
        for j in self.complete:
            for i, v in self.columns.get(j, {}).items():
                byrow.setdefault(i, []).append((j, v))
        gram: dict[tuple[int, int], object] = {}
        for lst in byrow.values():
            for a, va in lst:
                for b, vb in lst:
                    if a <= b:
                        gram[(a, b)] = gram.get((a, b), 0) + va * _conj(vb)
        defect = 0.0
        ok = True
        for j in self.complete:
            d = gram.get((j, j), 0)
            if self.exact:
                ok &= ExactScalar.coerce(d) == _ONE
            defect = max(defect, abs(complex(d) - 1))
        for (a, b), v in gram.items():
            if a != b:
                if self.exact:
                    ok &= ExactScalar.coerce(v).is_zero()
                defect = max(defect, abs(complex(v)))
        if not self.exact:
            ok = defect <= get_tau()
        return {"orthonormal": bool(ok), "max_defect": defect, "columns": len(self.complete)}

    def to_json(self) -> dict:
        out = {
            "order": [ModeIndex.from_index(i).label for i in self.rows],
            "columns_order": [ModeIndex.from_index(j).label for j in self.cols],
            "entries": [],
            "exact": self.exact,
            "complete_columns": sorted(ModeIndex.from_index(j).label for j in self.complete),
        }
        rpos = {r: k for k, r in enumerate(self.rows)}
        cpos = {c: k for k, c in enumerate(self.cols)}
        exact_entries = []
        for i, j, v in self.entries():
            z = complex(v)
            out["entries"].append([rpos[i], cpos[j], z.real, z.imag])
            if isinstance(v, ExactScalar):
                a, b, k = v.parts
                exact_entries.append([rpos[i], cpos[j], a, b, k])
        if self.exact:
            out["exact_entries"] = exact_entries
            out["exact_entry_format"] = "(a + b*sqrt2) / 2**k"
        return out


def koopman_window(g: DPLMap, M: RotationM, max_level: int) -> SparseOperator:
    """Entries ``<u_g b_j, b_i>`` for all P/Q modes of level ``<= max_level``.

    Raises
    ------
    ValueError
        If ``max_level < level(g) + 2``.
    """
    need = level(g) + 2
    if max_level < need:
        raise ValueError(
            f"window level {max_level} too small for g of level {level(g)}; need >= {need}"
        )
    cols = KoopmanColumns(g, M)
    size = 1 << max_level
    columns: dict[int, dict[int, object]] = {}
    complete = set()
    for j in range(size):
        mode = ModeIndex.from_index(j)
        full = cols[mode]
        inside = {m.index: v for m, v in full.items() if m.n <= max_level}
        if len(inside) == len(full):
            complete.add(j)
        if inside:
            columns[j] = inside
    meta = {"g": g.to_json(), "M": M.describe(), "level": max_level}
    return SparseOperator(max_level, columns, complete, M.is_exact, meta)


# ----------------------------------------------------------------------
# cell basis and fast transforms
# ----------------------------------------------------------------------
def cell_window(g: DPLMap, N: int) -> sp.csr_matrix:
    """Compression of ``u_g`` to the cell basis ``e_j = 2^(N/2) 1_[j/2^N,(j+1)/2^N)``.

    Built directly from the breakpoints; it is an independent route to the
    same window spanned by P/Q modes of level ``<= N``.
    """
    size = 1 << N
    rows, cols, vals = [], [], []
    for x0, x1, y0, e in g.pieces():
        scale = 2.0 ** (-e / 2)
        j0 = x0.shift(N)
        j1 = x1.shift(N)
        if not (j0.is_integer() and j1.is_integer()):
            raise ValueError(f"grid 2^-{N} does not resolve the breakpoints of g")
        for j in range(int(j0), int(j1)):
            a = y0 + (Dyadic(j, N) - x0).shift(e)
            b = a + Dyadic(1, N - e)
            c0 = a.shift(N).floor()
            c = c0
            while c < size and Dyadic(c, N) < b:
                lo = max(a, Dyadic(c, N))
                hi = b if b < Dyadic(c + 1, N) else Dyadic(c + 1, N)
                overlap = (hi - lo).shift(N)
                if overlap:
                    rows.append(c)
                    cols.append(j)
                    vals.append(float(overlap) * scale)
                c += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))


def haar_analysis(arr: np.ndarray, M: RotationM, axis: int = 0) -> np.ndarray:
    """Map cell coordinates to P/Q coordinates along ``axis`` in O(n log n).

    The output is ordered by mode linear index; it equals
    ``analysis_matrix(N, M) @ arr`` for ``axis == 0``.
    """
    a = np.moveaxis(np.asarray(arr), axis, 0)
    size = a.shape[0]
    N = size.bit_length() - 1
    if size != 1 << N or N < 1:
        raise ValueError("length must be a power of two >= 2")
    dtype = np.result_type(a.dtype, M.matrix.dtype if not M.is_real else float, float)
    s = a.astype(dtype, copy=True)
    inv = 1.0 / _SQRT2
    details = {}
    for n in range(N, 0, -1):
        even, odd = s[0::2], s[1::2]
        details[n] = (even - odd) * inv
        s = (even + odd) * inv
    out = np.empty_like(a, dtype=dtype)
    f00, d1 = s[0], details[1][0]
    out[0] = (f00 + d1) * inv
    out[1] = (f00 - d1) * inv
    mc = M.matrix.conj() if not M.is_real else M.matrix.real
    for n in range(2, N + 1):
        d = details[n]
        e0, e1 = d[0::2], d[1::2]
        base, half = 1 << (n - 1), 1 << (n - 2)
        out[base : base + half] = mc[0, 0] * e0 + mc[0, 1] * e1
        out[base + half : base + 2 * half] = mc[1, 0] * e0 + mc[1, 1] * e1
    return np.moveaxis(out, 0, axis)


def analysis_matrix(N: int, M: RotationM) -> np.ndarray:
    """Dense unitary ``W`` with ``W[i, j] = conj(b_i)(e_j)`` in cell coordinates."""
    return haar_analysis(np.eye(1 << N), M, axis=0)


def to_pq_basis(X: np.ndarray, M: RotationM) -> np.ndarray:
    """``W X W^*`` for a cell-basis operator ``X``."""
    Y = haar_analysis(X, M, axis=0)
    return np.conj(haar_analysis(np.conj(Y), M, axis=1))
