"""Thompson's group F as dyadic piecewise-linear homeomorphisms of [0, 1].

Elements are stored as canonical breakpoint lists. Composition follows the
usual convention ``(g * h)(x) = g(h(x))``.
"""
from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dyadic import Dyadic

__all__ = [
    "DPLMap",
    "GroupWord",
    "identity",
    "generator",
    "compose",
    "invert",
    "commutator",
    "conjugate",
    "evaluate_word",
    "mil",
    "level",
    "level_bound",
    "named_word",
    "named_element",
    "relation_words",
    "verify_relations",
    "random_word",
    "NAMED_WORDS",
]

_ZERO = Dyadic(0)
_ONE = Dyadic(1)


class DPLMap:
    """Dyadic PL homeomorphism of [0, 1] given by its breakpoints.

    Parameters
    ----------
    breakpoints : sequence of (x, y)
        Coordinates as :class:`Dyadic`, ``int``, ``Fraction`` or ``"p/q"``
        strings. Must start at (0, 0), end at (1, 1), be strictly increasing
        and have power-of-two slopes. Removable breakpoints are dropped.
    """

    __slots__ = ("_xs", "_ys", "_exps", "_hash")

    def __init__(self, breakpoints: Iterable[Sequence]) -> None:
        pts = [(Dyadic.coerce(x), Dyadic.coerce(y)) for x, y in breakpoints]
        if len(pts) < 2 or pts[0] != (_ZERO, _ZERO) or pts[-1] != (_ONE, _ONE):
            raise ValueError("breakpoints must run from (0,0) to (1,1)")
        exps = []
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            dx, dy = x1 - x0, y1 - y0
            if dx <= 0 or dy <= 0:
                raise ValueError("breakpoints must be strictly increasing")
            exps.append(_ratio_log2(dy, dx))
        # drop collinear points
        xs, ys, es = [pts[0][0]], [pts[0][1]], []
        for i, e in enumerate(exps):
            if es and es[-1] == e:
                xs[-1], ys[-1] = pts[i + 1]
            else:
                es.append(e)
                xs.append(pts[i + 1][0])
                ys.append(pts[i + 1][1])
        self._xs = tuple(xs)
        self._ys = tuple(ys)
        self._exps = tuple(es)
        self._hash = None

    @classmethod
    def _from_canonical(cls, xs, ys, exps) -> "DPLMap":
        obj = cls.__new__(cls)
        obj._xs, obj._ys, obj._exps, obj._hash = tuple(xs), tuple(ys), tuple(exps), None
        return obj

    # -- data access ---------------------------------------------------
    @property
    def breakpoints(self) -> tuple[tuple[Dyadic, Dyadic], ...]:
        return tuple(zip(self._xs, self._ys))

    @property
    def slope_exponents(self) -> tuple[int, ...]:
        """``log2`` of the slope on each piece."""
        return self._exps

    def pieces(self):
        """Yield ``(x0, x1, y0, e)`` for each linear piece of slope ``2**e``."""
        for i, e in enumerate(self._exps):
            yield self._xs[i], self._xs[i + 1], self._ys[i], e

    @property
    def singular_points(self) -> tuple[Dyadic, ...]:
        """Interior x-coordinates where the slope changes."""
        return self._xs[1:-1]

    def max_exponent(self) -> int:
        """Largest dyadic exponent among all breakpoint coordinates."""
        return max(d.exponent for d in self._xs + self._ys)

    def max_abs_slope_exponent(self) -> int:
        return max(abs(e) for e in self._exps)

    def is_identity(self) -> bool:
        return len(self._xs) == 2

    # -- evaluation ----------------------------------------------------
    def piece_index(self, x: Dyadic) -> int:
        """Index of the piece ``[x_i, x_{i+1})`` containing ``x`` (last piece closed)."""
        i = bisect.bisect_right(self._xs, x) - 1
        return min(max(i, 0), len(self._exps) - 1)

    def __call__(self, x) -> Dyadic:
        x = Dyadic.coerce(x)
        if x < 0 or x > 1:
            raise ValueError("argument outside [0, 1]")
        i = self.piece_index(x)
        return self._ys[i] + (x - self._xs[i]).shift(self._exps[i])

    def slope_exponent_at(self, x) -> int:
        """Slope exponent on the piece ``[x_i, x_{i+1})`` containing ``x``."""
        return self._exps[self.piece_index(Dyadic.coerce(x))]

    def inverse(self) -> "DPLMap":
        return DPLMap._from_canonical(self._ys, self._xs, [-e for e in self._exps])

    def __mul__(self, other: "DPLMap") -> "DPLMap":
        if not isinstance(other, DPLMap):
            return NotImplemented
        return compose(self, other)

    def __pow__(self, k: int) -> "DPLMap":
        base = self if k >= 0 else self.inverse()
        out = identity()
        for _ in range(abs(k)):
            out = compose(out, base)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DPLMap):
            return NotImplemented
        return self._xs == other._xs and self._ys == other._ys

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._xs, self._ys))
        return self._hash

    def __repr__(self) -> str:
        pts = ", ".join(f"({x},{y})" for x, y in zip(self._xs, self._ys))
        return f"DPLMap[{pts}]"

    # -- serialization -------------------------------------------------
    def to_json(self) -> list[list[int]]:
        """Breakpoints as ``[x_num, x_exp, y_num, y_exp]`` quadruples."""
        return [[x.mantissa, x.exponent, y.mantissa, y.exponent] for x, y in self.breakpoints]

    @classmethod
    def from_json(cls, data: str | list) -> "DPLMap":
        if isinstance(data, str):
            data = json.loads(data)
        return cls((Dyadic(a, b), Dyadic(c, d)) for a, b, c, d in data)


def _ratio_log2(num: Dyadic, den: Dyadic) -> int:
    # exact log2(num / den); both positive dyadics
    a, ea = num.mantissa, num.exponent
    b, eb = den.mantissa, den.exponent
    # num/den = (a/b) * 2^(eb - ea); a, b odd or exponent zero
    ta = (a & -a).bit_length() - 1
    tb = (b & -b).bit_length() - 1
    a_odd, b_odd = a >> ta, b >> tb
    if a_odd != b_odd:
        raise ValueError("slope is not an integral power of 2")
    return ta - tb + eb - ea


def identity() -> DPLMap:
    return DPLMap._from_canonical((_ZERO, _ONE), (_ZERO, _ONE), (0,))


_GENERATORS = {
    "A": ((0, 0), ("1/2", "1/4"), ("3/4", "1/2"), (1, 1)),
    "B": ((0, 0), ("1/2", "1/2"), ("3/4", "5/8"), ("7/8", "3/4"), (1, 1)),
}


def generator(name: str) -> DPLMap:
    """The standard generator ``A`` or ``B``."""
    try:
        return DPLMap(_GENERATORS[name.upper()])
    except KeyError:
        raise ValueError(f"unknown generator {name!r}") from None


def compose(g: DPLMap, h: DPLMap) -> DPLMap:
    """``g o h``, i.e. ``x -> g(h(x))``, in canonical form."""
    hinv = h.inverse()
    xs = set(h._xs)
    xs.update(hinv(x) for x in g._xs)
    pts = [(x, g(h(x))) for x in sorted(xs)]
    return DPLMap(pts)


def invert(g: DPLMap) -> DPLMap:
    return g.inverse()


def commutator(g: DPLMap, h: DPLMap) -> DPLMap:
    """``[g, h] = g h g^-1 h^-1``."""
    return compose(compose(g, h), compose(g.inverse(), h.inverse()))


def conjugate(h: DPLMap, by: DPLMap) -> DPLMap:
    """``by^-1 h by``."""
    return compose(by.inverse(), compose(h, by))


def mil(g: DPLMap) -> Dyadic:
    """Minimal interval length of the coarsest dyadic subdivision whose
    subdivision points include every singular point of ``g``."""
    return Dyadic(1, level(g))


def level(g: DPLMap) -> int:
    """``-log2(mil(g))``.

    A point ``m / 2**k`` with ``m`` odd becomes a subdivision point only at
    depth ``k``, so the level is the largest exponent among singular points.
    """
    sing = g.singular_points
    if not sing:
        return 0
    return max(x.exponent for x in sing)


_TOKEN = re.compile(r"^([ABab])(?:\^\{?([+-]?\d+)\}?)?$")


@dataclass(frozen=True)
class GroupWord:
    """Reduced word in the generators A and B.

    ``letters`` holds ``(generator, power)`` pairs with nonzero powers and no
    two adjacent equal generators. ``reduced_from`` keeps the input letters
    when construction had to reduce them.
    """

    letters: tuple[tuple[str, int], ...]
    reduced_from: tuple[tuple[str, int], ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for gen, p in self.letters:
            if gen not in ("A", "B") or not isinstance(p, int) or p == 0:
                raise ValueError(f"invalid letter {(gen, p)!r}")
        for (g1, _), (g2, _) in zip(self.letters, self.letters[1:]):
            if g1 == g2:
                raise ValueError("word is not reduced; use GroupWord.from_letters")

    @classmethod
    def from_letters(cls, letters: Iterable[tuple[str, int]]) -> "GroupWord":
        raw = tuple((str(g).upper(), int(p)) for g, p in letters)
        out: list[list] = []
        for gen, p in raw:
            if out and out[-1][0] == gen:
                out[-1][1] += p
                if out[-1][1] == 0:
                    out.pop()
            elif p != 0:
                out.append([gen, p])
        red = tuple((g, p) for g, p in out)
        return cls(red, None if red == raw else raw)

    @classmethod
    def parse(cls, text: str) -> "GroupWord":
        """Parse ``"A B^-1 A^-2 B A^2"``; ``"1"`` or ``""`` is the empty word."""
        tokens = text.replace("*", " ").split()
        letters = []
        for tok in tokens:
            if tok in ("1", "id", "e"):
                continue
            m = _TOKEN.match(tok)
            if not m:
                raise ValueError(f"cannot parse word token {tok!r}")
            letters.append((m.group(1).upper(), int(m.group(2) or 1)))
        return cls.from_letters(letters)

    @property
    def was_reduced(self) -> bool:
        return self.reduced_from is not None

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple((g, -p) for g, p in reversed(self.letters)))

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord.from_letters(self.letters + other.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(g if p == 1 else f"{g}^{p}" for g, p in self.letters)


def evaluate_word(w: GroupWord | str) -> DPLMap:
    """Product of generator powers, left to right."""
    if isinstance(w, str):
        w = GroupWord.parse(w)
    gens = {"A": generator("A"), "B": generator("B")}
    out = identity()
    for gen, p in w.letters:
        out = compose(out, gens[gen] ** p)
    return out


def level_bound(w: GroupWord | str) -> int:
    """``sum(2|alpha_k| + 3|beta_k|)`` over the letters of ``w``."""
    if isinstance(w, str):
        w = GroupWord.parse(w)
    return sum((2 if g == "A" else 3) * abs(p) for g, p in w.letters)


NAMED_WORDS = {
    "A": "A",
    "B": "B",
    "C": "A B^-1",
    "D": "A^-1 B A",
    "E": "A^-2 B A^2",
}


def named_word(name: str) -> GroupWord:
    try:
        return GroupWord.parse(NAMED_WORDS[name.upper()])
    except KeyError:
        raise ValueError(f"unknown element name {name!r}") from None


def named_element(name: str) -> DPLMap:
    return evaluate_word(named_word(name))


def relation_words() -> tuple[tuple[GroupWord, GroupWord], tuple[GroupWord, GroupWord]]:
    """The pairs whose commutators are the defining relations of F."""
    c = named_word("C")
    return (c, named_word("D")), (c, named_word("E"))


def verify_relations() -> list[dict]:
    """Evaluate both defining relations exactly."""
    out = []
    for w1, w2 in relation_words():
        g = commutator(evaluate_word(w1), evaluate_word(w2))
        out.append(
            {
                "relation": f"[{w1}, {w2}]",
                "identity": g.is_identity(),
                "breakpoints": g.to_json(),
            }
        )
    return out


def random_word(
    rng: np.random.Generator, max_len: int = 8, max_power: int = 3
) -> GroupWord:
    """Random reduced word with between 1 and ``max_len`` letters."""
    n = int(rng.integers(1, max_len + 1))
    gen = "A" if rng.integers(2) == 0 else "B"
    letters = []
    for _ in range(n):
        p = int(rng.integers(1, max_power + 1)) * (1 if rng.integers(2) else -1)
        letters.append((gen, p))
        gen = "B" if gen == "A" else "A"
    return GroupWord(tuple(letters))
