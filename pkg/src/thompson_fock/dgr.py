"""Free differential graded ring on the letters ``v`` (degree 0) and ``e``
(degree 1), with ``d(e) = v^2 - v``, ``d(v) = 0`` and the graded Leibniz rule.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DGRElement", "boundary", "boundary_split", "check_d_squared", "check_leibniz", "V", "E"]

_ALPHABET = ("v", "e")


@dataclass(frozen=True)
class DGRElement:
    """Integer combination of words over ``{v, e}``; zero terms are dropped."""

    terms: tuple[tuple[str, int], ...] = ()

    @classmethod
    def from_dict(cls, d: dict[str, int]) -> "DGRElement":
        for w in d:
            if any(ch not in _ALPHABET for ch in w):
                raise ValueError(f"word {w!r} uses letters outside {{v, e}}")
        return cls(tuple(sorted((w, c) for w, c in d.items() if c)))

    @classmethod
    def word(cls, w: str, coeff: int = 1) -> "DGRElement":
        return cls.from_dict({w: coeff})

    @classmethod
    def parse(cls, text: str) -> "DGRElement":
        """Parse sums like ``"vve - 2 v + e"`` (``v^3`` is accepted)."""
        text = text.replace(" ", "").replace("*", "")
        if text in ("", "0"):
            return cls()
        out: dict[str, int] = {}
        for tok in re.findall(r"[+-]?[^+-]+", text):
            m = re.fullmatch(r"([+-]?)(\d*)((?:[ve](?:\^\d+)?)*)", tok)
            if m is None:
                raise ValueError(f"cannot parse term {tok!r}")
            sign = -1 if m.group(1) == "-" else 1
            word = "".join(ch * int(p or 1) for ch, p in re.findall(r"([ve])(?:\^(\d+))?", m.group(3)))
            out[word] = out.get(word, 0) + sign * int(m.group(2) or 1)
        return cls.from_dict(out)

    def as_dict(self) -> dict[str, int]:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {w.count("e") for w, _ in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def __add__(self, other: "DGRElement") -> "DGRElement":
        d = self.as_dict()
        for w, c in other.terms:
            d[w] = d.get(w, 0) + c
        return DGRElement.from_dict(d)

    def __neg__(self) -> "DGRElement":
        return DGRElement(tuple((w, -c) for w, c in self.terms))

    def __sub__(self, other: "DGRElement") -> "DGRElement":
        return self + (-other)

    def __mul__(self, other) -> "DGRElement":
        if isinstance(other, int):
            return DGRElement.from_dict({w: c * other for w, c in self.terms})
        d: dict[str, int] = {}
        for (w1, c1), (w2, c2) in itertools.product(self.terms, other.terms):
            d[w1 + w2] = d.get(w1 + w2, 0) + c1 * c2
        return DGRElement.from_dict(d)

    __rmul__ = __mul__

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms, key=lambda t: (len(t[0]), t[0])):
            mag = "" if abs(c) == 1 else f"{abs(c)}"
            parts.append(("-" if c < 0 else "+") + mag + (w or "1"))
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s


V = DGRElement.word("v")
E = DGRElement.word("e")
_DE = {"v": {}, "e": {"vv": 1, "v": -1}}


def boundary(x: DGRElement) -> DGRElement:
    """Letter-by-letter Leibniz expansion of the differential."""
    out: dict[str, int] = {}
    for w, c in x.terms:
        sign = 1
        for i, ch in enumerate(w):
            for rep, k in _DE[ch].items():
                nw = w[:i] + rep + w[i + 1 :]
                out[nw] = out.get(nw, 0) + sign * k * c
            if ch == "e":
                sign = -sign
    return DGRElement.from_dict(out)


def boundary_split(x: DGRElement, rng: np.random.Generator | None = None) -> DGRElement:
    """Differential by recursive two-block splitting ``d(xy) = dx y + (-1)^{|x|} x dy``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    total = DGRElement()
    for w, c in x.terms:
        total = total + _split(w, rng) * c
    return total


def _split(w: str, rng: np.random.Generator) -> DGRElement:
    if len(w) == 0:
        return DGRElement()
    if len(w) == 1:
        return DGRElement.from_dict(dict(_DE[w]))
    k = int(rng.integers(1, len(w)))
    a, b = w[:k], w[k:]
    sign = -1 if a.count("e") % 2 else 1
    return _split(a, rng) * DGRElement.word(b) + DGRElement.word(a) * _split(b, rng) * sign


def _words(max_len: int):
    for n in range(max_len + 1):
        for t in itertools.product(_ALPHABET, repeat=n):
            yield "".join(t)


@dataclass
class DGRReport:
    max_len: int
    checked: int
    passed: bool
    witness: str | None = None
    degree_drop_ok: bool = True
    examples: dict = field(default_factory=dict)


def check_d_squared(max_len: int = 10) -> DGRReport:
    """``d(d(w)) = 0`` and ``deg d(w) = deg w - 1`` on every word up to ``max_len``."""
    checked = 0
    deg_ok = True
    for w in _words(max_len):
        x = DGRElement.word(w) if w else DGRElement()
        dx = boundary(x)
        if not dx.is_zero() and dx.degrees() != {w.count("e") - 1}:
            deg_ok = False
        ddx = boundary(dx)
        checked += 1
        if not ddx.is_zero():
            return DGRReport(max_len, checked, False, f"d^2({w}) = {ddx}", deg_ok)
    ex = {"d(e)": str(boundary(E)), "d(v)": str(boundary(V)), "d(ve)": str(boundary(DGRElement.word("ve")))}
    return DGRReport(max_len, checked, deg_ok, None, deg_ok, ex)


def check_leibniz(n_words: int = 200, max_len: int = 10, seed: int = 0) -> tuple[int, str | None]:
    """Compare the letter rule with random block splittings."""
    rng = np.random.default_rng(seed)
    for _ in range(n_words):
        n = int(rng.integers(1, max_len + 1))
        w = "".join(rng.choice(_ALPHABET, size=n))
        x = DGRElement.word(w)
        if boundary(x) != boundary_split(x, rng):
            return n_words, w
    return n_words, None
