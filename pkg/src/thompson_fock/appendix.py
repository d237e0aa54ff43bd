"""Reproduction harness for the reference matrices and case formulas of
``u_A`` and ``u_B``.

The reference matrices are shipped in ``data/appendix_uA.json`` and
``data/appendix_uB.json``. Each cell keeps its printed TeX token so every
comparison can be traced back to the print.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .dyadic import Dyadic, ExactScalar
from .haar import KoopmanColumns, ModeIndex, RotationM, koopman_window
from .thompson import generator

__all__ = [
    "parse_tex_entry",
    "load_reference",
    "ReferenceMatrix",
    "compare_reference",
    "case_image",
    "check_case_formulas",
]

_FRAC = re.compile(r"^(-?)\\frac\{(.+)\}\{(\d+)\}$")


def _parse_linear(expr: str) -> ExactScalar:
    # sums of terms like 2, -1, \sqrt{2}, 2\sqrt{2}
    expr = expr.replace(" ", "")
    if not expr:
        raise ValueError("empty expression")
    terms = re.findall(r"[+-]?[^+-]+", expr)
    if "".join(terms) != expr:
        raise ValueError(f"cannot parse {expr!r}")
    total = ExactScalar(0)
    for term in terms:
        sign = -1 if term.startswith("-") else 1
        body = term.lstrip("+-")
        if body.endswith("\\sqrt{2}"):
            coef = body[: -len("\\sqrt{2}")] or "1"
            total = total + ExactScalar(0, sign * int(coef))
        else:
            total = total + ExactScalar(sign * int(body))
    return total


def parse_tex_entry(tex: str) -> ExactScalar:
    """Value of a printed entry such as ``-\\frac{2+\\sqrt{2}}{8}``."""
    tex = tex.strip()
    m = _FRAC.match(tex)
    if m:
        sign, num, den = m.groups()
        d = int(den)
        if d & (d - 1):
            raise ValueError(f"non-dyadic denominator in {tex!r}")
        val = _parse_linear(num).shift(-(d.bit_length() - 1))
        return -val if sign else val
    return _parse_linear(tex)


@dataclass
class ReferenceMatrix:
    name: str
    generator: str
    rows: list[ModeIndex]
    cols: list[ModeIndex]
    tex: list[list[str]]
    values: list[list[ExactScalar]]
    meta: dict = field(default_factory=dict)

    def nonzero(self) -> list[tuple[int, int]]:
        return [
            (r, c)
            for r in range(len(self.rows))
            for c in range(len(self.cols))
            if not self.values[r][c].is_zero()
        ]


def load_reference(name: str) -> ReferenceMatrix:
    """Load ``"uA"`` or ``"uB"``."""
    if name not in ("uA", "uB"):
        raise ValueError("reference must be 'uA' or 'uB'")
    text = resources.files("thompson_fock").joinpath(f"data/appendix_{name}.json").read_text()
    d = json.loads(text)
    rows = [ModeIndex.parse(s) for s in d["rows"]]
    cols = [ModeIndex.parse(s) for s in d["cols"]]
    tex = d["entries"]
    if len(tex) != len(rows) or any(len(r) != len(cols) for r in tex):
        raise ValueError(f"shape mismatch in reference {name}")
    values = [[parse_tex_entry(t) for t in r] for r in tex]
    meta = {k: v for k, v in d.items() if k not in ("rows", "cols", "entries")}
    return ReferenceMatrix(d["name"], d["generator"], rows, cols, tex, values, meta)


def compare_reference(name: str, level: int | None = None) -> dict:
    """Regenerate a reference matrix and compare it entry by entry.

    Returns counts of matched nonzero printed entries, an itemized list of
    every disagreement (printed and regenerated values), and the exact
    column-orthonormality check of the regenerated window, which is the hard
    gate.
    """
    ref = load_reference(name)
    g = generator(ref.generator)
    M = RotationM.hadamard()
    cols = KoopmanColumns(g, M)
    need = max(m.n for m in ref.rows + ref.cols) + 1
    level = max(level or 0, need)
    disagreements = []
    matched = 0
    nonzero = 0
    for r, row_mode in enumerate(ref.rows):
        image = cols[row_mode]
        for c, col_mode in enumerate(ref.cols):
            printed = ref.values[r][c]
            ours = image.get(col_mode, ExactScalar(0))
            if not printed.is_zero():
                nonzero += 1
                if printed == ours:
                    matched += 1
            if printed != ours:
                disagreements.append(
                    {
                        "row": row_mode.label,
                        "col": col_mode.label,
                        "printed_tex": ref.tex[r][c],
                        "printed": str(printed),
                        "regenerated": str(ours),
                        "printed_float": printed.to_float(),
                        "regenerated_float": ours.to_float(),
                    }
                )
    window = koopman_window(g, M, level)
    ortho = window.check_orthonormal()
    return {
        "reference": name,
        "convention": ref.meta.get("convention"),
        "ordering_note": ref.meta.get("ordering_note"),
        "rows": [m.label for m in ref.rows],
        "cols": [m.label for m in ref.cols],
        "nonzero_printed": nonzero,
        "matched_nonzero": matched,
        "match_fraction": matched / nonzero if nonzero else 1.0,
        "disagreements": disagreements,
        "window_level": level,
        "orthonormal": ortho["orthonormal"],
        "orthonormal_columns": ortho["columns"],
    }


# Case formulas for levels beyond the printed matrices. Intervals are read
# half-open on the right so that exactly one case applies to each t.
_CASES = {
    "A": [
        ((0, 1), (1, 1), lambda n, t: (n + 1, t)),
        ((1, 1), (3, 2), lambda n, t: (n, t - (1 << (n - 4)))),
        ((3, 2), (1, 0), lambda n, t: (n - 1, t - (1 << (n - 3)))),
    ],
    "B": [
        ((0, 1), (1, 1), lambda n, t: (n, t)),
        ((1, 1), (3, 2), lambda n, t: (n + 1, t + (1 << (n - 3)))),
        ((3, 2), (7, 3), lambda n, t: (n, t - (1 << (n - 5)))),
        ((7, 3), (1, 0), lambda n, t: (n - 1, t - (1 << (n - 3)))),
    ],
}


def case_image(gen: str, mode: ModeIndex) -> tuple[int, ModeIndex]:
    """``(case number, predicted image)`` from the case formulas."""
    gen = gen.upper()
    if mode.family not in ("P", "Q") or mode.n < (4 if gen == "A" else 5):
        raise ValueError("case formulas cover n >= 4 (A) and n >= 5 (B)")
    pos = Dyadic(mode.t, mode.n - 2)
    for k, (lo, hi, rule) in enumerate(_CASES[gen]):
        if Dyadic(*lo) <= pos < Dyadic(*hi):
            n2, t2 = rule(mode.n, mode.t)
            return k, ModeIndex(mode.family, n2, t2)
    raise AssertionError("no case applies")


def check_case_formulas(gen: str, levels=range(5, 10), M: RotationM | None = None) -> dict:
    """Compare computed columns with the case formulas on every mode."""
    gen = gen.upper()
    M = M or RotationM.hadamard()
    cols = KoopmanColumns(generator(gen), M)
    one = ExactScalar(1)
    per_case: dict[tuple[str, int], int] = {}
    failures = []
    checked = 0
    for n in levels:
        for fam in ("P", "Q"):
            for t in range(1 << (n - 2)):
                mode = ModeIndex(fam, n, t)
                k, pred = case_image(gen, mode)
                col = cols[mode]
                ok = len(col) == 1 and col.get(pred) == one
                per_case[(fam, k)] = per_case.get((fam, k), 0) + 1
                checked += 1
                if not ok:
                    failures.append({"mode": mode.label, "case": k, "predicted": pred.label,
                                     "computed": {m.label: str(v) for m, v in col.items()}})
    return {
        "generator": gen,
        "levels": list(levels),
        "checked": checked,
        "cases_exercised": sorted(f"{fam}{k}" for fam, k in per_case),
        "failures": failures,
    }
