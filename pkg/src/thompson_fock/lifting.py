"""The obstruction pair ``Psi(M) = (alpha_M, beta_M)`` and its verdicts.

``alpha_M`` is the scalar commutator of the implementers of
``C = A B^-1`` and ``D = A^-1 B A``; ``beta_M`` uses ``C`` and
``E = A^-2 B A^2``. Two pipelines are available: direct Fock-space
implementers (``fock-direct``) and the commuting-generator formula applied to
principal logarithms (``one-param``).
"""
from __future__ import annotations

import cmath
import csv
import io
import warnings
from dataclasses import asdict, dataclass, field

from .fock import Implementer, commutator_phase
from .haar import RotationM
from .restricted import phase_b, unitary_log
from .thompson import named_element

__all__ = [
    "PhasePair",
    "psi",
    "psi_one_param",
    "psi_scan",
    "scan_csv",
    "Verdict",
    "lifting_report",
    "DEFAULT_MODES",
    "DEFAULT_LOG_LEVEL",
]

DEFAULT_MODES = 14
DEFAULT_LOG_LEVEL = 10
ROTATION_CONVENTION = "M(theta) = [[cos, sin], [-sin, cos]] acting on (f_{n,2t}, f_{n,2t+1})"


@dataclass
class PhasePair:
    alpha: complex
    beta: complex
    method: str
    window: int
    dispersion: float
    M: dict = field(default_factory=dict)
    cross_check: "PhasePair | None" = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name, z in (("alpha", self.alpha), ("beta", self.beta)):
            if abs(abs(z) - 1) > 1e-6:
                self.notes.append(f"|{name}| = {abs(z):.12g} deviates from 1")

    def as_tuple(self) -> tuple[complex, complex]:
        return self.alpha, self.beta

    def angles(self) -> tuple[float, float]:
        return cmath.phase(self.alpha), cmath.phase(self.beta)

    def to_dict(self) -> dict:
        d = {
            "alpha": [self.alpha.real, self.alpha.imag],
            "beta": [self.beta.real, self.beta.imag],
            "method": self.method,
            "window": self.window,
            "dispersion": self.dispersion,
            "M": self.M,
            "notes": list(self.notes),
        }
        if self.cross_check is not None:
            cc = self.cross_check
            d["cross_check"] = cc.to_dict()
            d["pipeline_difference"] = max(abs(self.alpha - cc.alpha), abs(self.beta - cc.beta))
        return d


def _relation_elements():
    return named_element("C"), named_element("D"), named_element("E")


def psi(M: RotationM, n_modes: int = DEFAULT_MODES, cross_check: bool = False,
        log_level: int = DEFAULT_LOG_LEVEL, tau_scalar: float = 1e-6) -> PhasePair:
    """``Psi(M)`` from direct implementers on ``n_modes`` modes."""
    C, D, E = _relation_elements()
    if not (C * D == D * C and C * E == E * C):
        raise AssertionError("relation words do not commute")
    UC = Implementer(C, M, n_modes)
    UD = Implementer(D, M, n_modes)
    UE = Implementer(E, M, n_modes)
    a = commutator_phase(C, D, M, n_modes, tau_scalar, implementers=(UC, UD))
    b = commutator_phase(C, E, M, n_modes, tau_scalar, implementers=(UC, UE))
    desc = M.describe()
    desc["convention"] = ROTATION_CONVENTION
    out = PhasePair(a.value, b.value, "fock-direct", n_modes, max(a.dispersion, b.dispersion), desc)
    if cross_check:
        out.cross_check = psi_one_param(M, log_level)
    return out


def psi_one_param(M: RotationM, level: int = DEFAULT_LOG_LEVEL) -> PhasePair:
    """``Psi(M)`` from ``phase_b`` of the principal logarithms at ``level``."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        X = {n: unitary_log(named_element(n), M, level, n) for n in "CDE"}
        a = phase_b(X["C"], X["D"])
        b = phase_b(X["C"], X["E"])
    desc = M.describe()
    desc["convention"] = ROTATION_CONVENTION
    out = PhasePair(a.value, b.value, "one-param", level, max(a.commutator_norm, b.commutator_norm), desc)
    out.notes += [str(w.message) for w in caught]
    out.notes.append(
        "residuals " + ", ".join(f"{n}={x.residual:.2e}" for n, x in X.items())
        + "; polar distances " + ", ".join(f"{n}={x.polar_distance:.3g}" for n, x in X.items())
    )
    return out


def psi_scan(angles, n_modes: int = DEFAULT_MODES, cross_check: bool = False,
             log_level: int = DEFAULT_LOG_LEVEL) -> list[tuple[float, PhasePair | None, str | None]]:
    """``(theta_deg, PhasePair or None, error or None)`` for each angle."""
    rows = []
    for th in angles:
        try:
            rows.append((float(th), psi(RotationM.rotation(th), n_modes, cross_check, log_level), None))
        except Exception as exc:  # recorded per angle; the scan continues
            rows.append((float(th), None, f"{type(exc).__name__}: {exc}"))
    return rows


def _g17(x: float) -> str:
    return format(x, ".17g")


def scan_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta_deg", "alpha_re", "alpha_im", "beta_re", "beta_im", "method", "window", "dispersion"])
    for th, pair, err in rows:
        if pair is None:
            w.writerow([_g17(th), "nan", "nan", "nan", "nan", f"error: {err}", "", ""])
            continue
        for p in [pair] + ([pair.cross_check] if pair.cross_check is not None else []):
            w.writerow([_g17(th), _g17(p.alpha.real), _g17(p.alpha.imag), _g17(p.beta.real),
                        _g17(p.beta.imag), p.method, p.window, _g17(p.dispersion)])
    return buf.getvalue()


@dataclass
class Verdict:
    verdict: str
    margins: dict
    pairs: list[dict]
    thresholds: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _angle_from_one(z: complex) -> float:
    return abs(cmath.phase(z))


def lifting_report(M: RotationM | None = None, n_modes: int = DEFAULT_MODES, *,
                   pairs: list[PhasePair] | None = None, tau_verdict: float = 1e-4,
                   margin: float = 0.1) -> Verdict:
    """Classify ``Psi(M)`` at truncation.

    ``liftable-at-truncation`` when both phases are within ``tau_verdict`` of
    1 on every window; ``obstructed`` when one phase is at least ``margin``
    (radians) from 1 on two windows; ``inconclusive`` otherwise. ``pairs``
    may be passed directly to skip the computation; by default the pair is
    evaluated at ``n_modes`` and ``n_modes + 2``.
    """
    if pairs is None:
        if M is None:
            raise ValueError("either M or pairs is required")
        pairs = [psi(M, n_modes), psi(M, n_modes + 2)]
    dist = [max(abs(p.alpha - 1), abs(p.beta - 1)) for p in pairs]
    ang = [(_angle_from_one(p.alpha), _angle_from_one(p.beta)) for p in pairs]
    if all(d <= tau_verdict for d in dist):
        v = "liftable-at-truncation"
    elif len(pairs) >= 2 and any(all(a[k] >= margin for a in ang) for k in range(2)):
        v = "obstructed"
    else:
        v = "inconclusive"
    stab = 0.0
    if len(pairs) >= 2:
        stab = max(max(abs(p.alpha - pairs[0].alpha), abs(p.beta - pairs[0].beta)) for p in pairs[1:])
    return Verdict(
        v,
        {"distance_from_one": dist, "angle_from_one": [list(a) for a in ang], "window_spread": stab},
        [p.to_dict() for p in pairs],
        {"tau_verdict": tau_verdict, "margin_rad": margin},
    )
