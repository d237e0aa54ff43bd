"""Truncated Fermionic Fock space over the P/Q modes.

A basis label is a pair of finite mode sets ``(pSet, qSet)``; the state is
``a(p_1)...a(p_k) a(q_1)*...a(q_l)* Omega`` with both sets ascending. P
particles and Q holes are stored as bitmasks indexed by the family rank of
each mode, so every vector lives in one common space and no alignment is
needed between vectors built for different group elements.

``pi(a(f)) = b^dagger(Pf) + d(conj (1-P) f)``: creation on the P side and
hole annihilation on the Q side. In this module ``c(f)`` denotes ``pi(a(f))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .haar import KoopmanColumns, ModeIndex, RotationM
from .restricted import fredholm_index
from .thompson import DPLMap, level

__all__ = [
    "FockBasisLabel",
    "FockVector",
    "CarOperator",
    "apply_car",
    "car_matrices",
    "check_car_relations",
    "ModeSpace",
    "VacuumResult",
    "solve_vacuum",
    "Implementer",
    "implement",
    "CommutatorPhase",
    "commutator_phase",
]

_MAX_RANK = 64
_ZERO = 1e-15


def _rank_of(mode: ModeIndex) -> int:
    r = mode.rank
    if r >= _MAX_RANK:
        raise OverflowError(f"mode overflow: {mode.label} has family rank {r} >= {_MAX_RANK}")
    return r


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x).astype(np.int64)


def _bit(r: int) -> np.uint64:
    return np.uint64(1) << np.uint64(r)


# ----------------------------------------------------------------------
# labels and vectors
# ----------------------------------------------------------------------
@dataclass(frozen=True, order=True)
class FockBasisLabel:
    """Occupied P modes and Q holes, as sorted linear mode indices."""

    p: tuple[int, ...] = ()
    q: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for fam, s in (("P", self.p), ("Q", self.q)):
            if list(s) != sorted(set(s)):
                raise ValueError(f"{fam} set must be strictly increasing: {s}")
            for i in s:
                if ModeIndex.from_index(i).family != fam:
                    raise ValueError(f"index {i} is not a {fam} mode")
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "q", tuple(self.q))

    @classmethod
    def from_modes(cls, modes: Iterable[ModeIndex]) -> "FockBasisLabel":
        modes = list(modes)
        return cls(tuple(sorted(m.index for m in modes if m.family == "P")),
                   tuple(sorted(m.index for m in modes if m.family == "Q")))

    @classmethod
    def from_masks(cls, pm: int, qm: int) -> "FockBasisLabel":
        p = sorted(ModeIndex.from_rank("P", r).index for r in range(_MAX_RANK) if pm >> r & 1)
        q = sorted(ModeIndex.from_rank("Q", r).index for r in range(_MAX_RANK) if qm >> r & 1)
        return cls(tuple(p), tuple(q))

    @property
    def masks(self) -> tuple[int, int]:
        pm = sum(1 << _rank_of(ModeIndex.from_index(i)) for i in self.p)
        qm = sum(1 << _rank_of(ModeIndex.from_index(i)) for i in self.q)
        return pm, qm

    @property
    def charge(self) -> int:
        return len(self.p) - len(self.q)

    @property
    def modes(self) -> list[ModeIndex]:
        return [ModeIndex.from_index(i) for i in self.p + self.q]

    def __str__(self) -> str:
        ps = ",".join(ModeIndex.from_index(i).label for i in self.p)
        qs = ",".join(ModeIndex.from_index(i).label for i in self.q)
        return f"{{{ps}|{qs}}}"


VACUUM = FockBasisLabel()


def _as_array_vals(vals) -> np.ndarray:
    return np.asarray(vals, dtype=complex)


class FockVector:
    """Finitely supported vector ``label -> complex`` with no stored zeros."""

    __slots__ = ("pm", "qm", "val")

    def __init__(self, pm, qm, val, *, merged: bool = False) -> None:
        pm = np.asarray(pm, dtype=np.uint64).ravel()
        qm = np.asarray(qm, dtype=np.uint64).ravel()
        val = _as_array_vals(val).ravel()
        if not merged and len(val):
            order = np.lexsort((qm, pm))
            pm, qm, val = pm[order], qm[order], val[order]
            new = np.ones(len(val), dtype=bool)
            new[1:] = (pm[1:] != pm[:-1]) | (qm[1:] != qm[:-1])
            starts = np.flatnonzero(new)
            val = np.add.reduceat(val, starts)
            pm, qm = pm[starts], qm[starts]
        keep = np.abs(val) > _ZERO
        self.pm, self.qm, self.val = pm[keep], qm[keep], val[keep]

    # construction
    @classmethod
    def zero(cls) -> "FockVector":
        return cls([], [], [], merged=True)

    @classmethod
    def basis(cls, label: FockBasisLabel, coeff: complex = 1.0) -> "FockVector":
        pm, qm = label.masks
        return cls([pm], [qm], [coeff], merged=True)

    @classmethod
    def vacuum(cls) -> "FockVector":
        return cls.basis(VACUUM)

    @classmethod
    def from_dict(cls, d: Mapping[FockBasisLabel, complex]) -> "FockVector":
        if not d:
            return cls.zero()
        masks = [lab.masks for lab in d]
        return cls([m[0] for m in masks], [m[1] for m in masks], [complex(v) for v in d.values()])

    # access
    def __len__(self) -> int:
        return len(self.val)

    def labels(self) -> list[FockBasisLabel]:
        return [FockBasisLabel.from_masks(int(a), int(b)) for a, b in zip(self.pm, self.qm)]

    def items(self) -> list[tuple[FockBasisLabel, complex]]:
        return list(zip(self.labels(), self.val.tolist()))

    def to_dict(self) -> dict[FockBasisLabel, complex]:
        return dict(self.items())

    def coefficient(self, label: FockBasisLabel) -> complex:
        pm, qm = label.masks
        hit = np.flatnonzero((self.pm == np.uint64(pm)) & (self.qm == np.uint64(qm)))
        return complex(self.val[hit[0]]) if len(hit) else 0j

    def charges(self) -> np.ndarray:
        return _popcount(self.pm) - _popcount(self.qm)

    # algebra
    def __add__(self, other: "FockVector") -> "FockVector":
        return FockVector(np.concatenate([self.pm, other.pm]), np.concatenate([self.qm, other.qm]),
                          np.concatenate([self.val, other.val]))

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "FockVector":
        return FockVector(self.pm, self.qm, self.val * c, merged=True)

    def __mul__(self, c: complex) -> "FockVector":
        return self.scale(c)

    __rmul__ = __mul__

    def inner(self, other: "FockVector") -> complex:
        """``<self, other>``, linear in ``self``."""
        if not len(self) or not len(other):
            return 0j
        a = np.rec.fromarrays([self.pm, self.qm])
        b = np.rec.fromarrays([other.pm, other.qm])
        common, ia, ib = np.intersect1d(a, b, return_indices=True)
        return complex(np.sum(self.val[ia] * np.conj(other.val[ib])))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.val) ** 2)))

    def normalized(self) -> "FockVector":
        return self.scale(1.0 / self.norm())

    def max_modes(self) -> int:
        if not len(self):
            return 0
        return int(np.max(_popcount(self.pm) + _popcount(self.qm)))

    def to_json(self) -> list[dict]:
        return [
            {"p": list(lab.p), "q": list(lab.q), "re": float(v.real), "im": float(v.imag)}
            for lab, v in self.items()
        ]

    @classmethod
    def from_json(cls, data: list[dict]) -> "FockVector":
        return cls.from_dict({FockBasisLabel(tuple(d["p"]), tuple(d["q"])): complex(d["re"], d["im"]) for d in data})

    def __repr__(self) -> str:
        shown = ", ".join(f"{lab}: {v:.6g}" for lab, v in self.items()[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"FockVector({shown}{more})"


# ----------------------------------------------------------------------
# elementary operators
# ----------------------------------------------------------------------
def _elementary(kind: str, r: int, pm: np.ndarray, qm: np.ndarray):
    """Action of one Jordan-Wigner operator on masks.

    ``kind`` is ``"b+"``/``"b-"`` (P particle create/annihilate) or
    ``"d+"``/``"d-"`` (Q hole create/annihilate). Returns the mask of states
    it does not kill, the new masks and the signs.
    """
    bit = _bit(r)
    below = bit - np.uint64(1)
    if kind[0] == "b":
        occ = (pm & bit) != 0
        sign_par = _popcount(pm & below)
    else:
        occ = (qm & bit) != 0
        sign_par = _popcount(pm) + _popcount(qm & below)
    ok = ~occ if kind[1] == "+" else occ
    sign = np.where(sign_par % 2 == 0, 1.0, -1.0)
    pm2, qm2 = pm.copy(), qm.copy()
    if kind[0] == "b":
        pm2 = pm2 ^ bit
    else:
        qm2 = qm2 ^ bit
    return ok, pm2, qm2, sign


def _terms(f: Mapping[ModeIndex, object], dagger: bool) -> list[tuple[str, int, complex]]:
    """``c(f)`` (``dagger=False``) or ``c(f)^*`` as elementary terms."""
    out = []
    for mode, coeff in f.items():
        c = complex(coeff)
        r = _rank_of(mode)
        if mode.family == "P":
            out.append(("b-", r, c.conjugate()) if dagger else ("b+", r, c))
        else:
            out.append(("d+", r, c.conjugate()) if dagger else ("d-", r, c))
    return out


def _apply_terms(terms, v: FockVector) -> FockVector:
    if not len(v) or not terms:
        return FockVector.zero()
    pms, qms, vals = [], [], []
    for kind, r, c in terms:
        ok, pm2, qm2, sign = _elementary(kind, r, v.pm, v.qm)
        pms.append(pm2[ok])
        qms.append(qm2[ok])
        vals.append(v.val[ok] * sign[ok] * c)
    return FockVector(np.concatenate(pms), np.concatenate(qms), np.concatenate(vals))


@dataclass(frozen=True)
class CarOperator:
    """``pi(a(f))`` (``symbol="create"``) or its adjoint (``"annihilate"``).

    ``f`` is a mode expansion ``{ModeIndex: coefficient}``; use
    :meth:`from_function` for a step function.
    """

    symbol: str
    f: Mapping[ModeIndex, object]
    truncation: int | None = None

    def __post_init__(self) -> None:
        if self.symbol not in ("create", "annihilate"):
            raise ValueError("symbol must be 'create' or 'annihilate'")

    @classmethod
    def create(cls, f, truncation=None) -> "CarOperator":
        return cls("create", _as_expansion(f), truncation)

    @classmethod
    def annihilate(cls, f, truncation=None) -> "CarOperator":
        return cls("annihilate", _as_expansion(f), truncation)

    @classmethod
    def from_function(cls, symbol: str, f, M: RotationM, truncation=None) -> "CarOperator":
        from .haar import expansion

        return cls(symbol, expansion(f, M), truncation)

    @property
    def adjoint(self) -> "CarOperator":
        return CarOperator("annihilate" if self.symbol == "create" else "create", self.f, self.truncation)

    def norm_bound(self) -> float:
        return math.sqrt(sum(abs(complex(c)) ** 2 for c in self.f.values()))

    def __call__(self, v: FockVector) -> FockVector:
        return apply_car(self, v)


def _as_expansion(f) -> dict[ModeIndex, object]:
    if isinstance(f, ModeIndex):
        return {f: 1.0}
    return dict(f)


def apply_car(op: CarOperator, v: FockVector) -> FockVector:
    """Signed wedge/contraction action of ``pi(a(f))`` or ``pi(a(f))^*``."""
    if op.truncation is not None:
        bad = [m.label for m in op.f if m.index >= op.truncation]
        if bad:
            raise OverflowError(f"mode overflow: {bad} outside truncation {op.truncation}")
    return _apply_terms(_terms(op.f, op.symbol == "annihilate"), v)


def car_matrices(modes: Iterable[ModeIndex]) -> tuple[list[ModeIndex], dict[ModeIndex, sp.csr_matrix]]:
    """Integer matrices of ``pi(a(b))`` for each mode on the full space.

    The space is spanned by all labels over ``modes``; states are ordered by
    the integer ``sum 2^position`` with positions in the fixed order P modes
    then Q modes (each ascending). Adjoints are transposes (real matrices).
    """
    modes = sorted(modes)
    P = [m for m in modes if m.family == "P"]
    Q = [m for m in modes if m.family == "Q"]
    nP, nQ = len(P), len(Q)
    dim = 1 << (nP + nQ)
    states = np.arange(dim, dtype=np.uint64)
    # local masks -> global masks
    pm = np.zeros(dim, dtype=np.uint64)
    qm = np.zeros(dim, dtype=np.uint64)
    for k, m in enumerate(P):
        pm |= ((states >> np.uint64(k)) & np.uint64(1)) << np.uint64(_rank_of(m))
    for k, m in enumerate(Q):
        qm |= ((states >> np.uint64(nP + k)) & np.uint64(1)) << np.uint64(_rank_of(m))
    out = {}
    for m in modes:
        kind = "b+" if m.family == "P" else "d-"
        ok, pm2, qm2, sign = _elementary(kind, _rank_of(m), pm, qm)
        loc = (states ^ (np.uint64(1) << np.uint64(P.index(m) if m.family == "P" else nP + Q.index(m))))
        rows = loc[ok].astype(np.int64)
        cols = states[ok].astype(np.int64)
        out[m] = sp.csr_matrix((sign[ok].astype(np.int64), (rows, cols)), shape=(dim, dim))
    return modes, out


def check_car_relations(n_modes: int = 10) -> dict:
    """Exact CAR relations and vacuum uniqueness on the lowest ``n_modes`` modes.

    All matrices are integer, so every matrix element is compared exactly.
    """
    modes, A = car_matrices(ModeIndex.from_index(i) for i in range(n_modes))
    dim = 1 << len(modes)
    ident = sp.identity(dim, dtype=np.int64, format="csr")
    failures = []
    pairs = 0
    for i, mi in enumerate(modes):
        for mj in modes[i:]:
            pairs += 1
            anti = A[mi] @ A[mj] + A[mj] @ A[mi]
            mixed = A[mi] @ A[mj].T + A[mj].T @ A[mi] - (ident if mi == mj else 0 * ident)
            anti.eliminate_zeros()
            mixed = sp.csr_matrix(mixed)
            mixed.eliminate_zeros()
            if anti.nnz:
                failures.append(f"{{a({mi.label}), a({mj.label})}} != 0")
            if mixed.nnz:
                failures.append(f"{{a({mi.label}), a({mj.label})*}} != delta")
    # vacuum annihilators: a(p)* for P modes and a(q) for Q modes
    kill = [A[m].T if m.family == "P" else A[m] for m in modes]
    number = sum((K.T @ K for K in kill), sp.csr_matrix((dim, dim), dtype=np.int64)).tocsr()
    diag = number.diagonal()
    off = number - sp.diags(diag)
    off = sp.csr_matrix(off)
    off.eliminate_zeros()
    kernel = np.flatnonzero(diag == 0)
    return {
        "modes": [m.label for m in modes],
        "dim": dim,
        "pairs_checked": pairs,
        "car_exact": not failures,
        "failures": failures,
        "joint_kernel_dim": int(len(kernel)) if off.nnz == 0 else None,
        "kernel_is_vacuum": off.nnz == 0 and list(kernel) == [0],
    }


# ----------------------------------------------------------------------
# mode spaces and the vacuum
# ----------------------------------------------------------------------
@dataclass
class ModeSpace:
    """Mode budget for one group element: the core modes plus padding.

    The core is the union of the non-simple modes of ``g`` and ``g^-1``; all
    other modes are fixed by ``u_g`` up to relabeling within a family, so the
    vacuum vector only involves core modes.
    """

    g: DPLMap
    M: RotationM
    n_modes: int
    core: list[ModeIndex]
    modes: list[ModeIndex]
    active: list[ModeIndex]
    active_inv: list[ModeIndex]

    @classmethod
    def build(cls, g: DPLMap, M: RotationM, n_modes: int) -> "ModeSpace":
        act = KoopmanColumns(g, M).active_modes()
        act_inv = KoopmanColumns(g.inverse(), M).active_modes()
        core = sorted(set(act) | set(act_inv))
        if len(core) > n_modes:
            raise ValueError(
                f"mode budget {n_modes} smaller than the {len(core)} core modes of g: "
                f"{[m.label for m in core]}"
            )
        modes = list(core)
        i = 0
        while len(modes) < n_modes:
            m = ModeIndex.from_index(i)
            if m not in core:
                modes.append(m)
            i += 1
        modes.sort()
        for m in modes:
            _rank_of(m)
        return cls(g, M, n_modes, core, modes, act, act_inv)

    @property
    def interior_level(self) -> int:
        return max(m.n for m in self.modes)


@dataclass
class VacuumResult:
    vector: FockVector
    sector: int
    kernel_dim: int
    sector_dim: int
    gap: float
    space: ModeSpace
    constraints: int

    def summary(self) -> dict:
        return {
            "sector": self.sector,
            "kernel_dim": self.kernel_dim,
            "sector_dim": self.sector_dim,
            "spectral_gap": self.gap,
            "constraints": self.constraints,
            "core_modes": [m.label for m in self.space.core],
            "modes": [m.label for m in self.space.modes],
            "overlap_with_vacuum": _cjson(self.vector.coefficient(VACUUM)),
            "terms": len(self.vector),
        }


def _cjson(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _sector_basis(core: list[ModeIndex], charge: int) -> tuple[np.ndarray, np.ndarray]:
    pr = [_rank_of(m) for m in core if m.family == "P"]
    qr = [_rank_of(m) for m in core if m.family == "Q"]
    pms, qms = [], []
    for k in range(len(pr) + 1):
        l = k - charge
        if l < 0 or l > len(qr):
            continue
        for ps in itertools.combinations(pr, k):
            a = sum(1 << r for r in ps)
            for qs in itertools.combinations(qr, l):
                pms.append(a)
                qms.append(sum(1 << r for r in qs))
    return np.array(pms, dtype=np.uint64), np.array(qms, dtype=np.uint64)


def _phase_fix(v: FockVector) -> FockVector:
    mag = np.abs(v.val)
    k = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-12))[0])
    z = v.val[k]
    return v.scale(abs(z) / z)


def solve_vacuum(g: DPLMap, M: RotationM, n_modes: int = 14, sector: int | None = None) -> VacuumResult:
    """Unit vector spanning the joint kernel of the rotated annihilators.

    Conditions ``c(u m)^* Omega_g = 0`` for P modes ``m`` and ``c(u m) Omega_g
    = 0`` for Q modes ``m`` are imposed for every non-simple ``m``; for a
    simple mode they only state that its image is unoccupied. The kernel is
    computed in the charge sector ``-i(u_g)`` of the core space.

    Raises
    ------
    ValueError
        If the kernel dimension is not 1.
    """
    space = ModeSpace.build(g, M, n_modes)
    if sector is None:
        sector = -fredholm_index(g, M, max(level(g), level(g.inverse())) + 2).index
    core = space.core
    if not core:
        return VacuumResult(FockVector.vacuum(), 0, 1, 1, float("inf"), space, 0)
    pm, qm = _sector_basis(core, sector)
    dim = len(pm)
    if dim == 0:
        raise ValueError(f"charge sector {sector} is empty on {len(core)} core modes")
    cols = KoopmanColumns(g, M)
    act_inv = set(space.active_inv)
    ops = []
    for m in space.active:
        ops.append(_terms(cols[m], dagger=(m.family == "P")))
    for m in core:
        if m not in act_inv:
            ops.append(_terms({m: 1.0}, dagger=(m.family == "P")))
    # stack the constraints as one sparse matrix from the sector basis
    rows_p, rows_q, cidx, data, blk = [], [], [], [], []
    for b, terms in enumerate(ops):
        for kind, r, c in terms:
            ok, pm2, qm2, sign = _elementary(kind, r, pm, qm)
            idx = np.flatnonzero(ok)
            rows_p.append(pm2[idx])
            rows_q.append(qm2[idx])
            cidx.append(idx)
            data.append(sign[idx] * c)
            blk.append(np.full(len(idx), b, dtype=np.uint64))
    rp = np.concatenate(rows_p)
    rq = np.concatenate(rows_q)
    rb = np.concatenate(blk)
    keys = np.rec.fromarrays([rb, rp, rq])
    _, row = np.unique(keys, return_inverse=True)
    C = sp.csr_matrix((np.concatenate(data), (row.ravel(), np.concatenate(cidx))),
                      shape=(int(row.max()) + 1, dim))
    Nmat = (C.conj().T @ C).tocsc()
    if not np.iscomplexobj(Nmat.data) or not np.any(Nmat.data.imag):
        Nmat = Nmat.real
    if dim <= 400:
        w, V = np.linalg.eigh(Nmat.toarray())
    else:
        # the spectrum is integral, so shift-invert at -1/2 isolates the
        # kernel together with the first excited level
        w, V = spla.eigsh(Nmat, k=2, sigma=-0.5, which="LM")
        order = np.argsort(w)
        w, V = w[order], V[:, order]
    kdim = int(np.sum(w < 0.5))
    if kdim != 1:
        raise ValueError(
            f"vacuum kernel dimension {kdim} != 1 in sector {sector} "
            f"(sector dim {dim}, lowest eigenvalues {w[:4].tolist()})"
        )
    vec = FockVector(pm, qm, V[:, 0])
    vec = _phase_fix(vec.normalized())
    gap = float(w[1]) if len(w) > 1 else float("inf")
    return VacuumResult(vec, sector, kdim, dim, gap, space, len(ops))


# ----------------------------------------------------------------------
# implementers
# ----------------------------------------------------------------------
class Implementer:
    """``U_g`` on basis labels, built from ``Omega_g`` by rotated CAR strings.

    ``U_g |p_1..p_k; q_1..q_l> = c(u p_1)...c(u p_k) c(u q_1)^*...c(u q_l)^* Omega_g``.
    Products are evaluated right to left with memoized suffixes.
    """

    def __init__(self, g: DPLMap, M: RotationM, n_modes: int = 14, phase: complex = 1.0) -> None:
        self.g = g
        self.M = M
        self.n_modes = n_modes
        self.vacuum = solve_vacuum(g, M, n_modes)
        self.space = self.vacuum.space
        self.phase = complex(phase)
        self._cols = KoopmanColumns(g, M)
        self._memo: dict[tuple[int, ...], FockVector] = {(): self.vacuum.vector}

    def rephase(self, c: complex) -> "Implementer":
        """Same operator times the unit scalar ``c`` (shares the cache)."""
        other = object.__new__(Implementer)
        other.__dict__.update(self.__dict__)
        other.phase = self.phase * complex(c)
        return other

    def _image_terms(self, mode: ModeIndex):
        return _terms(self._cols[mode], dagger=(mode.family == "Q"))

    def _chain(self, modes: tuple[int, ...]) -> FockVector:
        hit = self._memo.get(modes)
        if hit is not None:
            return hit
        head = ModeIndex.from_index(modes[0])
        tail = self._chain(modes[1:])
        out = _apply_terms(self._image_terms(head), tail)
        self._memo[modes] = out
        return out

    def on_label(self, label: FockBasisLabel) -> FockVector:
        return self._chain(label.p + label.q).scale(self.phase)

    def apply(self, v: FockVector) -> FockVector:
        parts = [self.on_label(lab).scale(c) for lab, c in v.items()]
        if not parts:
            return FockVector.zero()
        return FockVector(np.concatenate([p.pm for p in parts]), np.concatenate([p.qm for p in parts]),
                          np.concatenate([p.val for p in parts]))

    def interior_labels(self, max_modes: int = 2) -> list[FockBasisLabel]:
        out = []
        for k in range(max_modes + 1):
            for combo in itertools.combinations(self.space.modes, k):
                out.append(FockBasisLabel.from_modes(combo))
        return out

    def unitarity_defect(self, labels: Iterable[FockBasisLabel] | None = None) -> float:
        labels = list(labels) if labels is not None else self.interior_labels()
        imgs = [self.on_label(l) for l in labels]
        worst = 0.0
        for i, a in enumerate(imgs):
            for j in range(i, len(imgs)):
                target = 1.0 if i == j else 0.0
                worst = max(worst, abs(a.inner(imgs[j]) - target))
        return worst

    def intertwining_residual(self, f: Mapping[ModeIndex, object] | ModeIndex, v: FockVector,
                              symbol: str = "create") -> float:
        """``||U pi(a(f)) v - pi(a(u f)) U v||`` (or the adjoint version)."""
        f = _as_expansion(f)
        uf: dict[ModeIndex, complex] = {}
        for m, c in f.items():
            for m2, c2 in self._cols[m].items():
                uf[m2] = uf.get(m2, 0) + complex(c) * complex(c2)
        op = CarOperator(symbol, f)
        uop = CarOperator(symbol, uf)
        lhs = self.apply(apply_car(op, v))
        rhs = apply_car(uop, self.apply(v))
        return (lhs - rhs).norm()


def implement(g: DPLMap, M: RotationM, n_modes: int = 14) -> Implementer:
    return Implementer(g, M, n_modes)


@dataclass
class CommutatorPhase:
    value: complex
    dispersion: float
    labels: int
    n_modes: int
    ratios: list[complex] = field(default_factory=list)

    def __complex__(self) -> complex:
        return self.value


def commutator_phase(g1: DPLMap, g2: DPLMap, M: RotationM, n_modes: int = 14,
                     tau_scalar: float = 1e-6, implementers: tuple[Implementer, Implementer] | None = None,
                     max_label_modes: int = 1) -> CommutatorPhase:
    """Scalar ``lambda`` with ``U_1 U_2 U_1^-1 U_2^-1 = lambda`` on interior labels.

    Evaluated as ``U_1 U_2 v = lambda U_2 U_1 v`` for the vacuum and every
    label with at most ``max_label_modes`` modes from the mode budget.

    Raises
    ------
    ValueError
        If ``g1`` and ``g2`` do not commute exactly, or the ratios disperse by
        more than ``tau_scalar``.
    """
    if not (g1 * g2 == g2 * g1):
        raise ValueError("elements do not commute; commutator is not a scalar")
    U1, U2 = implementers if implementers is not None else (Implementer(g1, M, n_modes), Implementer(g2, M, n_modes))
    modes = sorted(set(U1.space.modes) | set(U2.space.modes))
    labels = [VACUUM]
    for k in range(1, max_label_modes + 1):
        labels += [FockBasisLabel.from_modes(c) for c in itertools.combinations(modes, k)]
    ratios = []
    for lab in labels:
        a = U1.apply(U2.on_label(lab))
        b = U2.apply(U1.on_label(lab))
        ratios.append(b.inner(a) / b.inner(b))
    lam = ratios[0]
    disp = max(abs(r - lam) for r in ratios)
    if disp > tau_scalar:
        raise ValueError(f"commutator not scalar: dispersion {disp:.3e} > {tau_scalar:g}")
    return CommutatorPhase(complex(lam), float(disp), len(labels), n_modes, ratios)
