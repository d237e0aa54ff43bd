"""Block analysis relative to the projection ``P`` onto the P-modes.

Covers Hilbert-Schmidt norms of ``[u_g, P]``, the Fredholm index of
``P u_g P`` (exact rank over Z[sqrt2] on the exact path), principal
logarithms of unitarized windows and the commuting-case phase ``b``.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import connected_components

from .dyadic import ExactScalar, get_tau, isclose
from .haar import (
    KoopmanColumns,
    ModeIndex,
    RotationM,
    SparseOperator,
    cell_window,
    koopman_window,
    to_pq_basis,
)
from .thompson import DPLMap, level

__all__ = [
    "BlockDecomposition",
    "block_decomposition",
    "HSNorm",
    "hs_norm_commutator",
    "segal_distance",
    "exact_rank",
    "IndexResult",
    "fredholm_index",
    "GeneratorLog",
    "BranchError",
    "unitary_log",
    "PhaseB",
    "phase_b",
    "log_commutator_norm",
]


# ----------------------------------------------------------------------
# blocks
# ----------------------------------------------------------------------
@dataclass
class BlockDecomposition:
    """The four blocks of a window relative to ``PH + (1-P)H``.

    ``X12 = P X (1-P)`` has P rows and Q columns, and so on.
    """

    X11: SparseOperator
    X12: SparseOperator
    X21: SparseOperator
    X22: SparseOperator
    parent: SparseOperator

    def reassemble(self) -> dict[int, dict[int, object]]:
        cols: dict[int, dict[int, object]] = {}
        for blk in (self.X11, self.X12, self.X21, self.X22):
            for j, c in blk.columns.items():
                cols.setdefault(j, {}).update(c)
        return cols


def block_decomposition(op: SparseOperator) -> BlockDecomposition:
    fam = {i: ModeIndex.from_index(i).family for i in set(op.rows) | set(op.cols)}
    P_rows = [i for i in op.rows if fam[i] == "P"]
    Q_rows = [i for i in op.rows if fam[i] == "Q"]
    P_cols = [j for j in op.cols if fam[j] == "P"]
    Q_cols = [j for j in op.cols if fam[j] == "Q"]
    return BlockDecomposition(
        op.restrict(P_rows, P_cols),
        op.restrict(P_rows, Q_cols),
        op.restrict(Q_rows, P_cols),
        op.restrict(Q_rows, Q_cols),
        op,
    )


def _require_window(g: DPLMap, M: RotationM, N: int) -> tuple[SparseOperator, list[ModeIndex]]:
    if N < level(g) + 2:
        raise ValueError(f"window level {N} too small; need >= level(g) + 2 = {level(g) + 2}")
    active = KoopmanColumns(g, M).active_modes()
    window = koopman_window(g, M, N)
    missing = [m.label for m in active if m.index not in window.complete]
    if missing:
        raise ValueError(
            f"window level {N} does not contain the complete columns of active modes {missing}"
        )
    return window, active


# ----------------------------------------------------------------------
# Hilbert-Schmidt norm of [u, P]
# ----------------------------------------------------------------------
@dataclass
class HSNorm:
    value: float
    exact_sq: ExactScalar | None
    level: int
    contributions: dict[str, float] = field(default_factory=dict)

    def __iter__(self):
        yield self.value
        yield self.exact_sq


def hs_norm_commutator(g: DPLMap, M: RotationM, N: int) -> HSNorm:
    """``||[u_g, P]||_2`` from the columns of the level-``N`` window.

    ``||[u,P]||_2^2 = sum_p ||(1-P) u p||^2 + sum_q ||P u q||^2``; only the
    finitely many non-simple columns contribute, and all of them must be
    complete in the window.
    """
    window, _ = _require_window(g, M, N)
    exact = window.exact
    total = ExactScalar(0) if exact else 0.0
    contrib = {}
    for j in sorted(window.complete):
        fam = ModeIndex.from_index(j).family
        s = ExactScalar(0) if exact else 0.0
        for i, v in window.columns.get(j, {}).items():
            if ModeIndex.from_index(i).family != fam:
                s = s + (v * v if exact else abs(v) ** 2)
        if (exact and not s.is_zero()) or (not exact and s != 0.0):
            contrib[ModeIndex.from_index(j).label] = float(s)
            total = total + s
    value = math.sqrt(float(total))
    return HSNorm(value, total if exact else None, N, contrib)


def segal_distance(g: DPLMap, M: RotationM, N: int) -> HSNorm:
    """``||P - u_g^* P u_g||_2`` computed with the columns of ``u_{g^-1}``."""
    window, active = _require_window(g, M, N)
    exact = M.is_exact
    fwd = KoopmanColumns(g, M)
    back = KoopmanColumns(g.inverse(), M)
    total = ExactScalar(0) if exact else 0.0
    contrib = {}
    for b in active:
        vec: dict[ModeIndex, object] = {}
        if b.family == "P":
            vec[b] = ExactScalar(1) if exact else 1.0
        for m, c in fwd[b].items():
            if m.family != "P":
                continue
            for m2, c2 in back[m].items():
                vec[m2] = vec.get(m2, 0) - c * c2
        s = ExactScalar(0) if exact else 0.0
        for v in vec.values():
            s = s + (v * v if exact else abs(v) ** 2)
        if float(s):
            contrib[b.label] = float(s)
        total = total + s
    return HSNorm(math.sqrt(float(total)), total if exact else None, N, contrib)


# ----------------------------------------------------------------------
# Fredholm index
# ----------------------------------------------------------------------
def exact_rank(rows: list[list[ExactScalar]]) -> int:
    """Rank over Q(sqrt2) by fraction-free elimination (ring operations only)."""
    mat = [list(r) for r in rows if any(not x.is_zero() for x in r)]
    if not mat:
        return 0
    ncol = len(mat[0])
    rank = 0
    for c in range(ncol):
        piv = next((r for r in range(rank, len(mat)) if not mat[r][c].is_zero()), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        p = mat[rank]
        for r in range(rank + 1, len(mat)):
            f = mat[r][c]
            if f.is_zero():
                continue
            pc = p[c]
            mat[r] = [pc * mat[r][k] - f * p[k] for k in range(ncol)]
        rank += 1
        if rank == len(mat):
            break
    return rank


def _float_rank(a: np.ndarray, tol: float) -> tuple[int, float]:
    if a.size == 0:
        return 0, float("inf")
    s = np.linalg.svd(a, compute_uv=False)
    r = int(np.sum(s > tol))
    kept = s[r - 1] if r else float("inf")
    dropped = s[r] if r < len(s) else 0.0
    return r, float(kept / dropped) if dropped else float("inf")


def _p_nullity(g: DPLMap, M: RotationM, N: int) -> dict:
    window = koopman_window(g, M, N)
    cols = [j for j in sorted(window.complete) if ModeIndex.from_index(j).family == "P"]
    pcols = {j: {i: v for i, v in window.columns.get(j, {}).items()
                 if ModeIndex.from_index(i).family == "P"} for j in cols}
    # unit columns on rows touched by no other column are independent
    row_count: dict[int, int] = {}
    for c in pcols.values():
        for i in c:
            row_count[i] = row_count.get(i, 0) + 1
    core_cols = []
    isolated = 0
    for j, c in pcols.items():
        if len(c) == 1 and row_count[next(iter(c))] == 1:
            isolated += 1
        else:
            core_cols.append(j)
    core_rows = sorted({i for j in core_cols for i in pcols[j]})
    gap = None
    if window.exact:
        mat = [[pcols[j].get(i, ExactScalar(0)) for j in core_cols] for i in core_rows]
        r = exact_rank(mat) if core_cols else 0
    else:
        a = np.array([[complex(pcols[j].get(i, 0)) for j in core_cols] for i in core_rows])
        r, gap = _float_rank(a.reshape(len(core_rows), len(core_cols)), 1e3 * get_tau())
    return {
        "certified_columns": len(cols),
        "core_columns": len(core_cols),
        "nullity": len(core_cols) - r,
        "rank_gap": gap,
    }


@dataclass
class IndexResult:
    index: int
    levels: tuple[int, int]
    kernel: tuple[int, int]
    cokernel: tuple[int, int]
    exact: bool
    diagnostics: dict

    def __int__(self) -> int:
        return self.index


def fredholm_index(g: DPLMap, M: RotationM, N: int) -> IndexResult:
    """``dim ker - dim coker`` of ``P u_g P`` on certified columns.

    The cokernel is the kernel of ``P u_g^* P = P u_{g^-1} P``. Both are
    evaluated at levels ``N`` and ``N + 2``; disagreement is an error.
    """
    ginv = g.inverse()
    need = max(level(g), level(ginv)) + 2
    if N < need:
        raise ValueError(f"window level {N} too small; need >= {need}")
    res = []
    for L in (N, N + 2):
        k = _p_nullity(g, M, L)
        c = _p_nullity(ginv, M, L)
        res.append((k, c))
    idx = [k["nullity"] - c["nullity"] for k, c in res]
    diag = {"level_N": {"ker": res[0][0], "coker": res[0][1]},
            "level_N+2": {"ker": res[1][0], "coker": res[1][1]}}
    if idx[0] != idx[1]:
        raise ValueError(f"index not stabilized: {idx[0]} at N={N}, {idx[1]} at N={N + 2}; {diag}")
    return IndexResult(
        idx[0],
        (N, N + 2),
        (res[0][0]["nullity"], res[1][0]["nullity"]),
        (res[0][1]["nullity"], res[1][1]["nullity"]),
        M.is_exact,
        diag,
    )


# ----------------------------------------------------------------------
# logarithms
# ----------------------------------------------------------------------
class BranchError(ValueError):
    """An eigenvalue of the unitarized window sits at -1 within tolerance."""


@dataclass
class GeneratorLog:
    """Self-adjoint ``X`` with ``e^{iX}`` equal to the unitarized window.

    The logarithm is stored in the cell basis as real antisymmetric blocks
    ``L`` with ``X = -i L``, because the cell-basis window of any ``g`` is
    real. ``pq_matrix`` gives ``X`` in the P/Q basis of ``M``.
    """

    name: str
    g: DPLMap
    M: RotationM
    level: int
    blocks: list[tuple[np.ndarray, np.ndarray]]
    residual: float
    polar_distance: float
    min_distance_to_minus_one: float
    max_abs_angle: float
    branch: str = "principal, eigenvalue angles in (-pi, pi)"
    _pq: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return 1 << self.level

    def cell_L(self) -> np.ndarray:
        L = np.zeros((self.dim, self.dim))
        for idx, blk in self.blocks:
            L[np.ix_(idx, idx)] = blk
        return L

    def cell_matrix(self) -> np.ndarray:
        return -1j * self.cell_L()

    def pq_L(self) -> np.ndarray:
        if self._pq is None:
            self._pq = to_pq_basis(self.cell_L(), self.M)
        return self._pq

    def pq_matrix(self) -> np.ndarray:
        """``X`` in the P/Q basis, rows and columns in mode linear order."""
        return -1j * self.pq_L()

    def support_cells(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, dtype=int)
        return np.unique(np.concatenate([idx for idx, _ in self.blocks]))

    def hermitian_defect(self) -> float:
        L = self.cell_L()
        return float(np.linalg.norm(L + L.T))

    def summary(self) -> dict:
        return {
            "name": self.name,
            "level": self.level,
            "dim": self.dim,
            "blocks": [len(idx) for idx, _ in self.blocks],
            "residual": self.residual,
            "polar_distance": self.polar_distance,
            "min_distance_to_minus_one": self.min_distance_to_minus_one,
            "max_abs_angle": self.max_abs_angle,
            "branch": self.branch,
            "M": self.M.describe(),
        }


def _unitarize(B: np.ndarray) -> tuple[np.ndarray, float]:
    W, s, Vh = np.linalg.svd(B)
    if np.linalg.det(W) * np.linalg.det(Vh) < 0:
        k = int(np.argmin(s))
        if s[k] < 1 - 1e-6:
            # flip a truncation-kernel direction so that det = +1 and no
            # eigenvalue is forced onto -1
            W[:, k] = -W[:, k]
    U = W @ Vh
    return U, float(np.linalg.norm(U - B))


def _real_log(U: np.ndarray, tau: float) -> tuple[np.ndarray, float, float, float]:
    T, Z = sla.schur(U, output="real")
    n = T.shape[0]
    Lq = np.zeros_like(T)
    R = np.zeros_like(T)
    mind = 2.0
    maxang = 0.0
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > 1e-13:
            a, b, c, d = T[i, i], T[i, i + 1], T[i + 1, i], T[i + 1, i + 1]
            th = math.atan2((c - b) / 2, (a + d) / 2)
            Lq[i, i + 1], Lq[i + 1, i] = -th, th
            R[i, i], R[i, i + 1], R[i + 1, i], R[i + 1, i + 1] = (
                math.cos(th), -math.sin(th), math.sin(th), math.cos(th))
            dist = abs(cmath.exp(1j * th) + 1)
            i += 2
        else:
            lam = T[i, i]
            if lam < 0:
                dist = abs(lam + 1)
                th = math.pi
            else:
                dist, th = abs(lam + 1), 0.0
            R[i, i] = 1.0 if lam >= 0 else -1.0
            i += 1
        mind = min(mind, dist)
        maxang = max(maxang, abs(th))
        if dist <= tau:
            raise BranchError(f"eigenvalue within {tau:g} of -1 (distance {dist:.3e}); principal log ambiguous")
    L = Z @ Lq @ Z.T
    L = 0.5 * (L - L.T)
    resid = float(np.linalg.norm(Z @ R @ Z.T - U))
    return L, resid, mind, maxang


def unitary_log(g: DPLMap, M: RotationM, N: int, name: str = "g", tau: float | None = None) -> GeneratorLog:
    """Principal logarithm of the polar-projected level-``N`` window.

    The window is built in the cell basis and split into connected blocks;
    each non-trivial block is polar-projected and its spectral logarithm
    taken (the power series is not used). Residuals are measured against the
    unitarized window; :attr:`GeneratorLog.polar_distance` records how far
    that is from the raw truncation.

    Raises
    ------
    BranchError
        If any eigenvalue is within ``tau`` of ``-1``.
    """
    if tau is None:
        tau = get_tau()
    if N < level(g) + 2:
        raise ValueError(f"window level {N} too small; need >= {level(g) + 2}")
    T = cell_window(g, N).tocsr()
    pattern = (abs(T) + abs(T).T).tocsr()
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    blocks = []
    resid2 = 0.0
    polar2 = 0.0
    mind, maxang = 2.0, 0.0
    for k in range(ncomp):
        idx = np.sort(order[bounds[k] : bounds[k + 1]])
        B = T[idx][:, idx].toarray()
        if len(idx) == 1 and B[0, 0] == 1.0:
            continue
        if np.array_equal(B, np.eye(len(idx))):
            continue
        U, pd = _unitarize(B)
        L, r, d, a = _real_log(U, tau)
        blocks.append((idx, L))
        resid2 += r * r
        polar2 += pd * pd
        mind, maxang = min(mind, d), max(maxang, a)
    return GeneratorLog(name, g, M, N, blocks, math.sqrt(resid2), math.sqrt(polar2), mind, maxang)


def log_commutator_norm(X: GeneratorLog, Y: GeneratorLog) -> float:
    """``||[X, Y]||_2`` (basis independent; evaluated blockwise in cells)."""
    if X.level != Y.level:
        raise ValueError("logs live on different windows")
    total = 0.0
    for ix, bx in X.blocks:
        for iy, by in Y.blocks:
            if np.intersect1d(ix, iy).size == 0:
                continue
            u = np.union1d(ix, iy)
            px = np.searchsorted(u, ix)
            py = np.searchsorted(u, iy)
            A = np.zeros((len(u), len(u)))
            Bm = np.zeros((len(u), len(u)))
            A[np.ix_(px, px)] = bx
            Bm[np.ix_(py, py)] = by
            total += float(np.linalg.norm(A @ Bm - Bm @ A)) ** 2
    return math.sqrt(total)


@dataclass
class PhaseB:
    value: complex
    im_trace: float
    trace: complex
    commutator_norm: float
    warning: str | None = None

    def __complex__(self) -> complex:
        return self.value


def phase_b(X: GeneratorLog, Y: GeneratorLog, tau_commute: float = 1e-6) -> PhaseB:
    """``exp(-2i Im tr(X^(1,2) Y^(2,1)))`` in the P/Q basis of ``X.M``.

    The formula assumes ``[X, Y] = 0``; when the truncated logs violate this
    beyond ``tau_commute`` the result carries a warning.
    """
    if X.level != Y.level or X.M != Y.M:
        raise ValueError("phase_b needs logs on the same window and basis")
    modes = [ModeIndex.from_index(i) for i in range(X.dim)]
    P = np.array([m.family == "P" for m in modes])
    Q = ~P
    Xm = X.pq_matrix()
    Ym = Xm if Y is X else Y.pq_matrix()
    x12 = Xm[np.ix_(P, Q)]
    y21 = Ym[np.ix_(Q, P)]
    tr = complex(np.sum(x12 * y21.T))
    value = cmath.exp(-2j * tr.imag)
    comm = 0.0 if Y is X else log_commutator_norm(X, Y)
    warn = None
    if comm > tau_commute:
        warn = f"||[X,Y]||_2 = {comm:.3e} exceeds {tau_commute:g}; commuting-case formula not justified"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    return PhaseB(value, tr.imag, tr, comm, warn)
