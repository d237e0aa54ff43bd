import numpy as np
import pytest

import oracles
from thompson_fock.dyadic import ExactScalar
from thompson_fock.haar import (
    KoopmanColumns,
    ModeIndex,
    RotationM,
    analysis_matrix,
    cell_window,
    haar_mode,
    koopman_apply,
    koopman_window,
    modes_up_to,
    pq_mode,
    simple_level,
    to_pq_basis,
)
from thompson_fock.thompson import named_element

NAMES = "ABCDE"
MATRICES = {
    "hadamard": RotationM.hadamard(),
    "rot30": RotationM.rotation(30.0),
    "rot0": RotationM.rotation(0.0),
    "complex": RotationM.from_entries([[0.6, 0.8j], [0.8j, 0.6]]),
}


def test_mode_indexing_matches_oracle_order():
    labels = [(m.family, m.n, m.t) for m in modes_up_to(4)]
    assert labels == oracles.mode_list(4)
    for i in range(64):
        assert ModeIndex.from_index(i).index == i
    assert ModeIndex.parse("Q4,3") == ModeIndex("Q", 4, 3)


def test_modes_are_orthonormal():
    M = RotationM.hadamard()
    fs = [pq_mode(M, m.family, m.n, m.t) for m in modes_up_to(4)]
    for i, f in enumerate(fs):
        for j, h in enumerate(fs):
            assert f.inner(h) == ExactScalar(1 if i == j else 0)


def test_rotation_45_spans_hadamard_family_p():
    h, r = RotationM.hadamard(), RotationM.rotation(45.0)
    for t in range(2):
        a, b = pq_mode(h, "P", 3, t, exact=False), pq_mode(r, "P", 3, t, exact=False)
        assert abs(complex(a.inner(b)) - 1) < 1e-15


@pytest.mark.parametrize("Mname", list(MATRICES))
@pytest.mark.parametrize("name", NAMES)
def test_window_matches_sampled_oracle(name, Mname):
    M = MATRICES[Mname]
    g = named_element(name)
    L = 7
    W = koopman_window(g, M, L).to_dense()
    _, ref = oracles.koopman_sampled(oracles.pl_named(name), L, M=M.matrix)
    assert np.abs(W - ref).max() < 1e-12


@pytest.mark.parametrize("name", NAMES)
def test_cell_window_is_the_same_compression(name):
    g = named_element(name)
    N = 8
    M = RotationM.hadamard()
    X = to_pq_basis(cell_window(g, N).toarray(), M)
    W = koopman_window(g, M, N).to_dense()
    assert np.abs(X - W).max() < 1e-12


def test_analysis_matrix_is_unitary():
    for M in MATRICES.values():
        W = analysis_matrix(5, M)
        assert np.abs(W @ W.conj().T - np.eye(32)).max() < 1e-13


@pytest.mark.parametrize("name", NAMES)
def test_exact_window_orthonormal(name):
    win = koopman_window(named_element(name), RotationM.hadamard(), 7)
    rep = win.check_orthonormal()
    assert rep["orthonormal"] and rep["columns"] > 0


@pytest.mark.parametrize("name", NAMES)
def test_modes_beyond_simple_level_map_to_single_modes(name):
    g = named_element(name)
    cols = KoopmanColumns(g, RotationM.hadamard())
    top = simple_level(g)
    for fam in "PQ":
        for t in range(1 << (top - 2)):
            assert cols.is_simple(ModeIndex(fam, top, t))


def test_koopman_apply_preserves_norm():
    g = named_element("D")
    for n, k in [(0, 0), (2, 1), (5, 7)]:
        f = haar_mode(n, k)
        assert koopman_apply(g, f).norm_sq() == ExactScalar(1)


def test_window_too_small_rejected():
    with pytest.raises(ValueError):
        koopman_window(named_element("E"), RotationM.hadamard(), 2)
