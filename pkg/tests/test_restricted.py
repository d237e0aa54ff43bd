import numpy as np
import pytest
import scipy.linalg as sla

import oracles
from thompson_fock.dyadic import ExactScalar
from thompson_fock.haar import RotationM, cell_window, koopman_window
from thompson_fock.restricted import (
    BranchError,
    block_decomposition,
    exact_rank,
    fredholm_index,
    hs_norm_commutator,
    log_commutator_norm,
    phase_b,
    segal_distance,
    unitary_log,
)
from thompson_fock.thompson import evaluate_word, level, named_element, random_word

NAMES = "ABCDE"
HAD = RotationM.hadamard()
ACTIVE_LEVEL = {"A": 3, "B": 4, "C": 4, "D": 5, "E": 6}


def _frac_pair(x: ExactScalar):
    return x.rat.to_fraction(), x.irr.to_fraction()


@pytest.mark.parametrize("name", NAMES)
def test_hs_norm_frozen_exact(name):
    hs = hs_norm_commutator(named_element(name), HAD, 9)
    assert _frac_pair(hs.exact_sq) == oracles.HS_SQ_HADAMARD[name]


@pytest.mark.parametrize("name", NAMES)
def test_frozen_values_match_sampled_oracle(name):
    lc = ACTIVE_LEVEL[name]
    ref = oracles.hs_sq_sampled(oracles.pl_named(name), oracles.HAD, lc + 1, lc + 3)
    assert abs(ref - oracles.frozen_float(oracles.HS_SQ_HADAMARD[name])) < 1e-12


@pytest.mark.parametrize("name", NAMES)
def test_segal_route_equals_commutator_route(name):
    g = named_element(name)
    assert segal_distance(g, HAD, 9).exact_sq == hs_norm_commutator(g, HAD, 9).exact_sq


@pytest.mark.parametrize("theta", [0.0, 30.0, 90.0])
@pytest.mark.parametrize("name", "ACD")
def test_hs_float_path_matches_oracle(name, theta):
    M = RotationM.rotation(theta)
    g = named_element(name)
    lc = ACTIVE_LEVEL[name]
    ref = oracles.hs_sq_sampled(oracles.pl_named(name), M.matrix, lc + 1, lc + 3)
    assert abs(hs_norm_commutator(g, M, 9).value ** 2 - ref) < 1e-10


@pytest.mark.parametrize("name", NAMES)
def test_hs_window_stable(name):
    g = named_element(name)
    assert hs_norm_commutator(g, HAD, 9).exact_sq == hs_norm_commutator(g, HAD, 13).exact_sq


@pytest.mark.parametrize("name", NAMES)
def test_hs_small_windows_raise_or_are_exact(name):
    g = named_element(name)
    for N in range(2, 9):
        try:
            hs = hs_norm_commutator(g, HAD, N)
        except ValueError:
            continue
        assert _frac_pair(hs.exact_sq) == oracles.HS_SQ_HADAMARD[name]
    with pytest.raises(ValueError):
        hs_norm_commutator(g, HAD, 2)


def test_exact_rank():
    one, r2 = ExactScalar(1), ExactScalar(0, 1)
    zero = ExactScalar(0)
    assert exact_rank([[one, r2], [r2, ExactScalar(2)]]) == 1
    assert exact_rank([[one, zero], [zero, r2]]) == 2
    assert exact_rank([[zero, zero]]) == 0
    assert exact_rank([[one, r2, zero], [zero, one, r2], [one, r2 + one, r2]]) == 2


@pytest.mark.parametrize("M", [HAD, RotationM.rotation(0.0), RotationM.rotation(90.0)], ids=["had", "r0", "r90"])
@pytest.mark.parametrize("name", NAMES)
def test_index_matches_svd_oracle(name, M):
    lc = ACTIVE_LEVEL[name]
    ref = oracles.index_sampled(oracles.pl_named(name), M.matrix, lc + 1, lc + 3)
    res = fredholm_index(named_element(name), M, 9)
    assert res.index == ref
    assert res.kernel[0] == res.kernel[1]


def _index(g):
    return fredholm_index(g, HAD, max(level(g), level(g.inverse())) + 2).index


def test_index_additive_on_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(5):
        g = evaluate_word(random_word(rng, 3, 1))
        h = evaluate_word(random_word(rng, 3, 1))
        gh = g * h
        assert _index(gh) == _index(g) + _index(h)


def test_block_decomposition_reassembles():
    win = koopman_window(named_element("D"), HAD, 7)
    dec = block_decomposition(win)
    assert dec.reassemble() == win.columns


@pytest.mark.parametrize("name", "CDE")
def test_log_exponentiates_to_polar_factor(name):
    g = named_element(name)
    X = unitary_log(g, HAD, 8, name)
    assert X.residual < 1e-10
    assert X.hermitian_defect() < 1e-12
    L = X.cell_L()
    U = sla.expm(L)
    assert np.abs(U @ U.T - np.eye(len(U))).max() < 1e-10
    # on cells the window moves only inside the support, the log agrees there
    W = cell_window(g, 8).toarray()
    off = np.setdiff1d(np.arange(256), X.support_cells())
    assert np.abs(W[np.ix_(off, off)] - np.eye(len(off))).max() == 0


def test_log_commutators_and_phase():
    X = {n: unitary_log(named_element(n), HAD, 8, n) for n in "CDE"}
    assert log_commutator_norm(X["C"], X["D"]) == 0.0
    assert log_commutator_norm(X["C"], X["E"]) == 0.0
    assert phase_b(X["C"], X["C"]).value == 1
    assert abs(phase_b(X["C"], X["D"]).value - 1) < 1e-12


def test_phase_b_warns_on_noncommuting_logs():
    X = unitary_log(named_element("A"), HAD, 6, "A")
    Y = unitary_log(named_element("B"), HAD, 6, "B")
    with pytest.warns(RuntimeWarning):
        pb = phase_b(X, Y)
    assert pb.warning is not None


def test_branch_error_near_minus_one():
    from thompson_fock.restricted import _real_log

    with pytest.raises(BranchError):
        _real_log(np.diag([1.0, -1.0, 1.0]), 1e-9)
    c, s_ = np.cos(3.0), np.sin(3.0)
    L, resid, mind, _ = _real_log(np.array([[c, -s_], [s_, c]]), 1e-9)
    assert abs(L[1, 0] - 3.0) < 1e-12 and resid < 1e-12 and mind > 0
