import numpy as np
import pytest

import oracles
from thompson_fock.fock import (
    VACUUM,
    CarOperator,
    FockBasisLabel,
    FockVector,
    Implementer,
    apply_car,
    check_car_relations,
    commutator_phase,
    solve_vacuum,
)
from thompson_fock.haar import ModeIndex, RotationM
from thompson_fock.thompson import named_element

HAD = RotationM.hadamard()
ORACLE_GRID = {"A": 9, "B": 9, "C": 9, "D": 9, "E": 10}


@pytest.fixture(scope="module")
def implementers():
    return {n: Implementer(named_element(n), HAD, 14) for n in "ABCDE"}


def _key(label):
    ms = label.modes
    return (
        frozenset((m.family, m.n, m.t) for m in ms if m.family == "P"),
        frozenset((m.family, m.n, m.t) for m in ms if m.family == "Q"),
    )


def test_labels_and_vectors():
    lab = FockBasisLabel.from_modes([ModeIndex("P", 2, 0), ModeIndex("Q", 3, 1), ModeIndex("P", 1, 0)])
    assert lab.charge == 1
    assert FockBasisLabel.from_masks(*lab.masks) == lab
    v = FockVector.basis(lab, 2.0) + FockVector.vacuum().scale(1j)
    assert v.coefficient(lab) == 2.0 and v.coefficient(VACUUM) == 1j
    assert abs(v.norm() ** 2 - 5) < 1e-15
    assert FockVector.from_json(v.to_json()).to_dict() == v.to_dict()
    assert len(v - v) == 0
    assert v.inner(FockVector.vacuum()) == 1j


def test_car_relations_exact():
    rep = check_car_relations(10)
    assert rep["car_exact"]
    assert rep["joint_kernel_dim"] == 1 and rep["kernel_is_vacuum"]


def test_car_on_vectors():
    p, q = ModeIndex("P", 2, 0), ModeIndex("Q", 2, 0)
    f = {p: 0.6, q: 0.8j}
    c, cs = CarOperator.create(f), CarOperator.annihilate(f)
    # c(f) c(f)^* + c(f)^* c(f) = ||f||^2 on a random vector
    rng = np.random.default_rng(0)
    labs = [VACUUM, FockBasisLabel.from_modes([p]), FockBasisLabel.from_modes([q]),
            FockBasisLabel.from_modes([p, q, ModeIndex("P", 3, 1)])]
    v = FockVector.from_dict({l: complex(*rng.normal(size=2)) for l in labs})
    anti = apply_car(c, apply_car(cs, v)) + apply_car(cs, apply_car(c, v))
    assert (anti - v).norm() < 1e-15
    assert apply_car(c, apply_car(c, v)).norm() < 1e-15
    assert c.adjoint.symbol == "annihilate"


@pytest.mark.parametrize("name", "ABCDE")
def test_vacuum_matches_gaussian_oracle(name):
    v = solve_vacuum(named_element(name), HAD, 14)
    assert v.kernel_dim == 1 and v.gap > 1
    ours = {_key(l): abs(c) for l, c in v.vector.items()}
    ref = oracles.vacuum_magnitudes(oracles.pl_named(name), oracles.HAD, ORACLE_GRID[name])
    assert set(ours) == set(ref)
    assert max(abs(ours[k] - ref[k]) for k in ref) < 1e-12
    ov = abs(v.vector.inner(FockVector.vacuum()))
    assert abs(ov - oracles.vacuum_overlap(oracles.pl_named(name), oracles.HAD, ORACLE_GRID[name])) < 1e-12


def test_vacuum_independent_of_budget():
    g = named_element("C")
    a = solve_vacuum(g, HAD, 12).vector
    b = solve_vacuum(g, HAD, 16).vector
    assert abs(abs(a.inner(b)) - 1) < 1e-12


def test_mode_budget_too_small():
    with pytest.raises(ValueError):
        solve_vacuum(named_element("E"), HAD, 4)


@pytest.mark.parametrize("name", "ABCDE")
def test_implementer_unitary_on_interior(implementers, name):
    U = implementers[name]
    assert U.unitarity_defect(U.interior_labels(2)) < 1e-12


@pytest.mark.parametrize("name", "ACD")
def test_intertwining(implementers, name):
    U = implementers[name]
    rng = np.random.default_rng(5)
    modes = [m for m in U.space.modes if m.n <= 3]
    f = {m: complex(*rng.normal(size=2)) for m in modes}
    labs = U.interior_labels(1)[:6]
    v = FockVector.from_dict({l: complex(*rng.normal(size=2)) for l in labs})
    for symbol in ("create", "annihilate"):
        assert U.intertwining_residual(f, v, symbol) < 1e-12
        assert U.intertwining_residual(modes[0], FockVector.vacuum(), symbol) < 1e-12


def test_commutator_phase_and_rephasing(implementers):
    C, D, E = (named_element(n) for n in "CDE")
    UC, UD, UE = implementers["C"], implementers["D"], implementers["E"]
    lam = commutator_phase(C, D, HAD, 14, implementers=(UC, UD))
    assert abs(abs(lam.value) - 1) < 1e-12 and lam.dispersion < 1e-12
    ref, _ = oracles.commutator_phase_det(oracles.pl_named("C"), oracles.pl_named("E"), oracles.HAD, 10)
    lamE = commutator_phase(C, E, HAD, 14, implementers=(UC, UE))
    assert abs(lamE.value - ref) < 1e-10
    z1, z2 = np.exp(0.7j), np.exp(-2.1j)
    rep = commutator_phase(C, D, HAD, 14, implementers=(UC.rephase(z1), UD.rephase(z2)))
    assert abs(rep.value - lam.value) < 1e-14


def test_commutator_phase_requires_commuting_elements():
    with pytest.raises(ValueError):
        commutator_phase(named_element("A"), named_element("B"), HAD, 12)
