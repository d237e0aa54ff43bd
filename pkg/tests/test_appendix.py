import pytest

from thompson_fock.appendix import (
    case_image,
    check_case_formulas,
    compare_reference,
    load_reference,
    parse_tex_entry,
)
from thompson_fock.dyadic import Dyadic, ExactScalar
from thompson_fock.haar import ModeIndex


@pytest.mark.parametrize(
    "tex, value",
    [
        ("0", ExactScalar(0)),
        ("-1", ExactScalar(-1)),
        ("\\frac{\\sqrt{2}}{2}", ExactScalar(0, Dyadic(1, 1))),
        ("-\\frac{2+\\sqrt{2}}{8}", ExactScalar(Dyadic(-1, 2), Dyadic(-1, 3))),
        ("\\frac{3-2\\sqrt{2}}{4}", ExactScalar(Dyadic(3, 2), Dyadic(-1, 1))),
    ],
)
def test_parse_tex_entry(tex, value):
    assert parse_tex_entry(tex) == value


def test_parse_rejects_non_dyadic():
    with pytest.raises(ValueError):
        parse_tex_entry("\\frac{1}{3}")


@pytest.mark.parametrize("name", ["uA", "uB"])
def test_reference_shapes(name):
    ref = load_reference(name)
    assert len(ref.values) == len(ref.rows)
    assert ref.nonzero()


@pytest.mark.parametrize("name", ["uA", "uB"])
def test_reference_agreement(name):
    rep = compare_reference(name)
    assert rep["orthonormal"]
    assert rep["match_fraction"] >= 0.9
    for d in rep["disagreements"]:
        assert d["printed_tex"] and d["printed"] != d["regenerated"]


def test_case_image_boundaries():
    # the left end of each half-open interval belongs to the next case
    assert case_image("A", ModeIndex("P", 4, 2))[0] == 1
    assert case_image("A", ModeIndex("P", 4, 3))[0] == 2
    assert case_image("B", ModeIndex("Q", 5, 6))[0] == 2
    with pytest.raises(ValueError):
        case_image("B", ModeIndex("P", 4, 0))


@pytest.mark.parametrize("gen, ncases", [("A", 3), ("B", 4)])
def test_case_formulas(gen, ncases):
    rep = check_case_formulas(gen, levels=range(5, 8))
    assert rep["failures"] == []
    assert len(rep["cases_exercised"]) == 2 * ncases
