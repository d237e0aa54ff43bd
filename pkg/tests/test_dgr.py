import pytest

from thompson_fock.dgr import E, V, DGRElement, boundary, check_d_squared, check_leibniz


def test_generators():
    assert boundary(E) == DGRElement.parse("vv - v")
    assert boundary(V).is_zero()


@pytest.mark.parametrize(
    "word, expected",
    [
        ("ve", "vvv - vv"),
        ("ev", "vvv - vv"),
        ("ee", "vve - ve - evv + ev"),
        ("eve", "vvve - vve - evvv + evv"),
    ],
)
def test_hand_computed_boundaries(word, expected):
    assert boundary(DGRElement.word(word)) == DGRElement.parse(expected)


def test_parse_and_arithmetic():
    x = DGRElement.parse("2 v^3 - e + vve")
    assert x == DGRElement.from_dict({"vvv": 2, "e": -1, "vve": 1})
    assert (x - x).is_zero()
    assert V * E == DGRElement.word("ve")
    assert 3 * V == V * 3 == DGRElement.word("v", 3)
    assert DGRElement.parse(str(x)) == x
    with pytest.raises(ValueError):
        DGRElement.parse("vx")


def test_d_squared_vanishes():
    rep = check_d_squared(10)
    assert rep.passed and rep.degree_drop_ok
    assert rep.checked == 2 ** 11 - 1


def test_leibniz_against_block_splits():
    assert check_leibniz(200, 10, seed=1)[1] is None
