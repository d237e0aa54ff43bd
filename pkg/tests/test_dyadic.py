from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thompson_fock.dyadic import (
    TAU_ENV,
    Dyadic,
    ExactScalar,
    get_tau,
    isclose,
    set_tau,
    tau_context,
)

ints = st.integers(-(10**6), 10**6)
exps = st.integers(-6, 12)


@st.composite
def dyadics(draw):
    return Dyadic(draw(ints), draw(exps))


@st.composite
def scalars(draw):
    return ExactScalar(Dyadic(draw(ints), draw(exps)), Dyadic(draw(ints), draw(exps)))


def _pair(x: ExactScalar) -> tuple[Fraction, Fraction]:
    return x.rat.to_fraction(), x.irr.to_fraction()


def test_dyadic_canonical_form():
    assert Dyadic(6, 2) == Dyadic(3, 1)
    assert (Dyadic(6, 2).mantissa, Dyadic(6, 2).exponent) == (3, 1)
    assert Dyadic(0, 5) == Dyadic(0, 0)
    assert Dyadic.coerce("3/8") == Dyadic(3, 3)
    with pytest.raises(ValueError):
        Dyadic.coerce(Fraction(1, 3))


@given(dyadics(), dyadics())
def test_dyadic_field_ops_match_fractions(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)
    assert a.floor() == fa.__floor__()


@given(scalars(), scalars())
def test_exact_ring_ops_match_pair_arithmetic(x, y):
    (a1, b1), (a2, b2) = _pair(x), _pair(y)
    assert _pair(x + y) == (a1 + a2, b1 + b2)
    assert _pair(x - y) == (a1 - a2, b1 - b2)
    assert _pair(x * y) == (a1 * a2 + 2 * b1 * b2, a1 * b2 + a2 * b1)


@settings(max_examples=200)
@given(scalars())
def test_to_float_is_correctly_rounded(x):
    a, b = _pair(x)
    with mpmath.workdps(60):
        ref = mpmath.mpf(a.numerator) / a.denominator + mpmath.sqrt(2) * mpmath.mpf(b.numerator) / b.denominator
        assert x.to_float() == float(ref)
        assert x.sign() == (0 if ref == 0 else (1 if ref > 0 else -1))


def test_sqrt2_powers():
    r = ExactScalar.sqrt2_power(1)
    assert r * r == ExactScalar(2)
    assert ExactScalar.sqrt2_power(-3) * ExactScalar.sqrt2_power(3) == ExactScalar(1)
    assert ExactScalar(1, 1).galois() == ExactScalar(1, -1)


def test_string_form():
    assert str(ExactScalar(Dyadic(111, 5), Dyadic(-5, 3))) == "111/32-5/8*sqrt2"


def test_isclose_and_tau_context(monkeypatch):
    base = get_tau()
    assert isclose(1.0, 1.0 + base / 2)
    assert not isclose(1.0, 1.0 + base * 10)
    with tau_context(1e-3):
        assert get_tau() == 1e-3
        assert isclose(1.0, 1.0005)
    assert get_tau() == base
    with pytest.raises(ValueError):
        set_tau(-1.0)


def test_tau_env_var(monkeypatch):
    import thompson_fock.dyadic as dy

    monkeypatch.setenv(TAU_ENV, "1e-5")
    assert dy._initial_tau() == 1e-5
    monkeypatch.setenv(TAU_ENV, "-2")
    with pytest.raises(ValueError):
        dy._initial_tau()
