"""Exact scalar field: arithmetic axioms, substitution and truncation."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from strongcoupling.scalar import Ring, ScalarValue

R = Ring(["t", "s"], ["U", "V"])
t, s, U, V = R.symbols("t", "s", "U", "V")

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def scalars(draw, allow_den=True):
    """Random rational functions with classical-only denominators."""
    coeffs = draw(st.lists(small, min_size=1, max_size=4))
    monos = [t, s, t * t, t * s, U, R.one, U * t]
    num = R.zero
    for i, c in enumerate(coeffs):
        num = num + monos[draw(st.integers(0, len(monos) - 1))] * c
    if allow_den and draw(st.booleans()):
        shift = draw(st.integers(1, 3))
        den = U + V * shift if draw(st.booleans()) else U
        return num / den
    return num


@given(scalars(), scalars(), scalars())
@settings(max_examples=60, deadline=None)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == R.zero
    assert a * R.one == a


@given(scalars(), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_division_by_classical_inverts(a, k):
    d = U + V * k
    assert (a / d) * d == a


@given(scalars(), small, small, small, small)
@settings(max_examples=40, deadline=None)
def test_evaluate_is_a_homomorphism(a, tv, sv, uv, vv):
    vals = {"t": tv, "s": sv, "U": abs(uv) + 1, "V": abs(vv) + 1}
    b = a * a + a
    assert b.evaluate(vals) == a.evaluate(vals) ** 2 + a.evaluate(vals)


def test_subs_partial_and_full():
    x = (t**2 - 2 * t * s) / U
    y = x.subs({"t": Fraction(1, 2)})
    assert y == (Fraction(1, 4) - s) / U
    assert y.subs({"s": 0, "U": 2}).constant_value() == Fraction(1, 8)


def test_subs_vanishing_denominator_raises():
    with pytest.raises(ZeroDivisionError):
        (t / (U - V)).subs({"U": 1, "V": 1})


def test_degree_part_and_truncate():
    x = t**2 / U + t**4 / U**3 + R.one
    assert x.hopping_degree == 4
    assert x.min_degree == 0
    assert x.degree_part(2) == t**2 / U
    assert x.truncate(2) == t**2 / U + R.one


def test_division_by_hopping_symbol_is_rejected():
    with pytest.raises(Exception):
        R.one / t


def test_string_form():
    assert str(4 * t**4 / U**3) == "4*t^4/U^3"
    assert str(R.const(Fraction(-3, 7))) == "-3/7"
