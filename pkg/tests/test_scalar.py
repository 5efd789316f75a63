from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from vfalg.exprparse import parse_scalar
from vfalg.scalar import ONE, Q, ZERO, ScalarQ

PROBES = (Fraction(2), Fraction(-3, 5), Fraction(7, 2))

coeffs = st.lists(st.integers(-4, 4), min_size=1, max_size=4)


@st.composite
def scalars(draw):
    num = draw(coeffs)
    den = draw(coeffs)
    assume(any(den))
    shift = draw(st.integers(-2, 2))
    return ScalarQ.from_polys(num, den) * ScalarQ.q_power(shift), (num, den, shift)


def poly_at(p, q):
    return sum((Fraction(c) * q ** i for i, c in enumerate(p)), Fraction(0))


def oracle(spec, q):
    num, den, shift = spec
    return poly_at(num, q) / poly_at(den, q) * q ** shift


def value(s, q):
    return Fraction(str(s.at_q(q).to_rational()))


def test_constants():
    assert ZERO.is_zero and ONE.is_one
    assert Q == ScalarQ.q_power(1)
    assert ScalarQ(Fraction(3, 6)) == ScalarQ(1) / 2
    assert (Q * Q.inverse()).is_one


def test_normal_form_is_unique():
    a = ScalarQ.from_polys([-1, 0, 1], [-1, 1])  # (q^2 - 1) / (q - 1)
    assert a == ScalarQ.from_polys([1, 1], [1])
    b = ScalarQ.from_polys([0, 0, 2], [0, 4])  # 2q^2 / 4q
    assert b == ScalarQ.q_power(1, Fraction(1, 2))
    assert hash(a) == hash(ScalarQ.from_polys([1, 1], [1]))


def test_text():
    assert str(ScalarQ(0)) == "0"
    assert str(ScalarQ.q_power(-2, -3)) == "-3*q^-2"
    assert str(ScalarQ.from_polys([1], [1, 1])) == "1/(q + 1)"


def test_zero_division():
    with pytest.raises(ZeroDivisionError):
        ZERO.inverse()
    with pytest.raises(ZeroDivisionError):
        ScalarQ.from_polys([1], [-1, 1]).at_q(1)


def test_to_rational_rejects_q():
    with pytest.raises(ValueError):
        Q.to_rational()


@given(scalars())
def test_matches_pointwise_oracle(item):
    s, spec = item
    for q in PROBES:
        assume(poly_at(spec[1], q) != 0)
        assert value(s, q) == oracle(spec, q)


@given(scalars(), scalars(), scalars())
def test_field_axioms(x, y, z):
    a, b, c = x[0], y[0], z[0]
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == ZERO
    if a:
        assert a * a.inverse() == ONE
        assert (b / a) * a == b


@given(scalars(), scalars())
def test_arithmetic_against_oracle(x, y):
    (a, sa), (b, sb) = x, y
    for q in PROBES:
        assume(poly_at(sa[1], q) and poly_at(sb[1], q))
        assert value(a * b, q) == oracle(sa, q) * oracle(sb, q)
        assert value(a - b, q) == oracle(sa, q) - oracle(sb, q)


@given(scalars())
def test_as_polys_reconstructs(item):
    s, _ = item
    num, den = s.as_polys()
    assert all(isinstance(c, int) for c in num + den)
    assert ScalarQ.from_polys(num, den) == s


@given(scalars())
def test_text_round_trip(item):
    s, _ = item
    assert parse_scalar(str(s)) == s


@given(scalars(), st.integers(-3, 3))
def test_powers(item, n):
    s, _ = item
    assume(s or n >= 0)
    expect = ONE
    for _ in range(abs(n)):
        expect = expect * s
    if n < 0:
        expect = expect.inverse()
    assert s ** n == expect


@given(scalars(), scalars())
def test_mod_value_is_a_homomorphism(x, y):
    p, qv = 2**61 - 1, 1234567891
    a, b = x[0], y[0]
    va, vb, vab = a.mod_value(p, qv), b.mod_value(p, qv), (a * b).mod_value(p, qv)
    assume(None not in (va, vb, vab))
    assert vab == va * vb % p
    assert (a + b).mod_value(p, qv) == (va + vb) % p
