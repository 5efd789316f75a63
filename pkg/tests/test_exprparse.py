import pytest
from hypothesis import given, strategies as st

from vfalg.errors import ParseError
from vfalg.exprparse import format_state, parse_scalar, parse_sfn, parse_state
from vfalg.hopf import enumerate_basis, linear_combination
from vfalg.scalar import ScalarQ
from vfalg.sfield import SingularFn


def test_state_examples(a1):
    assert parse_state("E{1}", a1) == a1.e((1,))
    u = parse_state("E{-1}*A{1,2} + 1/2*A{1,1}", a1)
    assert u == a1.e((-1,)) * a1.a(1, 2) + a1.a(1, 1) * (ScalarQ(1) / 2)
    assert parse_state("1", a1) == a1.one()
    assert parse_state("(q^2 - 1)*E{0}", a1) == a1.one() * (ScalarQ.q_power(2) - 1)


def test_field_states(free):
    assert parse_state("PHI{1,0}^2", free) == free.phi(1) * free.phi(1)
    assert parse_state("PHI{1,2}/3", free) == free.phi(1, 2) * (ScalarQ(1) / 3)


@pytest.mark.parametrize("text, fragment", [
    ("PHI{1,0}^2", "free fields"),
    ("A{2,1}", "out of range"),
    ("E{1,2}", "rank"),
    ("E{1", "expected"),
    ("x1*E{1}", "not allowed"),
    ("E{1}^-1", "negative powers"),
    ("E{1}/E{1}", "divided by scalars"),
    ("E{1} $", "unexpected character"),
])
def test_state_diagnostics(a1, text, fragment):
    with pytest.raises(ParseError) as info:
        parse_state(text, a1)
    assert fragment in str(info.value)
    assert info.value.column is not None


def test_lattice_generators_rejected_in_field_model(free):
    with pytest.raises(ParseError, match="lattice"):
        parse_state("E{1}", free)


def test_column_points_at_the_problem(a1):
    with pytest.raises(ParseError) as info:
        parse_state("E{1} + A{1,1} + PHI{1,0}", a1)
    assert info.value.column == 17


def test_sfn_diagnostics():
    with pytest.raises(ParseError, match="x3"):
        parse_sfn("x3", {1, 2})
    with pytest.raises(ParseError, match="zero"):
        parse_sfn("x1/0")
    with pytest.raises(ParseError):
        parse_sfn("(x1-x2")
    with pytest.raises(ParseError):
        parse_sfn("E{1}")


def test_sfn_accepts_rational_forms():
    f = parse_sfn("1/((x1-x2)^2)")
    assert f == SingularFn.factor(1, 2, 0, -2)
    g = parse_sfn("(x1^2 - q^2*x2^2)/(x1 - q*x2)")
    assert g == parse_sfn("x1 + q*x2")


def test_scalar_parse():
    assert parse_scalar("q^-2 + 1/2") == ScalarQ.q_power(-2) + ScalarQ(1) / 2
    assert parse_scalar("1/(q+1)") * parse_scalar("q + 1") == 1
    with pytest.raises(ParseError):
        parse_scalar("x1")


@st.composite
def states(draw, model, pool):
    items = draw(st.lists(st.tuples(st.sampled_from(pool),
                                    st.fractions(max_denominator=5).filter(bool),
                                    st.integers(-2, 2)), max_size=4))
    return linear_combination(model, [(b, ScalarQ.q_power(e, c)) for b, c, e in items])


def test_state_round_trip(a1, qa1, free):
    for model in (a1, free):
        pool = enumerate_basis(model, 3, radius=2)

        @given(states(model, pool))
        def check(u):
            assert parse_state(format_state(u), model) == u

        check()
