import itertools

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_free
from vfalg.bichar import bc_charge, bc_eval, bc_model
from vfalg.errors import UsageError
from vfalg.exprparse import parse_sfn
from vfalg.hopf import Basis, as_element, enumerate_basis, hm_d_action, hm_dgen, make_model
from vfalg.scalar import ONE, ScalarQ
from vfalg.sfield import SingularFn, sf_divided_deriv, sf_prod, sf_rename, sf_sum
from vfalg.vertex import (
    StateVector, embed_tensor, series_divided_deriv, vx_contour, vx_embed, vx_expand_merge,
    vx_greens, vx_mode, vx_npoint, vx_pair, vx_R_apply, vx_tensor, vx_tensor_model,
    vx_twisted_product, vx_Y,
)

V2 = frozenset({1, 2})


def P(text, vs=V2):
    return parse_sfn(text, vs)


def state(model, pieces, vs):
    """StateVector from ``[({var: HMElement}, SingularFn)]`` with singleton partition."""
    out = []
    for slots, f in pieces:
        exp = [[(v, b, c) for b, c in u.terms.items()] for v, u in sorted(slots.items())]
        for choice in itertools.product(*exp):
            coeff = ONE
            for _, _, c in choice:
                coeff = coeff * c
            out.append((tuple((v, b) for v, b, _ in choice), f.scale(coeff)))
    return StateVector.from_lists(model, vs, [{v} for v in vs], out)


# -- embedding and products ---------------------------------------------------------

def test_embed(a1):
    one = vx_embed(a1.one(), 1)
    assert one.terms == {((1, a1.unit_basis()),): SingularFn.one({1})}
    u = vx_embed(a1.e((1,)), 2)
    assert u.varset == {2} and list(u.terms) == [((2, Basis((1,), ())),)]
    x, y = a1.e((1,)) * 2, a1.a(1, 1) * ScalarQ.q_power(1)
    assert vx_embed(x + y, 1) == vx_embed(x, 1) + vx_embed(y, 1)


def test_product_examples(a1, free):
    e = a1.e
    got = vx_twisted_product(vx_embed(e((1,)), 1), vx_embed(e((-1,)), 2))
    assert got == state(a1, [({1: e((1,)), 2: e((-1,))}, P("(x1-x2)^-2"))], V2)
    phi = free.phi(1)
    got = vx_twisted_product(vx_embed(phi, 1), vx_embed(phi, 2))
    expect = state(free, [({1: phi, 2: phi}, SingularFn.one(V2)),
                          ({1: free.one(), 2: free.one()}, free.propagator[0][0])], V2)
    assert got == expect


def test_unit_law(a1):
    for b in enumerate_basis(a1, 3):
        v = vx_embed(as_element(a1, b), 2)
        one = vx_embed(a1.one(), 1)
        assert vx_twisted_product(one, v) == vx_tensor(one, v)
        v1 = vx_embed(as_element(a1, b), 1)
        one2 = vx_embed(a1.one(), 2)
        assert vx_twisted_product(v1, one2) == vx_tensor(v1, one2)


def test_npoint_example(a1):
    e = a1.e
    got = vx_npoint([e((1,)), e((1,)), e((-2,))])
    coeff = parse_sfn("(x1-x2)^2*(x1-x3)^-4*(x2-x3)^-4", {1, 2, 3})
    assert got == state(a1, [({1: e((1,)), 2: e((1,)), 3: e((-2,))}, coeff)], {1, 2, 3})
    assert vx_npoint([e((1,))]) == vx_embed(e((1,)), 1)
    assert vx_npoint([e((1,)), e((2,))]) == vx_twisted_product(vx_embed(e((1,)), 1),
                                                               vx_embed(e((2,)), 2))


def test_npoint_group_likes_oracle():
    """Group-likes: the coefficient is the product of pairwise values, signs included."""
    model = make_model([[2, 1], [1, 2]], mode="quantum")
    r = bc_model(model)
    alphas = [(1, 0), (0, 1), (-1, 1), (1, -1)]
    got = vx_npoint([model.e(a) for a in alphas])
    vs = frozenset(range(1, 5))
    coeff = SingularFn.one(vs)
    for i, j in itertools.combinations(range(4), 2):
        value = bc_eval(r, model.e(alphas[i]), model.e(alphas[j]))
        coeff = coeff * sf_rename(value, {1: i + 1, 2: j + 1}, vs)
    assert list(got.terms) == [tuple((k + 1, Basis(a, ())) for k, a in enumerate(alphas))]
    assert list(got.terms.values()) == [coeff]


# -- Green's functions ------------------------------------------------------------------

def matchings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        for m in matchings(rest[:k] + rest[k + 1:]):
            yield [(first, rest[k])] + m


def wick(model, fields):
    """Perfect-matching sum; ``fields`` is a list of (field index, derivative order)."""
    n = len(fields)
    vs = frozenset(range(1, n + 1))
    terms = []
    for m in matchings(list(range(n))):
        factors = []
        for a, b in m:
            (ja, ia), (jb, ib) = fields[a], fields[b]
            d = model.propagator[ja - 1][jb - 1]
            d = sf_divided_deriv(sf_divided_deriv(d, 1, ia), 2, ib)
            factors.append(sf_rename(d, {1: a + 1, 2: b + 1}, vs))
        terms.append(sf_prod(factors, vs))
    return sf_sum(terms, vs)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_greens_match_wick(free, n):
    got = vx_greens([free.phi(1)] * n)
    expect = wick(free, [(1, 0)] * n)
    assert got == expect
    if n % 2:
        assert got.is_zero


def test_greens_examples(free):
    assert str(vx_greens([free.phi(1)] * 2)) == "1/((x1-x2)^2)"
    assert vx_greens([free.phi(1)] * 3).is_zero
    four = vx_greens([free.phi(1)] * 4)
    assert len(list(matchings([0, 1, 2, 3]))) == 3
    assert four == wick(free, [(1, 0)] * 4)


TWO = make_model(propagator=[[P("(x1-x2)^-2"), P("x1*(x1-x2)^-1")],
                             [P("x2*(x1-x2)^-1"), P("2*(x1-x2)^-2")]])


@settings(max_examples=25)
@given(st.lists(st.tuples(st.sampled_from([1, 2]), st.integers(0, 1)), min_size=2, max_size=4))
def test_greens_wick_with_derivatives(fields):
    got = vx_greens([TWO.phi(j, i) for j, i in fields])
    assert got == wick(TWO, fields)


def test_free_blocks_are_independent():
    m = vx_tensor_model(make_free(), make_free())
    assert m.nfields == 2 and m.propagator[0][1].is_zero
    d = make_free().propagator[0][0]
    assert vx_greens([m.phi(1), m.phi(2)]).is_zero
    assert vx_greens([m.phi(2), m.phi(2)]) == d
    four = vx_greens([m.phi(1), m.phi(2), m.phi(1), m.phi(2)])
    vs = frozenset({1, 2, 3, 4})
    assert four == sf_rename(d, {1: 1, 2: 3}, vs) * sf_rename(d, {1: 2, 2: 4}, vs)


# -- merging and vertex operators --------------------------------------------------------

def test_merge_single_variable(a1):
    u = a1.e((1,)) * a1.a(1, 1)
    s = vx_expand_merge(vx_embed(u, 1), 1, (1,), 4)
    for k in range(5):
        assert s.coefficient(k) == hm_d_action(u, k)
    assert s.coefficient(0) == u
    one = vx_expand_merge(vx_embed(a1.one(), 1), 1, (1,), 4)
    assert one.terms == {(0,): a1.one()}


def test_merge_matches_y(a1):
    e = a1.e
    w = vx_twisted_product(vx_embed(e((1,)), 1), vx_embed(e((-1,)), 2))
    s = vx_expand_merge(w, 1, (1,), 3, at_zero=(2,))
    assert s.terms == vx_Y(e((1,)), e((-1,)), 3).terms


@pytest.mark.parametrize("n, m", [(1, -1), (1, 1), (-1, 2), (2, -1), (1, 0)])
def test_y_on_lattice_matches_vertex_operator_formula(a1, n, m):
    cutoff = 4
    s = vx_Y(a1.e((n,)), a1.e((m,)), cutoff)
    ip = 2 * n * m
    expect = {}
    for k in range(cutoff - ip + 1):
        coeff = hm_dgen(a1, (n,), k) * a1.e((m,))
        if coeff:
            expect[(ip + k,)] = coeff
    assert s.terms == expect


def test_y_examples(a1, free):
    s = vx_Y(a1.e((1,)), a1.e((-1,)), 2)
    assert s.coefficient(-2) == a1.one()
    assert s.coefficient(-1) == a1.a(1, 1)
    assert s.coefficient(0) == a1.a(1, 2)
    assert vx_Y(a1.one(), a1.e((1,)), 3).terms == {(0,): a1.e((1,))}
    phi = free.phi(1)
    s = vx_Y(phi, phi, 3)
    assert s.coefficient(-2) == free.one()
    assert not s.coefficient(-1)
    for k in range(4):
        assert s.coefficient(k) == free.phi(1, k) * phi


def test_mode_examples(a1, free):
    assert vx_mode(a1.e((1,)), 1, a1.e((-1,))) == a1.one()
    for n in range(-3, 3):
        expect = a1.e((1,)) if n == -1 else a1.zero()
        assert vx_mode(a1.one(), n, a1.e((1,))) == expect
    assert vx_mode(free.phi(1), 1, free.phi(1)) == free.one()


def test_translation_covariance(a1):
    a, b = a1.e((1,)), a1.e((-1,)) * a1.a(1, 1)
    base = vx_Y(a, b, 5)
    for i in range(1, 3):
        assert vx_Y(hm_d_action(a, i), b, 5 - i).terms == series_divided_deriv(base, 1, i).terms


def test_creation(a1, free):
    for model in (a1, free):
        for bb in enumerate_basis(model, 2):
            a = as_element(model, bb)
            s = vx_Y(a, model.one(), 3)
            assert all(e[0] >= 0 for e in s.terms)
            assert s.coefficient(0) == a


def test_series_lines(a1):
    lines = vx_Y(a1.e((1,)), a1.e((-1,)), 0).lines()
    assert lines == [("x^-2", "1"), ("x^-1", "A{1,1}"), ("x^0", "A{1,2}")]


def test_series_window(a1):
    s = vx_Y(a1.e((1,)), a1.e((-1,)), 3)
    assert s.restrict(1).terms == vx_Y(a1.e((1,)), a1.e((-1,)), 1).terms
    with pytest.raises(UsageError):
        s.restrict(5)
    with pytest.raises(UsageError):
        s == vx_Y(a1.e((1,)), a1.e((-1,)), 2)


# -- associativity and braiding ----------------------------------------------------------

POOL = enumerate_basis(make_model([[2]], mode="quantum"), 2, radius=2)


@settings(max_examples=20)
@given(st.tuples(*[st.sampled_from(POOL)] * 3))
def test_associativity_quantum(triple):
    model = make_model([[2]], mode="quantum")
    u, v, w = (vx_embed(as_element(model, b), k) for k, b in zip((1, 2, 3), triple))
    left = vx_twisted_product(vx_twisted_product(u, v), w)
    right = vx_twisted_product(u, vx_twisted_product(v, w))
    assert left == right


def test_exchange_relation(qa1):
    e = qa1.e((1,))
    ab = vx_twisted_product(vx_embed(e, 1), vx_embed(e, 2))
    ba = vx_twisted_product(vx_embed(e, 2), vx_embed(e, 1))
    assert ab * P("x1-q^2*x2") == ba * P("q^2*x1-x2")
    assert ab != ba


def test_r_matrix_examples(a1, qa1):
    for b1 in enumerate_basis(a1, 2):
        for b2 in enumerate_basis(a1, 2):
            w = vx_tensor(vx_embed(as_element(a1, b1), 1), vx_embed(as_element(a1, b2), 2))
            assert vx_R_apply(w) == w
    for b in enumerate_basis(qa1, 2):
        w = vx_tensor(vx_embed(qa1.one(), 1), vx_embed(as_element(qa1, b), 2))
        assert vx_R_apply(w) == w
    e = qa1.e((1,))
    w = vx_tensor(vx_embed(e, 1), vx_embed(e, 2))
    charge = bc_eval(bc_charge(bc_model(qa1)), e, e)
    assert vx_R_apply(w) == w * sf_rename(charge, {1: 2, 2: 1})


def test_r_matrix_intertwines_products(qa1):
    """m R = m tau: R followed by the product in slot order equals the product
    taken in the opposite order."""
    r = bc_model(qa1)
    for b1 in enumerate_basis(qa1, 2, radius=1)[:12]:
        for b2 in enumerate_basis(qa1, 1, radius=1):
            w = vx_tensor(vx_embed(as_element(qa1, b1), 1), vx_embed(as_element(qa1, b2), 2))
            lhs = vx_pair(vx_R_apply(w), [1], [2], r)
            assert lhs == vx_pair(w, [2], [1], r)


# -- residues -------------------------------------------------------------------------

def test_contour_examples(a1):
    e = a1.e
    w = vx_twisted_product(vx_embed(e((1,)), 1), vx_embed(e((-1,)), 2))
    assert vx_contour(w, 1, 2) == vx_embed(a1.a(1, 1), 2)
    regular = vx_twisted_product(vx_embed(e((1,)), 1), vx_embed(e((1,)), 2))
    assert not vx_contour(regular, 1, 2)


def test_contour_reads_the_minus_one_mode(a1, free):
    for model, a, b in [(a1, a1.e((1,)), a1.e((-1,)) * a1.a(1, 1)),
                        (a1, a1.e((-1,)), a1.e((2,))),
                        (free, free.phi(1), free.phi(1) ** 2)]:
        w = vx_twisted_product(vx_embed(a, 1), vx_embed(b, 2))
        assert vx_contour(w, 1, 2) == vx_embed(vx_mode(a, 0, b), 2)


def test_contour_commutator_identity(a1):
    """res_1 res_2 (a b c) - res_2 res_1 (b a c) = res_2 res_1-around-2 (a b c)."""
    for a, b, c in [(a1.e((1,)), a1.e((-1,)), a1.e((1,))),
                    (a1.e((1,)), a1.e((-1,)) * a1.a(1, 1), a1.e((0,)) * a1.a(1, 1)),
                    (a1.e((-1,)), a1.e((-1,)), a1.e((2,)))]:
        p = vx_twisted_product(vx_twisted_product(vx_embed(a, 1), vx_embed(b, 2)),
                               vx_embed(c, 3))
        q = vx_twisted_product(vx_twisted_product(vx_embed(b, 2), vx_embed(a, 1)),
                               vx_embed(c, 3))
        lhs = vx_contour(vx_contour(p, 2, 3), 1, 3) - vx_contour(vx_contour(q, 1, 3), 2, 3)
        assert lhs == vx_contour(vx_contour(p, 1, 2), 2, 3)


def test_contour_errors(a1):
    w = vx_embed(a1.e((1,)), 1)
    with pytest.raises(UsageError):
        vx_contour(w, 1, 1)
    with pytest.raises(UsageError):
        vx_contour(w, 1, 2)


# -- tensor models ---------------------------------------------------------------------

def test_tensor_model(a1):
    m = vx_tensor_model(a1, a1)
    assert m.gram == ((2, 0), (0, 2))
    r = bc_model(m)
    assert bc_eval(r, m.e((1, 0)), m.e((0, 1))) == 1
    x = embed_tensor(m, a1.e((1,)) * a1.a(1, 1), 2, a1)
    assert x == m.e((0, 1)) * m.a(2, 1)
    with pytest.raises(UsageError):
        vx_tensor_model(a1, make_model([[2]], mode="quantum"))


def test_tensor_model_factorizes(a1):
    m = vx_tensor_model(a1, a1)
    s = vx_Y(m.e((1, 0)), m.e((-1, 0)), 1)
    t = vx_Y(a1.e((1,)), a1.e((-1,)), 1)
    assert {e: embed_tensor(m, c, 1, a1) for e, c in t.terms.items()} == s.terms


def test_states_check_compatibility(a1, qa1):
    with pytest.raises(UsageError):
        vx_tensor(vx_embed(a1.one(), 1), vx_embed(a1.one(), 1))
    with pytest.raises(UsageError):
        vx_tensor(vx_embed(a1.one(), 1), vx_embed(qa1.one(), 2))
    with pytest.raises(UsageError):
        vx_embed(a1.one(), 1) + vx_embed(a1.one(), 2)
