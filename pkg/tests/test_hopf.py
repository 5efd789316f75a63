from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given, strategies as st

from vfalg.errors import ResourceError, UsageError
from vfalg.hopf import (
    FIELD, LATTICE, Basis, HMElement, as_element, basis_mul, enumerate_basis, hm_antipode,
    hm_coproduct, hm_counit, hm_d_action, hm_dgen, hm_product, make_model,
)
from vfalg.scalar import ONE, ScalarQ

from conftest import make_free


def tensor(model, pairs):
    """Sweedler dict from ``[(left, right, coeff)]`` of HMElements."""
    out = {}
    for u, v, c in pairs:
        for b1, c1 in u.terms.items():
            for b2, c2 in v.terms.items():
                out[(b1, b2)] = out.get((b1, b2), 0) + c * c1 * c2
    return {k: v for k, v in out.items() if v}


# -- examples -------------------------------------------------------------------

def test_basis_product(a1, free):
    u = a1.e((1,)) * a1.a(1, 1)
    assert u * a1.e((1,)) == a1.e((2,)) * a1.a(1, 1)
    assert u * a1.one() == u
    sq = free.phi(1) * free.phi(1)
    (b,) = sq.terms
    assert b.gens == ((FIELD, 1, 0), (FIELD, 1, 0))


def test_coproduct_examples(a1, free):
    one = a1.one()
    d = hm_coproduct(a1.a(1, 2))
    assert d.terms == tensor(a1, [(a1.a(1, 2), one, 1), (a1.a(1, 1), a1.a(1, 1), 1),
                                  (one, a1.a(1, 2), 1)])
    assert hm_coproduct(a1.e((1,))).terms == tensor(a1, [(a1.e((1,)), a1.e((1,)), 1)])
    p = free.phi(1, 1)
    assert hm_coproduct(p).terms == tensor(free, [(p, free.one(), 1), (free.one(), p, 1)])


def test_counit_examples(a1, free):
    assert hm_counit(a1.e((1,))) == 1
    assert hm_counit(a1.a(1, 1)) == 0
    assert hm_counit(free.one() + free.phi(1) * 2) == 1


def test_antipode_examples(a1):
    assert hm_antipode(a1.e((1,))) == a1.e((-1,))
    assert hm_antipode(a1.a(1, 1)) == -a1.a(1, 1)
    assert hm_antipode(a1.a(1, 2)) == a1.a(1, 1) * a1.a(1, 1) - a1.a(1, 2)


def test_d_action_examples(a1):
    assert hm_d_action(a1.a(1, 1), 1) == a1.a(1, 2) * 2 - a1.a(1, 1) * a1.a(1, 1)
    u = a1.e((1,)) * a1.a(1, 1)
    assert hm_d_action(hm_d_action(u, 2), 1) == hm_d_action(u, 3) * 3
    for k in range(4):
        assert hm_d_action(a1.one(), k) == (a1.one() if k == 0 else a1.zero())


def test_dgen_examples(a1):
    assert hm_dgen(a1, (1,), 1) == a1.e((1,)) * a1.a(1, 1)
    assert hm_dgen(a1, (-1,), 1) == -(a1.e((-1,)) * a1.a(1, 1))
    assert hm_dgen(a1, (0,), 0) == a1.one()
    assert hm_dgen(a1, (0,), 2) == a1.zero()
    with pytest.raises(UsageError):
        hm_dgen(a1, (1, 0), 1)


def test_b_series_inverts_a_series(a1):
    # e^alpha D^(i) e^-alpha = b_i with sum_j a_j b_{i-j} = delta_{i,0}
    b = [a1.e((1,)) * hm_dgen(a1, (-1,), i) for i in range(6)]
    a = [a1.one()] + [a1.a(1, i) for i in range(1, 6)]
    for i in range(6):
        total = a1.zero()
        for j in range(i + 1):
            total = total + a[j] * b[i - j]
        assert total == (a1.one() if i == 0 else a1.zero())


# -- free-boson realization oracle -------------------------------------------------
# a_{k,i} maps to the complete Schur polynomial S_i in oscillators alpha_k(-n),
# phi_{j,i} to psi_j(i)/i!, and D is the derivation with D alpha(-n) = n alpha(-n-1),
# D psi(i) = psi(i+1), D e^beta = sum_k beta_k alpha_k(-1) e^beta.

def p_mul(p, r):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in r.items():
            acc = dict(m1)
            for v, e in m2:
                acc[v] = acc.get(v, 0) + e
            m = tuple(sorted(acc.items()))
            out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c}


def p_add(p, r, s=1):
    out = dict(p)
    for m, c in r.items():
        out[m] = out.get(m, 0) + s * c
    return {m: c for m, c in out.items() if c}


def p_var(v, c=1):
    return {((v, 1),): Fraction(c)}


P_ONE = {(): Fraction(1)}


def d_var(v):
    kind, k, n = v
    if kind == "a":
        return p_var(("a", k, n + 1), n)
    return p_var(("f", k, n + 1))


def p_deriv(p):
    out = {}
    for m, c in p.items():
        for idx, (v, e) in enumerate(m):
            rest = dict(m)
            rest[v] -= 1
            if not rest[v]:
                del rest[v]
            term = p_mul({tuple(sorted(rest.items())): c * e}, d_var(v))
            out = p_add(out, term)
    return out


def schur(k, i, memo={}):
    if (k, i) not in memo:
        if i == 0:
            memo[(k, i)] = P_ONE
        else:
            acc = {}
            for n in range(1, i + 1):
                acc = p_add(acc, p_mul(p_var(("a", k, n)), schur(k, i - n)))
            memo[(k, i)] = {m: c / i for m, c in acc.items()}
    return memo[(k, i)]


def realize(u):
    """HMElement to {alpha: oscillator polynomial}."""
    out = {}
    for b, c in u.terms.items():
        p = {(): Fraction(str(c.to_rational()))}
        for kind, idx, i in b.gens:
            if kind == LATTICE:
                p = p_mul(p, schur(idx, i))
            else:
                p = p_mul(p, p_var(("f", idx, i), Fraction(1, factorial(i))))
        out[b.alpha] = p_add(out.get(b.alpha, {}), p)
    return {a: p for a, p in out.items() if p}


def realize_d(image, k):
    """D^k / k! in the oscillator picture."""
    for _ in range(k):
        nxt = {}
        for alpha, p in image.items():
            shift = {}
            for idx, m in enumerate(alpha, 1):
                if m:
                    shift = p_add(shift, p_var(("a", idx, 1), m))
            q = p_add(p_deriv(p), p_mul(shift, p))
            nxt[alpha] = p_add(nxt.get(alpha, {}), q)
        image = {a: p for a, p in nxt.items() if p}
    return {a: {m: c / factorial(k) for m, c in p.items()} for a, p in image.items()}


MIXED = make_model([[2, 1], [1, 2]], [[make_free().propagator[0][0]]])


@pytest.mark.parametrize("model", [make_model([[2]]), make_model([[2, -1], [-1, 2]]), MIXED],
                         ids=["A1", "A2", "mixed"])
def test_d_action_matches_oscillator_oracle(model):
    for b in enumerate_basis(model, 3, radius=1):
        u = as_element(model, b)
        base = realize(u)
        for k in range(1, 4):
            assert realize(hm_d_action(u, k)) == realize_d(base, k), (b, k)


def test_dgen_matches_oracle():
    model = make_model([[2]])
    for m in (-2, -1, 1, 2):
        for i in range(5):
            expect = realize_d({(m,): P_ONE}, i)
            assert realize(hm_dgen(model, (m,), i)) == expect


# -- structural properties on all basis monomials -------------------------------------

def models():
    return [make_model([[2]]), make_model([[2]], mode="quantum"), make_free(), MIXED]


def basis_of(model, deg):
    return enumerate_basis(model, deg, radius=1)


def apply_left(model, d2, n):
    """(Delta (x) 1) applied to a two-fold Sweedler dict, as a three-fold dict."""
    out = {}
    for (b1, b2), c in d2.items():
        for (x, y), k in hm_coproduct(as_element(model, b1)).terms.items():
            key = (x, y, b2)
            out[key] = out.get(key, 0) + c * k
    return {k: v for k, v in out.items() if v}


def apply_right(model, d2):
    out = {}
    for (b1, b2), c in d2.items():
        for (x, y), k in hm_coproduct(as_element(model, b2)).terms.items():
            key = (b1, x, y)
            out[key] = out.get(key, 0) + c * k
    return {k: v for k, v in out.items() if v}


@pytest.mark.parametrize("model", models(), ids=["A1", "qA1", "free", "mixed"])
def test_coassociativity_and_counit(model):
    for b in basis_of(model, 5 if model.nfields == 0 else 4):
        u = as_element(model, b)
        d2 = hm_coproduct(u)
        d3 = hm_coproduct(u, 3).terms
        assert apply_left(model, d2.terms, 3) == d3
        assert apply_right(model, d2.terms) == d3
        assert d2.contract(0) == u and d2.contract(1) == u


@pytest.mark.parametrize("model", models(), ids=["A1", "qA1", "free", "mixed"])
def test_antipode_law(model):
    for b in basis_of(model, 5 if model.nfields == 0 else 4):
        u = as_element(model, b)
        left = model.zero()
        right = model.zero()
        for (x, y), c in hm_coproduct(u).terms.items():
            left = left + hm_antipode(as_element(model, x)) * as_element(model, y) * c
            right = right + as_element(model, x) * hm_antipode(as_element(model, y)) * c
        expect = model.one() * hm_counit(u)
        assert left == expect and right == expect


@st.composite
def basis_pairs(draw, pool):
    return draw(st.sampled_from(pool)), draw(st.sampled_from(pool))


A1_POOL = enumerate_basis(make_model([[2]]), 3, radius=2)
MIXED_POOL = enumerate_basis(MIXED, 3, radius=1)


@pytest.mark.parametrize("model, pool", [(make_model([[2]]), A1_POOL), (MIXED, MIXED_POOL)],
                         ids=["A1", "mixed"])
def test_coproduct_is_multiplicative(model, pool):
    @given(basis_pairs(pool))
    def check(pair):
        b1, b2 = pair
        u, v = as_element(model, b1), as_element(model, b2)
        lhs = hm_coproduct(u * v).terms
        rhs = {}
        for (x1, y1), c1 in hm_coproduct(u).terms.items():
            for (x2, y2), c2 in hm_coproduct(v).terms.items():
                key = (basis_mul(x1, x2), basis_mul(y1, y2))
                rhs[key] = rhs.get(key, 0) + c1 * c2
        assert lhs == {k: c for k, c in rhs.items() if c}
        assert hm_counit(u * v) == hm_counit(u) * hm_counit(v)
        assert hm_antipode(u * v) == hm_antipode(u) * hm_antipode(v)

    check()


@pytest.mark.parametrize("model, pool", [(make_model([[2]]), A1_POOL), (MIXED, MIXED_POOL)],
                         ids=["A1", "mixed"])
def test_d_module_law_and_leibniz(model, pool):
    @given(basis_pairs(pool), st.integers(0, 3), st.integers(0, 3))
    def check(pair, i, j):
        u, v = as_element(model, pair[0]), as_element(model, pair[1])
        assert hm_d_action(hm_d_action(u, j), i) == hm_d_action(u, i + j) * comb(i + j, i)
        rhs = model.zero()
        for t in range(i + 1):
            rhs = rhs + hm_d_action(u, t) * hm_d_action(v, i - t)
        assert hm_d_action(u * v, i) == rhs

    check()


def test_coproduct_commutes_with_d(a1):
    # Delta D^(k) = sum D^(i) (x) D^(k-i) applied to Delta
    for b in basis_of(a1, 2):
        u = as_element(a1, b)
        for k in range(3):
            lhs = hm_coproduct(hm_d_action(u, k)).terms
            pairs = []
            for (x, y), c in hm_coproduct(u).terms.items():
                for i in range(k + 1):
                    pairs.append((hm_d_action(as_element(a1, x), i),
                                  hm_d_action(as_element(a1, y), k - i), c))
            assert lhs == tensor(a1, pairs)


def test_enumeration_counts(a1, free):
    # partitions of d: 1, 1, 2, 3 per lattice point; fields have the same count
    assert len(enumerate_basis(a1, 3, radius=1)) == 3 * (1 + 1 + 2 + 3)
    assert len(enumerate_basis(free, 3)) == 1 + 1 + 2 + 3
    assert all(b.degree <= 3 for b in enumerate_basis(a1, 3, radius=2))


def test_degree_cap(monkeypatch):
    model = make_model([[2]], max_degree=4)
    model.a(1, 4)
    with pytest.raises(ResourceError):
        model.a(1, 5)
    with pytest.raises(ResourceError):
        hm_d_action(model.e((1,)), 5)
    monkeypatch.setenv("VF_MAX_DEGREE", "3")
    capped = make_model([[2]])
    assert capped.max_degree == 3
    with pytest.raises(ResourceError):
        capped.a(1, 4)
    monkeypatch.setenv("VF_MAX_DEGREE", "many")
    with pytest.raises(UsageError):
        make_model([[2]])


def test_model_validation():
    with pytest.raises(UsageError, match="symmetric"):
        make_model([[2, 1], [0, 2]])
    with pytest.raises(UsageError, match="odd"):
        make_model([[1]])
    with pytest.raises(UsageError):
        make_model([[2]], mode="fancy")
    a1 = make_model([[2]])
    with pytest.raises(UsageError):
        a1.e((1,)) + make_model([[4]]).e((1,))


def test_elements_are_values(a1):
    u = a1.e((1,)) * a1.a(1, 1) + a1.one() * ScalarQ.q_power(1)
    v = a1.one() * ScalarQ.q_power(1) + a1.a(1, 1) * a1.e((1,))
    assert u == v and hash(u) == hash(v)
    assert isinstance(hm_product(u, v), HMElement)
    assert (u - v).terms == {}
    assert Basis((0,), ()).degree == 0
    assert hm_counit(a1.one() * ONE) == 1
