"""Exact verification suites for twisted-product models.

Every check compares canonical values, so a pass means exact equality on the
inputs examined.  Pairs are enumerated exhaustively (lattice coordinates in
``[-1, 1]``); triples are sampled from a seeded generator with coordinates in
``[-2, 2]``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .bichar import BC_PROPERTIES, bc_charge, bc_check, bc_model
from .errors import ResourceError, UsageError
from .exprparse import format_basis
from .hopf import FIELD, Basis, HMElement, as_element, basis_taylor, enumerate_basis
from .scalar import ONE, ScalarQ
from .sfield import SingularFn
from .vertex import (
    StateVector, series_divided_deriv, vx_contour, vx_embed, vx_expand_merge, vx_pair,
    vx_tensor, vx_twisted_product, vx_Y,
)

CHECKS = (
    "associativity", "bichar", "braiding", "commutativity", "compat", "contour",
    "creation", "exchange", "locality", "symmetry", "translation", "unit",
    "unitarity", "vacuum", "yang_baxter",
)
INFORMATIONAL = frozenset({"unitarity"})
# checks that a braided (non-symmetric) model is expected to fail
BRAIDED_XFAIL = frozenset({"commutativity", "contour", "locality", "symmetry"})


@dataclass
class CheckReport:
    name: str
    status: str
    checked: int = 0
    inputs: str = ""
    witness: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self):
        return self.status in ("pass", "xfail", "info")

    @property
    def mandatory(self):
        return self.name not in INFORMATIONAL

    def __str__(self):
        text = f"{self.name}: {self.status} ({self.checked} cases{', ' + self.inputs if self.inputs else ''})"
        extras = [f"{k}={v}" for k, v in self.witness.items()]
        if extras:
            text += " " + " ".join(extras)
        if self.detail:
            text += f"; {self.detail}"
        return text


def _name(model, b):
    return format_basis(model, b) or "1"


def _names(model, *bs):
    return "(" + ", ".join(_name(model, b) for b in bs) + ")"


def _state(model, b, var):
    return vx_embed(as_element(model, b), var)


def _triple(model, a, b, c):
    return vx_tensor(vx_tensor(_state(model, a, 1), _state(model, b, 2)), _state(model, c, 3))


def _product(model, a, b, i=1, j=2):
    """``a@i o b@j`` for basis monomials."""
    return vx_twisted_product(_state(model, a, i), _state(model, b, j))


# -- individual checks --------------------------------------------------------------
# Each returns ``(checked, failure)`` where failure is None or (inputs, detail).

def check_unit(model, basis):
    one = model.unit_basis()
    for n, b in enumerate(basis, 1):
        expect = vx_tensor(_state(model, one, 1), _state(model, b, 2))
        left = _product(model, one, b)
        expect2 = vx_tensor(_state(model, b, 1), _state(model, one, 2))
        right = _product(model, b, one)
        if left != expect or right != expect2:
            return n, (_names(model, b), "1 o b or b o 1 differs from b")
    return len(basis), None


def check_commutativity(model, basis):
    """``a@1 o b@2 = b@2 o a@1``, the state space V(1:2) being symmetric in its slots."""
    n = 0
    for a, b in itertools.combinations_with_replacement(basis, 2):
        n += 1
        lhs = _product(model, a, b)
        rhs = vx_twisted_product(_state(model, b, 2), _state(model, a, 1))
        if lhs != rhs:
            return n, (_names(model, a, b), f"a o b = {_short(lhs)} but b o a = {_short(rhs)}")
    return n, None


def check_symmetry(model, basis):
    reports = bc_check(bc_model(model), ["symmetry"], max((b.degree for b in basis), default=0),
                       basis=basis)
    rep = reports[0]
    if rep.passed:
        return rep.checked, None
    return rep.checked, (rep.detail.split(":")[0], rep.detail)


def check_bichar(model, degree, basis):
    props = [p for p in BC_PROPERTIES if p != "symmetry"]
    reports = bc_check(bc_model(model), props, degree, basis=basis)
    total = sum(r.checked for r in reports)
    for rep in reports:
        if not rep.passed:
            return total, (rep.property, str(rep))
    return total, None


def check_associativity(model, triples):
    for n, (a, b, c) in enumerate(triples, 1):
        w = _triple(model, a, b, c)
        lhs = vx_pair(vx_pair(w, [1], [2]), [1, 2], [3])
        rhs = vx_pair(vx_pair(w, [2], [3]), [1], [2, 3])
        if lhs != rhs:
            return n, (_names(model, a, b, c), "(a o b) o c != a o (b o c)")
    return len(triples), None


def _charge(model):
    return bc_charge(bc_model(model))


def check_braiding(model, pairs):
    """``m R = m tau``: R applied before the product of the swapped slots."""
    r = bc_model(model)
    rc = _charge(model)
    for n, (a, b) in enumerate(pairs, 1):
        w = vx_tensor(_state(model, a, 1), _state(model, b, 2))
        lhs = vx_pair(vx_pair(w, [2], [1], rc), [1], [2], r)
        rhs = vx_pair(w, [2], [1], r)
        if lhs != rhs:
            return n, (_names(model, a, b), "m R != m tau")
    return len(pairs), None


def check_compat(model, triples):
    """Compatibility of R with the product, in both slots."""
    rc = _charge(model)
    for n, (a, b, c) in enumerate(triples, 1):
        w = _triple(model, a, b, c)
        # R_{1,(23)} m_23 = m_23 R_12 R_13
        lhs = vx_pair(vx_pair(vx_pair(w, [3], [1], rc), [2], [1], rc), [2], [3])
        rhs = vx_pair(vx_pair(w, [2], [3]), [2, 3], [1], rc)
        if lhs != rhs:
            return n, (_names(model, a, b, c), "R_1(23) m_23 != m_23 R_12 R_13")
        # R_{(12),3} m_12 = m_12 R_23 R_13
        lhs = vx_pair(vx_pair(vx_pair(w, [3], [1], rc), [3], [2], rc), [1], [2])
        rhs = vx_pair(vx_pair(w, [1], [2]), [3], [1, 2], rc)
        if lhs != rhs:
            return n, (_names(model, a, b, c), "R_(12)3 m_12 != m_12 R_23 R_13")
    return len(triples), None


def _R(w, i, j, rc):
    return vx_pair(w, [j], [i], rc)


def check_yang_baxter(model, triples):
    rc = _charge(model)
    for n, (a, b, c) in enumerate(triples, 1):
        w = _triple(model, a, b, c)
        lhs = _R(_R(_R(w, 2, 3, rc), 1, 3, rc), 1, 2, rc)
        rhs = _R(_R(_R(w, 1, 2, rc), 1, 3, rc), 2, 3, rc)
        if lhs != rhs:
            return n, (_names(model, a, b, c), "R12 R13 R23 != R23 R13 R12")
    return len(triples), None


def check_unitarity(model, pairs):
    rc = _charge(model)
    for n, (a, b) in enumerate(pairs, 1):
        w = vx_tensor(_state(model, a, 1), _state(model, b, 2))
        if _R(_R(w, 1, 2, rc), 2, 1, rc) != w:
            return n, (_names(model, a, b), "R21 R12 != id")
    return len(pairs), None


def locality_bound(model, a: Basis, b: Basis):
    """A-priori bound on the (x1 - x2) pole order of ``a@1 o b@2`` from generator pairings."""
    bound = a.degree + b.degree
    if model.rank:
        ip = sum(x * model.gram[i][j] * y for i, x in enumerate(a.alpha)
                 for j, y in enumerate(b.alpha))
        bound += max(0, -ip)
    if model.nfields:
        worst = max((f.pole_order(1, 2) for row in model.propagator for f in row), default=0)
        na = sum(1 for g in a.gens if g[0] == FIELD)
        nb = sum(1 for g in b.gens if g[0] == FIELD)
        bound += worst * min(na, nb)
    return bound


def locality_order(model, a: Basis, b: Basis, c: Basis, cutoff: int, limit=None):
    """Minimal N with ``(x1 - x2)^N [Y(a, x1), Y(b, x2)] c = 0`` through ``cutoff``.

    Returns ``(N or None, expected, bound)`` where ``expected`` is the
    largest ``(x1 - x2)`` pole order among the coefficients of ``a o b``.
    """
    ab = _product(model, a, b)
    expected = max((f.pole_order(1, 2) for f in ab.terms.values()), default=0)
    bound = locality_bound(model, a, b)
    limit = max(bound, expected) + 1 if limit is None else limit
    cs = _state(model, c, 3)
    p = vx_twisted_product(ab, cs)
    qq = vx_twisted_product(vx_twisted_product(_state(model, b, 2), _state(model, a, 1)), cs)
    vs = p.varset
    for n in range(limit + 1):
        f = SingularFn.factor(1, 2, 0, n, vs)
        s1 = vx_expand_merge(p * f, None, (1, 2), cutoff, at_zero=(3,))
        s2 = vx_expand_merge(qq * f, None, (2, 1), cutoff, at_zero=(3,))
        if s1.terms == s2.terms:
            return n, expected, bound
    return None, expected, bound


def check_locality(model, pairs, c, cutoff):
    worst = None
    for n, (a, b) in enumerate(pairs, 1):
        found, expected, bound = locality_order(model, a, b, c, cutoff)
        witness = {"N": found, "pole_order": expected, "bound": bound}
        if found != expected or expected > bound:
            return n, (_names(model, a, b, c),
                       f"minimal N = {found}, pole order {expected}, bound {bound}"), witness
        if worst is None or found > worst["N"]:
            worst = dict(witness, pair=_names(model, a, b))
    return len(pairs), None, worst or {}


def check_vacuum(model, basis, cutoff):
    one = model.one()
    for n, b in enumerate(basis, 1):
        s = vx_Y(one, as_element(model, b), cutoff)
        if s.terms != {(0,): as_element(model, b)}:
            return n, (_names(model, b), f"Y(1, x) b = {s}")
    return len(basis), None


def check_creation(model, basis, cutoff):
    one = model.one()
    for n, a in enumerate(basis, 1):
        s = vx_Y(as_element(model, a), one, cutoff)
        if any(e[0] < 0 for e in s.terms) or s.coefficient(0) != as_element(model, a):
            return n, (_names(model, a), "Y(a, x) 1 has poles or constant term != a")
    return len(basis), None


def check_translation(model, pairs, cutoff, max_order=2):
    n = 0
    for a, b in pairs:
        try:
            base = vx_Y(as_element(model, a), as_element(model, b), cutoff)
            taylor = basis_taylor(model, a, max_order)
        except ResourceError:
            continue  # the expansion needs degrees beyond the model cap
        for i in range(1, max_order + 1):
            try:
                lhs = vx_Y(HMElement(model, dict(taylor[i])), as_element(model, b), cutoff - i)
            except ResourceError:
                break
            n += 1
            rhs = series_divided_deriv(base, 1, i)
            if lhs.terms != rhs.terms:
                return n, (_names(model, a, b), f"Y(D^({i}) a, x) b != d^({i}) Y(a, x) b")
    return n, None


def check_contour(model, triples):
    """The commutator identity for iterated residues."""
    for n, (a, b, c) in enumerate(triples, 1):
        p = vx_twisted_product(_product(model, a, b), _state(model, c, 3))
        q = vx_twisted_product(_product(model, b, a, 2, 1), _state(model, c, 3))
        t1 = vx_contour(vx_contour(p, 2, 3), 1, 3)
        t2 = vx_contour(vx_contour(q, 1, 3), 2, 3)
        rhs = vx_contour(vx_contour(p, 1, 2), 2, 3)
        if t1 - t2 != rhs:
            return n, (_names(model, a, b, c), "iterated residue identity fails")
    return len(triples), None


def check_exchange(model):
    """``(x1 - q^N x2) e^a(x1) e^b(x2) = c (q^N x1 - x2) e^b(x2) e^a(x1)`` on basis vectors.

    ``N = (a, b)``, ``c = eps(a, b) eps(b, a) (-1)^N`` (1 for the standard
    cocycle) and q is 1 in classical models.
    """
    n = 0
    vs = (1, 2)
    for i in range(model.rank):
        for j in range(model.rank):
            for si, sj in itertools.product((1, -1), repeat=2):
                n += 1
                ai = tuple(si if k == i else 0 for k in range(model.rank))
                aj = tuple(sj if k == j else 0 for k in range(model.rank))
                N = si * sj * model.gram[i][j]
                sign = model.cocycle_sign(i, j) * model.cocycle_sign(j, i) * (-1) ** N
                a, b = Basis(ai, ()), Basis(aj, ())
                u = _product(model, a, b)
                v = vx_twisted_product(_state(model, b, 2), _state(model, a, 1))
                qn = ScalarQ.q_power(N) if model.mode == "quantum" else ONE
                left = SingularFn.monomial({1: 1}, ONE, vs) - SingularFn.monomial({2: 1}, qn, vs)
                right = (SingularFn.monomial({1: 1}, qn, vs)
                         - SingularFn.monomial({2: 1}, ONE, vs))
                if u * left != v * right * sign:
                    return n, (_names(model, a, b), "exchange relation fails")
    return n, None


def _short(u: StateVector, limit=120):
    text = " + ".join(str(u).splitlines())
    return text if len(text) <= limit else text[:limit] + "..."


# -- suite driver ---------------------------------------------------------------

def parse_suite(text):
    """Split a comma-separated suite spec into ``(checks, expect)``.

    The token ``all`` selects every check; ``expect:braided`` marks the
    symmetric-only checks as expected failures.
    """
    names, expect = [], None
    for tok in (t.strip() for t in (text or "all").split(",")):
        if not tok:
            continue
        if tok.startswith("expect:"):
            expect = tok.split(":", 1)[1].strip()
            if expect not in ("braided", "symmetric"):
                raise UsageError(f"unknown expectation {expect!r}; use braided or symmetric")
        elif tok == "all":
            names.extend(CHECKS)
        elif tok in CHECKS:
            names.append(tok)
        else:
            raise UsageError(f"unknown check {tok!r}; known checks: {', '.join(CHECKS)}")
    return sorted(set(names)), expect


def _sample_pool(model, degree, radius=2):
    key = ("pool", degree, radius)
    pool = model._cache.get(key)
    if pool is None:
        pool = model._cache[key] = list(enumerate_basis(model, degree, radius))
    return pool


def sample_triples(model, degree, count, rng, per_element=False):
    """Seeded uniform sample of basis triples, lattice coordinates in ``[-2, 2]``.

    By default the triple ``a (x) b (x) c`` is a basis element of the third
    tensor power and its D-degree is ``deg a + deg b + deg c``.  With
    ``per_element=True`` each entry is drawn independently with degree at
    most ``degree``.
    """
    pool = _sample_pool(model, degree)
    if per_element:
        return [tuple(rng.choice(pool) for _ in range(3)) for _ in range(count)]
    by_degree = {}
    for b in pool:
        by_degree.setdefault(b.degree, []).append(b)
    shapes = [(d1, d2, d3) for d1 in by_degree for d2 in by_degree for d3 in by_degree
              if d1 + d2 + d3 <= degree]
    weights = [len(by_degree[d1]) * len(by_degree[d2]) * len(by_degree[d3])
               for d1, d2, d3 in shapes]
    return [tuple(rng.choice(by_degree[d]) for d in shape)
            for shape in rng.choices(shapes, weights, k=count)]


def vx_verify(suite, model, degree=3, series_cutoff=6, seed=0, expect=None, samples=None):
    """Run the named checks and return reports sorted by name.

    ``suite`` is an iterable of check names (see :data:`CHECKS`).  ``samples``
    is the number of random triples (default 20).  With ``expect="braided"``
    failures of the checks in :data:`BRAIDED_XFAIL` are expected.
    """
    names = sorted(set(suite))
    unknown = set(names) - set(CHECKS)
    if unknown:
        raise UsageError(f"unknown checks: {sorted(unknown)}")
    samples = 20 if samples is None else samples
    basis = enumerate_basis(model, degree, radius=1)
    pairs = list(itertools.combinations_with_replacement(basis, 2))
    triple_degree = min(degree, 2) if "contour" in names else degree
    reports = []
    for name in names:
        rng = random.Random(f"{seed}:{name}")
        witness = {}
        inputs = f"degree <= {degree}"
        if name == "unit":
            checked, fail = check_unit(model, basis)
        elif name == "commutativity":
            checked, fail = check_commutativity(model, basis)
        elif name == "symmetry":
            checked, fail = check_symmetry(model, basis)
        elif name == "bichar":
            checked, fail = check_bichar(model, degree, basis)
        elif name == "associativity":
            checked, fail = check_associativity(model, sample_triples(model, degree, samples, rng))
            inputs += f", {samples} samples, seed {seed}"
        elif name == "braiding":
            checked, fail = check_braiding(model, pairs)
        elif name == "compat":
            checked, fail = check_compat(model, sample_triples(model, degree, samples, rng))
            inputs += f", {samples} samples, seed {seed}"
        elif name == "yang_baxter":
            checked, fail = check_yang_baxter(model, sample_triples(model, degree, samples, rng))
            inputs += f", {samples} samples, seed {seed}"
        elif name == "unitarity":
            checked, fail = check_unitarity(model, pairs)
        elif name == "locality":
            checked, fail, witness = check_locality(model, _locality_pairs(model, basis),
                                                    model.unit_basis(), series_cutoff)
            inputs += f", cutoff {series_cutoff}"
        elif name == "vacuum":
            checked, fail = check_vacuum(model, basis, series_cutoff)
        elif name == "creation":
            checked, fail = check_creation(model, basis, series_cutoff)
        elif name == "translation":
            checked, fail = check_translation(model, _small_pairs(basis), series_cutoff)
            inputs += f", cutoff {series_cutoff}"
        elif name == "contour":
            checked, fail = check_contour(model, sample_triples(model, triple_degree, samples, rng))
            inputs = f"degree <= {triple_degree}, {samples} samples, seed {seed}"
        else:  # exchange
            checked, fail = check_exchange(model)
            inputs = "lattice basis vectors"
        if fail is None:
            status = "pass"
            detail = ""
        else:
            status = "fail"
            witness = dict(witness, inputs=fail[0])
            detail = fail[1]
            if name in INFORMATIONAL:
                status = "info"
            elif expect == "braided" and name in BRAIDED_XFAIL:
                status = "xfail"
        reports.append(CheckReport(name, status, checked, inputs, witness, detail))
    return reports


def _locality_pairs(model, basis):
    """Pairs of degree-0 and degree-1 monomials: enough to exercise every pole order."""
    small = [b for b in basis if b.degree <= 1]
    return list(itertools.combinations_with_replacement(small, 2))


def _small_pairs(basis):
    small = [b for b in basis if b.degree <= 1]
    return [(a, b) for a in small for b in small]


def suite_passed(reports):
    return all(r.passed for r in reports if r.mandatory)
