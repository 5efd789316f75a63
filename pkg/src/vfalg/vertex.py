"""Multi-variable states, the twisted product and the vertex-algebra layer.

A :class:`StateVector` on a finite variable set ``I`` is a sum of terms
``(assignment, coefficient)``: the assignment puts one basis monomial of H(M)
at every variable, and the coefficient lies in S(I).  The partition records
which variables are equivalent (poles are only allowed between classes).

Everything is built from two slot operations on such states:

* :func:`vx_pair` splits the slots in ``I`` and ``J`` by iterated coproducts
  and multiplies in the multi-variable extension of a bicharacter; with the model
  bicharacter this is the twisted product, with the charge it is the R-matrix;
* :func:`vx_expand_merge` Taylor-shifts slots and expands coefficients into
  Laurent series in a chosen region.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

from .bichar import bc_charge, bc_model
from .errors import UsageError
from .hopf import (
    Basis, HMElement, Model, _dadd, _dmul, basis_coproduct, basis_mul, basis_taylor,
    make_model,
)
from .scalar import ONE, ScalarQ, scalar
from .sfield import SingularFn, sf_expand, sf_rename, sf_set_zero, sf_sum


class StateVector:
    """Element of ``V(I_1 : ... : I_n)``."""

    __slots__ = ("model", "varset", "partition", "terms")

    def __init__(self, model: Model, varset, partition, terms):
        self.model = model
        self.varset = frozenset(varset)
        self.partition = tuple(sorted((frozenset(c) for c in partition), key=min))
        if frozenset().union(*self.partition) != self.varset:
            raise UsageError("partition does not cover the variable set")
        clean = {}
        for assign, f in terms.items():
            if f:
                if f.varset != self.varset:
                    f = f.with_varset(self.varset)
                clean[assign] = f
        self.terms = clean

    @classmethod
    def from_lists(cls, model, varset, partition, pieces):
        """Build from ``(assignment, SingularFn)`` pairs, summing duplicates."""
        grouped = {}
        for assign, f in pieces:
            grouped.setdefault(assign, []).append(f)
        vs = frozenset(varset)
        return cls(model, vs, partition, {a: sf_sum(fs, vs) for a, fs in grouped.items()})

    def _check(self, other):
        if not isinstance(other, StateVector):
            raise UsageError(f"expected a StateVector, got {type(other).__name__}")
        if other.model != self.model:
            raise UsageError("states belong to different models")
        if other.varset != self.varset:
            raise UsageError(
                f"variable sets differ: {sorted(self.varset)} vs {sorted(other.varset)}")

    def __add__(self, other):
        self._check(other)
        pieces = list(self.terms.items()) + list(other.terms.items())
        part = self.partition if len(self.partition) >= len(other.partition) else other.partition
        return StateVector.from_lists(self.model, self.varset, part, pieces)

    def __neg__(self):
        return StateVector(self.model, self.varset, self.partition,
                           {a: -f for a, f in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        """Multiply every coefficient by a scalar or an element of S(I)."""
        if isinstance(other, SingularFn):
            g = other.with_varset(self.varset) if other.varset <= self.varset else None
            if g is None:
                raise UsageError("coefficient uses variables outside the state")
            return StateVector(self.model, self.varset, self.partition,
                               {a: f * g for a, f in self.terms.items()})
        c = scalar(other)
        return StateVector(self.model, self.varset, self.partition,
                           {a: f.scale(c) for a, f in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return (self.model == other.model and self.varset == other.varset
                and self.terms == other.terms)

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    def slot_element(self, assign, var):
        return HMElement(self.model, {dict(assign)[var]: ONE})

    def counit(self) -> SingularFn:
        """Apply the counit to every slot."""
        return sf_sum([f for assign, f in self.terms.items()
                       if all(not b.gens for _, b in assign)], self.varset)

    def __str__(self):
        from .exprparse import format_basis

        if not self.terms:
            return "0"
        parts = []
        for assign in sorted(self.terms, key=_assign_key):
            slots = " (x) ".join(f"[{format_basis(self.model, b) or '1'}]@x{v}"
                                 for v, b in assign)
            parts.append(f"({self.terms[assign]}) * {slots}")
        return "\n".join(parts)

    def __repr__(self):
        return f"StateVector(vars={sorted(self.varset)}, {len(self.terms)} terms)"


def _assign_key(assign):
    return tuple((v, b.degree, b.gens, b.alpha) for v, b in assign)


def vx_embed(a: HMElement, var: int) -> StateVector:
    vs = frozenset((var,))
    terms = {((var, b),): SingularFn.const(c, vs) for b, c in a.terms.items()}
    return StateVector(a.model, vs, (vs,), terms)


def vx_tensor(u: StateVector, v: StateVector) -> StateVector:
    """Juxtaposition ``u (x) v`` without any pairing."""
    if u.model != v.model:
        raise UsageError("states belong to different models")
    if u.varset & v.varset:
        raise UsageError(f"index sets {sorted(u.varset)} and {sorted(v.varset)} collide")
    vs = u.varset | v.varset
    terms = {}
    for a1, f1 in u.terms.items():
        g1 = f1.with_varset(vs)
        for a2, f2 in v.terms.items():
            assign = tuple(sorted(a1 + a2))
            terms[assign] = g1 * f2.with_varset(vs)
    return StateVector(u.model, vs, u.partition + v.partition, terms)


def vx_pair(w: StateVector, left, right, r=None) -> StateVector:
    """Split slots and multiply by the multi-variable extension of ``r``.

    Each slot ``i`` in ``left`` is split by ``Delta^{|right|}``: the first leg
    stays in place and the others pair with the slots of ``right`` (which are
    split the same way).  The pair ``(i, j)`` contributes ``r(leg_i (x) leg_j)``
    evaluated at ``(x_i, x_j)``.  With ``r`` the model bicharacter this is the
    twisted product of the two groups of slots.
    """
    left, right = tuple(left), tuple(right)
    if set(left) & set(right):
        raise UsageError(f"index sets {list(left)} and {list(right)} collide")
    if not (set(left) | set(right)) <= w.varset:
        raise UsageError("paired slots are not variables of the state")
    model = w.model
    r = bc_model(model) if r is None else r
    vs = w.varset
    ni, nj = len(left), len(right)
    renamed = {}

    def value(x, y, vi, vj):
        key = (x, y, vi, vj)
        hit = renamed.get(key)
        if hit is None:
            raw = r.eval_basis(x, y)
            hit = renamed[key] = sf_rename(raw, {1: vi, 2: vj}, vs) if raw else None
        return hit

    one = SingularFn.one(vs)
    grouped = {}
    for assign, f in w.terms.items():
        slots = dict(assign)
        lsplits = [list(basis_coproduct(model, slots[i], 1 + nj).items()) for i in left]
        rsplits = [list(basis_coproduct(model, slots[j], 1 + ni).items()) for j in right]
        # the input coefficient f is common to every summand of this term,
        # so the (small) bicharacter values are summed first
        inner = {}
        for lchoice in itertools.product(*lsplits):
            for rchoice in itertools.product(*rsplits):
                coeff = 1
                for _, c in lchoice:
                    coeff *= c
                for _, c in rchoice:
                    coeff *= c
                val = one
                for a, vi in enumerate(left):
                    for b, vj in enumerate(right):
                        x = value(lchoice[a][0][1 + b], rchoice[b][0][1 + a], vi, vj)
                        if x is None:
                            val = None
                            break
                        val = val * x
                    if val is None:
                        break
                if val is None:
                    continue
                new = dict(slots)
                for a, vi in enumerate(left):
                    new[vi] = lchoice[a][0][0]
                for b, vj in enumerate(right):
                    new[vj] = rchoice[b][0][0]
                inner.setdefault(tuple(sorted(new.items())), []).append(val.scale(coeff))
        for key, vals in inner.items():
            g = sf_sum(vals, vs)
            if g:
                grouped.setdefault(key, []).append(f * g)
    terms = {a: sf_sum(fs, vs) for a, fs in grouped.items()}
    return StateVector(model, vs, w.partition, terms)


def vx_twisted_product(u: StateVector, v: StateVector) -> StateVector:
    """``u o v`` on ``I : J``."""
    return vx_pair(vx_tensor(u, v), sorted(u.varset), sorted(v.varset))


def vx_npoint(states) -> StateVector:
    """Left-associated twisted product of ``states[k]`` placed at ``x_{k+1}``."""
    states = list(states)
    if not states:
        raise UsageError("vx_npoint needs at least one state")
    out = vx_embed(states[0], 1)
    for k, s in enumerate(states[1:], start=2):
        out = vx_twisted_product(out, vx_embed(s, k))
    return out


def vx_greens(states) -> SingularFn:
    """Counit of the n-point product: the Green's function in S(1:...:n)."""
    return vx_npoint(states).counit()


def vx_R_apply(w: StateVector, left=(1,), right=(2,)) -> StateVector:
    """R-matrix ``R_{I,J}``: ``u (x) v -> u' (x) v' r'(v'' (x) u'')``.

    ``left`` is ``I`` and ``right`` is ``J``; the charge values are placed at
    ``(x_j, x_i)``.  ``vx_R_apply(w, (1,), (3,))`` is ``R_13`` and so on.
    """
    return vx_pair(w, right, left, bc_charge(bc_model(w.model)))


def vx_multiply(w: StateVector, left, right) -> StateVector:
    """Twisted product of the slot groups ``left`` and ``right`` inside ``w``."""
    return vx_pair(w, left, right)


# -- series -------------------------------------------------------------------

@dataclass
class VertexSeries:
    """Truncated series with HMElement coefficients.

    ``vars`` lists the series variables in increasing index order; ``region``
    records the expansion order used (outermost first).  Stored exponent
    vectors ``e`` satisfy ``e_v <= cutoff`` for every variable and
    ``sum(e) <= cutoff``; within that window the coefficients are exact.
    """

    model: Model
    vars: tuple
    region: tuple
    cutoff: int
    terms: dict = field(default_factory=dict)
    target: int | None = None

    def coefficient(self, exps):
        if isinstance(exps, int):
            exps = (exps,)
        return self.terms.get(tuple(exps), self.model.zero())

    def in_window(self, exps):
        return all(e <= self.cutoff for e in exps) and sum(exps) <= self.cutoff

    def same_window(self, other):
        return self.vars == other.vars and self.cutoff == other.cutoff

    def restrict(self, cutoff):
        if cutoff > self.cutoff:
            raise UsageError("cannot raise the cutoff of a truncated series")
        return VertexSeries(self.model, self.vars, self.region, cutoff,
                            {e: c for e, c in self.terms.items()
                             if all(x <= cutoff for x in e) and sum(e) <= cutoff},
                            self.target)

    def __eq__(self, other):
        if not isinstance(other, VertexSeries):
            return NotImplemented
        if not self.same_window(other):
            raise UsageError(
                "series are comparable only on equal variables and cutoff: "
                f"{self.vars}/{self.cutoff} vs {other.vars}/{other.cutoff}")
        return self.terms == other.terms

    __hash__ = None

    def min_exponent(self):
        return min((e for e in self.terms), default=None)

    def lines(self):
        """``(exponent text, coefficient text)`` pairs, lowest exponent first."""
        out = []
        for e in sorted(self.terms):
            if len(self.vars) == 1:
                label = f"x^{e[0]}"
            else:
                label = "*".join(f"x{v}^{k}" for v, k in zip(self.vars, e))
            out.append((label, str(self.terms[e])))
        return out

    def __str__(self):
        return "\n".join(f"{k}: {v}" for k, v in self.lines()) or "0"


def vx_expand_merge(u: StateVector, target, region, cutoff, at_zero=()) -> VertexSeries:
    """Taylor-shift every slot, merge them into one state and expand coefficients.

    Variables in ``at_zero`` are set to 0: their coefficients are substituted
    and their slots are not shifted.  ``region`` orders the remaining
    variables, outermost first.
    """
    region = tuple(region)
    at_zero = tuple(at_zero)
    if set(region) | set(at_zero) != set(u.varset) or set(region) & set(at_zero):
        raise UsageError(f"region {region} and zero set {at_zero} must partition "
                         f"{sorted(u.varset)}")
    model = u.model
    svars = tuple(sorted(region))
    pos = {v: svars.index(v) for v in region}
    merged_cache = {}
    acc = {}
    for assign, f in u.terms.items():
        g = f
        for v in at_zero:
            g = sf_set_zero(g, v)
        if not g:
            continue
        series = sf_expand(g, region, cutoff)
        if not series.terms:
            continue
        # exponents of the expansion, re-indexed to svars order
        fterms = []
        for e, c in series.terms.items():
            vec = [0] * len(svars)
            for v, k in zip(region, e):
                vec[pos[v]] = k
            fterms.append((tuple(vec), c))
        min_tot = min(sum(e) for e, _ in fterms)
        slots = dict(assign)
        fixed = Basis(model.zero_alpha, ())
        for v in at_zero:
            fixed = basis_mul(fixed, slots[v])
        shifted = [slots[v] for v in svars]
        tmax = [cutoff - min(e[k] for e, _ in fterms) for k in range(len(svars))]
        ttot = cutoff - min_tot
        taylors = [basis_taylor(model, b, min(tm, ttot)) if (b.gens or any(b.alpha))
                   else None for b, tm in zip(shifted, tmax)]
        for e, c in fterms:
            ranges = []
            for k in range(len(svars)):
                hi = cutoff - e[k]
                if taylors[k] is None:
                    hi = min(hi, 0)
                ranges.append(range(0, max(hi, -1) + 1))
            for t in itertools.product(*ranges):
                tot = sum(e) + sum(t)
                if tot > cutoff:
                    continue
                key = (assign, t)
                merged = merged_cache.get(key)
                if merged is None:
                    merged = {fixed: ONE}
                    for k, tk in enumerate(t):
                        if taylors[k] is None:
                            d = {shifted[k]: ONE}
                        else:
                            d = taylors[k][tk]
                        merged = _dmul(merged, d)
                        if not merged:
                            break
                    merged_cache[key] = merged
                if not merged:
                    continue
                ex = tuple(a + b for a, b in zip(e, t))
                slot = acc.setdefault(ex, {})
                for bb, v in merged.items():
                    _dadd(slot, bb, v * c)
    terms = {e: HMElement(model, d) for e, d in acc.items() if d}
    return VertexSeries(model, svars, region, cutoff, terms, target)


def vx_Y(a: HMElement, b: HMElement, cutoff: int) -> VertexSeries:
    """``Y(a, x) b`` up to ``x^cutoff``."""
    if a.model != b.model:
        raise UsageError("states belong to different models")
    prod = vx_twisted_product(vx_embed(a, 1), vx_embed(b, 2))
    return vx_expand_merge(prod, 1, (1,), cutoff, at_zero=(2,))


def vx_mode(a: HMElement, n: int, b: HMElement) -> HMElement:
    """``a_(n) b``: the coefficient of ``x^(-n-1)`` in ``Y(a, x) b``."""
    return vx_Y(a, b, -n - 1).coefficient((-n - 1,))


def series_divided_deriv(s: VertexSeries, var, i) -> VertexSeries:
    """Term-wise ``d^(i)/dx_var^(i)``; the result is exact on a window of cutoff ``s.cutoff - i``."""
    k = s.vars.index(var)
    terms = {}
    for e, c in s.terms.items():
        if e[k] >= i or e[k] < 0:
            ne = e[:k] + (e[k] - i,) + e[k + 1:]
            coeff = _binom(e[k], i)
            if coeff:
                terms[ne] = c * coeff
    out = VertexSeries(s.model, s.vars, s.region, s.cutoff, terms, s.target)
    return out.restrict(s.cutoff - i)


def _binom(n, k):
    """Generalized binomial ``n choose k`` for integer ``n`` and ``k >= 0``."""
    if n >= 0:
        return comb(n, k)
    return (-1) ** k * comb(k - n - 1, k)


# -- contour integrals -----------------------------------------------------------

def _linear_part(key, over, around, rest):
    """Write a factor involving ``x_over`` as ``L0 + c t`` where ``x_over = x_around + t``."""
    i, j, n = key
    qn = ScalarQ.q_power(n)
    other = j if i == over else i
    c = ONE if i == over else -qn
    if other == around:
        return SingularFn.monomial({around: 1}, ONE - qn, rest), c
    if i == over:
        return SingularFn.factor(around, j, n, 1, rest), c
    return SingularFn.factor(i, around, n, 1, rest), c


def _shift_expand(f: SingularFn, over, around, order):
    """Write ``f(x_over = x_around + t)`` as ``t^-P * sum_m g_m t^m``; returns ``(P, g_0..g_order)``."""
    rest = f.varset - {over}
    lo, hi = min(over, around), max(over, around)
    pole = 0
    sign = ONE if over < around else -ONE
    base_den = {}
    shifted = []
    for key, m in f.den:
        if over in (key.i, key.j):
            if {key.i, key.j} == {over, around} and key.n == 0:
                pole = m
            else:
                shifted.append((key, m))
        else:
            base_den[key] = m
    # numerator: x_over^e -> sum_k binom(e,k) x_around^(e-k) t^k
    series = [SingularFn.zero(rest) for _ in range(order + 1)]
    for mono, c in f.num.items():
        e = dict(mono).get(over, 0)
        rest_mono = {v: k for v, k in mono if v != over}
        for k in range(order + 1):
            bc = _binom(e, k)
            if not bc:
                continue
            ex = dict(rest_mono)
            ex[around] = ex.get(around, 0) + e - k
            series[k] = series[k] + SingularFn.monomial(ex, c * bc, rest)
    for key, m in shifted:
        l0, c = _linear_part(key, over, around, rest)
        inv = l0.inverse()
        factor_series = []
        power = inv ** m
        ck = ONE
        for k in range(order + 1):
            factor_series.append(power.scale(ck * _binom(-m, k)))
            power = power * inv
            ck = ck * c
        series = _series_mul(series, factor_series, order, rest)
    if base_den:
        d = SingularFn.from_factors({k: -m for k, m in base_den.items()}, 1, rest)
        series = [s * d for s in series]
    unit = sign ** (-pole)
    return pole, [s.scale(unit) for s in series]


def _series_mul(s1, s2, order, rest):
    out = []
    for n in range(order + 1):
        out.append(sf_sum([s1[k] * s2[n - k] for k in range(n + 1) if s1[k] and s2[n - k]],
                          rest))
    return out


def vx_contour(u: StateVector, over: int, around: int) -> StateVector:
    """Residue of ``u`` in ``x_over`` around ``x_around``.

    The slot at ``x_over`` is re-expanded as ``sum_k D^(k)(a) (x_over - x_around)^k``
    and merged into the slot at ``x_around``; the result is the coefficient of
    ``(x_over - x_around)^-1``.
    """
    if over == around or over not in u.varset or around not in u.varset:
        raise UsageError(f"contour needs two distinct variables of the state, got {over}, {around}")
    for cls in u.partition:
        if over in cls and around in cls:
            raise UsageError(f"x{over} and x{around} lie in the same partition class")
    model = u.model
    rest = u.varset - {over}
    partition = [c - {over} for c in u.partition if c - {over}]
    pieces = []
    for assign, f in u.terms.items():
        pole = 0
        for key, m in f.den:
            if {key.i, key.j} == {over, around} and key.n == 0:
                pole = m
        if pole == 0:
            continue
        _, g = _shift_expand(f, over, around, pole - 1)
        slots = dict(assign)
        s_over = slots.pop(over)
        s_around = slots[around]
        taylor = basis_taylor(model, s_over, pole - 1)
        for k in range(pole):
            coeff = g[pole - 1 - k]
            if not coeff:
                continue
            for bb, c in taylor[k].items():
                new = dict(slots)
                new[around] = basis_mul(bb, s_around)
                pieces.append((tuple(sorted(new.items())), coeff.scale(c)))
    return StateVector.from_lists(model, rest, partition, pieces)


# -- tensor products of models -----------------------------------------------------

def vx_tensor_model(m1: Model, m2: Model) -> Model:
    """Pointwise tensor product: orthogonal Gram sum and block propagator."""
    if m1.mode != m2.mode:
        raise UsageError(f"cannot tensor a {m1.mode} model with a {m2.mode} model")
    if m1.cocycle != m2.cocycle:
        raise UsageError("cannot tensor models with different cocycle rules")
    r1, r2 = m1.rank, m2.rank
    gram = [list(row) + [0] * r2 for row in m1.gram] + [[0] * r1 + list(row) for row in m2.gram]
    n1, n2 = m1.nfields, m2.nfields
    zero = SingularFn.zero((1, 2))
    prop = ([list(row) + [zero] * n2 for row in m1.propagator]
            + [[zero] * n1 + list(row) for row in m2.propagator])
    return make_model(gram, prop, m1.mode, m1.cocycle, max(m1.max_degree, m2.max_degree))


def embed_tensor(model: Model, part: HMElement, which: int, other: Model) -> HMElement:
    """Transport an element of a tensor factor into the tensor model.

    ``which`` is 1 for the first factor (the element's model) and 2 for the
    second; ``other`` is the remaining factor.
    """
    terms = {}
    for b, c in part.terms.items():
        if which == 1:
            alpha = b.alpha + other.zero_alpha
            gens = tuple(b.gens)
        else:
            alpha = other.zero_alpha + b.alpha
            gens = tuple((k, idx + (other.rank if k == 0 else other.nfields), i)
                         for k, idx, i in b.gens)
        terms[Basis(alpha, tuple(sorted(gens)))] = c
    return HMElement(model, terms)
