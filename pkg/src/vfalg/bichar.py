"""Bicharacters ``r: H(M) x H(M) -> S(1:2)`` and their calculus.

A model bicharacter is fixed by its values on generators and extended by the
unit, multiplicativity and invariance laws:

* ``r(w a (x) v) = sum r(w (x) v') r(a (x) v'')``;
* ``r(a_{k,i} (x) y) = sum r(e^{-alpha_k} (x) y') d^(i)_{x1} r(e^{alpha_k} (x) y'')``;
* ``r(e^alpha (x) y z) = r(e^alpha (x) y) r(e^alpha (x) z)`` (e^alpha is group-like);
* on free fields the value is a permanent of propagator derivatives.

Values are memoized per instance on pairs of basis monomials.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .errors import UsageError
from .hopf import (
    FIELD, LATTICE, Basis, HMElement, Model, _basis_antipode, basis_coproduct,
    basis_taylor, enumerate_basis,
)
from .scalar import ONE
from .sfield import SingularFn, sf_divided_deriv, sf_rename, sf_sum, sf_swap

VARS12 = frozenset((1, 2))


def _const(c):
    return SingularFn.const(c, VARS12)


def _split(b: Basis):
    """Lattice part and field part of a basis monomial."""
    lat = tuple(g for g in b.gens if g[0] == LATTICE)
    fld = tuple(g for g in b.gens if g[0] == FIELD)
    return Basis(b.alpha, lat), fld


class Bicharacter:
    """Base class: subclasses implement :meth:`_eval` on basis pairs."""

    def __init__(self, model: Model):
        self.model = model
        self._memo = {}

    def eval_basis(self, b1: Basis, b2: Basis) -> SingularFn:
        key = (b1, b2)
        hit = self._memo.get(key)
        if hit is None:
            self.model.check_degree(max(b1.degree, b2.degree))
            hit = self._memo[key] = self._eval(b1, b2)
        return hit

    def _eval(self, b1, b2):
        raise NotImplementedError

    def clear_cache(self):
        self._memo.clear()

    def __call__(self, a: HMElement, b: HMElement) -> SingularFn:
        return bc_eval(self, a, b)

    def _check_model(self, other):
        if other.model != self.model:
            raise UsageError("bicharacters belong to different models")


class ModelBicharacter(Bicharacter):
    """The bicharacter attached to a model (lattice, free fields, or both)."""

    name = "model"

    def _eval(self, b1, b2):
        lat1, f1 = _split(b1)
        lat2, f2 = _split(b2)
        value = self._lattice(lat1, lat2) if self.model.rank else _const(1)
        if not value:
            return value
        if f1 or f2:
            value = value * self._fields(f1, f2)
        return value

    # -- lattice part --------------------------------------------------------
    def _base(self, i, j):
        """Generator value ``r(e^{alpha_i} (x) e^{alpha_j})`` without the cocycle."""
        cache = self.model._cache.setdefault("latbase", {})
        hit = cache.get((i, j))
        if hit is not None:
            return hit
        g = self.model.gram[i][j]
        if self.model.mode == "classical" or g == 0:
            val = SingularFn.factor(1, 2, 0, g, VARS12)
        else:
            n, sigma = abs(g), (1 if g > 0 else -1)
            val = _const(1)
            for k in range(1, n + 1):
                val = val * SingularFn.factor(1, 2, n - 2 * k, sigma, VARS12)
        cache[(i, j)] = val
        return val

    def group_value(self, alpha, beta):
        """``r(e^alpha (x) e^beta)`` by bimultiplicativity."""
        cache = self.model._cache.setdefault("groupvalue", {})
        hit = cache.get((alpha, beta))
        if hit is not None:
            return hit
        powers = {}
        sign = 1
        val = _const(1)
        for i, m in enumerate(alpha):
            if not m:
                continue
            for j, n in enumerate(beta):
                if not n:
                    continue
                e = m * n
                if self.model.cocycle_sign(i, j) < 0 and e % 2:
                    sign = -sign
                powers[(i, j)] = powers.get((i, j), 0) + e
        for (i, j), e in powers.items():
            base = self._base(i, j)
            val = val * (base ** e)
        if sign < 0:
            val = -val
        cache[(alpha, beta)] = val
        return val

    def _lattice(self, b1, b2):
        key = ("lat", b1, b2)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = self._lattice_raw(b1, b2)
        self._memo[key] = out
        return out

    def _lattice_raw(self, b1, b2):
        model = self.model
        if b1.gens:
            gen = b1.gens[-1]
            w = Basis(b1.alpha, b1.gens[:-1])
            terms = []
            for (v1, v2), c in basis_coproduct(model, b2, 2).items():
                left = self._lattice(w, v1)
                if not left:
                    continue
                right = self._gen_value(gen, v2)
                if right:
                    terms.append((left * right).scale(c))
            return sf_sum(terms, VARS12)
        if b2.gens:
            _, l, j = b2.gens[-1]
            v = Basis(b2.alpha, b2.gens[:-1])
            ek = _unit_vector(model.rank, l)
            neg = tuple(-x for x in ek)
            head = self.group_value(b1.alpha, neg)
            tail = sf_divided_deriv(self.group_value(b1.alpha, ek), 2, j)
            return self._lattice(b1, v) * head * tail
        return self.group_value(b1.alpha, b2.alpha)

    def _gen_value(self, gen, y):
        """``r(a_{k,i} (x) y)`` for a single lattice generator."""
        _, k, i = gen
        ek = _unit_vector(self.model.rank, k)
        neg = tuple(-x for x in ek)
        terms = []
        for (y1, y2), c in basis_coproduct(self.model, y, 2).items():
            left = self._lattice(Basis(neg, ()), y1)
            right = sf_divided_deriv(self._lattice(Basis(ek, ()), y2), 1, i)
            if left and right:
                terms.append((left * right).scale(c))
        return sf_sum(terms, VARS12)

    # -- free-field part -------------------------------------------------------
    def _pair(self, g1, g2):
        cache = self.model._cache.setdefault("fieldpair", {})
        key = (g1, g2)
        hit = cache.get(key)
        if hit is None:
            _, j1, i1 = g1
            _, j2, i2 = g2
            prop = self.model.propagator[j1 - 1][j2 - 1]
            hit = cache[key] = sf_divided_deriv(sf_divided_deriv(prop, 1, i1), 2, i2)
        return hit

    def _fields(self, f1, f2):
        if len(f1) != len(f2):
            return _const(0)
        if not f1:
            return _const(1)
        terms = []
        for perm in itertools.permutations(range(len(f2))):
            val = _const(1)
            for a, b in enumerate(perm):
                val = val * self._pair(f1[a], f2[b])
                if not val:
                    break
            if val:
                terms.append(val)
        return sf_sum(terms, VARS12)


def _unit_vector(rank, k):
    return tuple(1 if t == k - 1 else 0 for t in range(rank))


class IdentityBicharacter(Bicharacter):
    """``r0(a (x) b) = eta(a) eta(b)``, the unit for convolution."""

    name = "identity"

    def _eval(self, b1, b2):
        return _const(0 if (b1.gens or b2.gens) else 1)


class ConvolvedBicharacter(Bicharacter):
    """``(rs)(a (x) b) = sum r(a' (x) b') s(a'' (x) b'')``."""

    name = "convolution"

    def __init__(self, r, s):
        r._check_model(s)
        super().__init__(r.model)
        self.r, self.s = r, s

    def _eval(self, b1, b2):
        terms = []
        cop2 = basis_coproduct(self.model, b2, 2)
        for (a1, a2), c1 in basis_coproduct(self.model, b1, 2).items():
            for (c_1, c_2), c2 in cop2.items():
                x = self.r.eval_basis(a1, c_1)
                if not x:
                    continue
                y = self.s.eval_basis(a2, c_2)
                if y:
                    terms.append((x * y).scale(c1 * c2))
        return sf_sum(terms, VARS12)


class InverseBicharacter(Bicharacter):
    """``r^-1(a (x) b) = r(s(a) (x) b)``."""

    name = "inverse"

    def __init__(self, r):
        super().__init__(r.model)
        self.r = r

    def _eval(self, b1, b2):
        terms = [self.r.eval_basis(bb, b2).scale(c)
                 for bb, c in _basis_antipode(self.model, b1).items()]
        return sf_sum(terms, VARS12)


class TransposeBicharacter(Bicharacter):
    """``r^T(a (x) b)(x1, x2) = r(b (x) a)(x2, x1)``."""

    name = "transpose"

    def __init__(self, r):
        super().__init__(r.model)
        self.r = r

    def _eval(self, b1, b2):
        return sf_swap(self.r.eval_basis(b2, b1))


class ChargeBicharacter(Bicharacter):
    """The braiding charge ``r'(a (x) b) = sum r(a' (x) b') r^-1(b'' (x) a'')``.

    The second factor is evaluated at ``(x2, x1)``, which makes ``r'`` the
    identity exactly when ``r`` is symmetric.
    """

    name = "charge"

    def __init__(self, r):
        super().__init__(r.model)
        self.r = r
        self.rinv = InverseBicharacter(r)

    def _eval(self, b1, b2):
        terms = []
        cop2 = basis_coproduct(self.model, b2, 2)
        for (a1, a2), c1 in basis_coproduct(self.model, b1, 2).items():
            for (c_1, c_2), c2 in cop2.items():
                x = self.r.eval_basis(a1, c_1)
                if not x:
                    continue
                y = sf_swap(self.rinv.eval_basis(c_2, a2))
                if y:
                    terms.append((x * y).scale(c1 * c2))
        return sf_sum(terms, VARS12)


# -- constructors ---------------------------------------------------------------

def bc_model(model: Model) -> Bicharacter:
    """Bicharacter of any model; cached on the model so memo tables are shared."""
    hit = model._cache.get("bichar")
    if hit is None:
        hit = model._cache["bichar"] = ModelBicharacter(model)
    return hit


def bc_lattice(model: Model) -> Bicharacter:
    if model.rank == 0:
        raise UsageError("bc_lattice needs a model with a lattice part")
    return bc_model(model)


def bc_freefield(model: Model) -> Bicharacter:
    if model.nfields == 0:
        raise UsageError("bc_freefield needs a model with free fields")
    return bc_model(model)


def bc_identity(model: Model) -> Bicharacter:
    return IdentityBicharacter(model)


def bc_convolve(r: Bicharacter, s: Bicharacter) -> Bicharacter:
    return ConvolvedBicharacter(r, s)


def bc_inverse(r: Bicharacter) -> Bicharacter:
    return InverseBicharacter(r)


def bc_transpose(r: Bicharacter) -> Bicharacter:
    return TransposeBicharacter(r)


def bc_charge(r: Bicharacter) -> Bicharacter:
    key = ("charge", id(r))
    cache = r.model._cache
    hit = cache.get(key)
    if hit is None or hit.r is not r:
        hit = cache[key] = ChargeBicharacter(r)
    return hit


# -- evaluation -------------------------------------------------------------------

def bc_eval(r: Bicharacter, a: HMElement, b: HMElement) -> SingularFn:
    """Bilinear extension of ``r`` to arbitrary elements."""
    if a.model != r.model or b.model != r.model:
        raise UsageError("elements do not belong to the bicharacter's model")
    terms = []
    for b1, c1 in a.terms.items():
        for b2, c2 in b.terms.items():
            v = r.eval_basis(b1, b2)
            if v:
                terms.append(v.scale(c1 * c2))
    return sf_sum(terms, VARS12)


def eval_multi_basis(r: Bicharacter, left, right, varset=None) -> SingularFn:
    """Multi-variable extension on basis data.

    ``left`` and ``right`` are sequences of ``(variable, Basis)``.  Each left
    slot is split by ``Delta^{|J|-1}`` and each right slot by
    ``Delta^{|I|-1}``; the legs are paired and evaluated at ``(x_i, x_j)``.
    """
    ivars = [v for v, _ in left]
    jvars = [v for v, _ in right]
    if set(ivars) & set(jvars) or len(set(ivars)) != len(ivars) or len(set(jvars)) != len(jvars):
        raise UsageError(f"index sets {ivars} and {jvars} collide")
    vs = frozenset(ivars + jvars) if varset is None else frozenset(varset)
    model = r.model
    ni, nj = len(left), len(right)
    if not ni or not nj:
        val = 1
        for _, b in list(left) + list(right):
            if b.gens:
                val = 0
        return SingularFn.const(val, vs)
    lsplits = [list(basis_coproduct(model, b, nj).items()) for _, b in left]
    rsplits = [list(basis_coproduct(model, b, ni).items()) for _, b in right]
    terms = []
    for lchoice in itertools.product(*lsplits):
        for rchoice in itertools.product(*rsplits):
            coeff = 1
            for _, c in lchoice:
                coeff *= c
            for _, c in rchoice:
                coeff *= c
            val = SingularFn.one(vs)
            for a, (vi, _) in enumerate(left):
                for b, (vj, _) in enumerate(right):
                    x = r.eval_basis(lchoice[a][0][b], rchoice[b][0][a])
                    if not x:
                        val = None
                        break
                    if not x.is_constant or not x.constant_value().is_one:
                        val = val * sf_rename(x, {1: vi, 2: vj}, vs)
                if val is None:
                    break
            if val is not None:
                terms.append(val.scale(coeff))
    return sf_sum(terms, vs)


def bc_eval_multi(r: Bicharacter, left, right) -> SingularFn:
    """``left``/``right`` map variable indices to HMElements (multi-variable extension)."""
    ivars = sorted(left)
    jvars = sorted(right)
    if set(ivars) & set(jvars):
        raise UsageError(f"index sets {ivars} and {jvars} collide")
    vs = frozenset(ivars + jvars)
    terms = []
    lexp = [list(left[v].terms.items()) for v in ivars]
    rexp = [list(right[v].terms.items()) for v in jvars]
    for lc in itertools.product(*lexp):
        for rc in itertools.product(*rexp):
            coeff = ONE
            for _, c in lc + rc:
                coeff = coeff * c
            val = eval_multi_basis(r, list(zip(ivars, (b for b, _ in lc))),
                                   list(zip(jvars, (b for b, _ in rc))), vs)
            if val:
                terms.append(val.scale(coeff))
    return sf_sum(terms, vs)


# -- checking ---------------------------------------------------------------------

@dataclass
class BicharReport:
    property: str
    cutoff: int
    passed: bool
    checked: int = 0
    counterexample: tuple | None = None
    detail: str = ""

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        text = f"{self.property} (degree <= {self.cutoff}, {self.checked} cases): {status}"
        if self.counterexample:
            text += f"; counterexample {self.detail}"
        return text


BC_PROPERTIES = ("unit", "left_mult", "right_mult", "invariance", "symmetry", "inverse")


def _fmt_pair(model, a, b):
    from .exprparse import format_basis

    return f"({format_basis(model, a) or '1'}, {format_basis(model, b) or '1'})"


def check_basis(model, cutoff, radius=1):
    return enumerate_basis(model, cutoff, radius)


def bc_check(r: Bicharacter, properties=None, cutoff=3, radius=1, basis=None):
    """Exhaustive verification of the bicharacter laws on basis pairs.

    ``radius`` bounds lattice coordinates; pass ``basis`` to use an explicit
    list of monomials instead.
    """
    props = tuple(properties) if properties else BC_PROPERTIES
    unknown = set(props) - set(BC_PROPERTIES)
    if unknown:
        raise UsageError(f"unknown bicharacter properties: {sorted(unknown)}")
    model = r.model
    basis = list(basis) if basis is not None else check_basis(model, cutoff, radius)
    unit = model.unit_basis()
    reports = []
    for prop in props:
        checked = 0
        failure = None
        if prop == "unit":
            for b in basis:
                eta = _const(0 if b.gens else 1)
                checked += 1
                for lhs in (r.eval_basis(unit, b), r.eval_basis(b, unit)):
                    if lhs != eta:
                        failure = ((unit, b), lhs, eta)
                if failure:
                    break
        elif prop in ("left_mult", "right_mult"):
            failure, checked = _check_mult(r, basis, cutoff, prop == "left_mult")
        elif prop == "invariance":
            failure, checked = _check_invariance(r, basis, cutoff)
        elif prop == "symmetry":
            for a, b in itertools.combinations_with_replacement(basis, 2):
                checked += 1
                lhs = r.eval_basis(a, b)
                rhs = sf_swap(r.eval_basis(b, a))
                if lhs != rhs:
                    failure = ((a, b), lhs, rhs)
                    break
        elif prop == "inverse":
            conv = ConvolvedBicharacter(r, InverseBicharacter(r))
            conv2 = ConvolvedBicharacter(InverseBicharacter(r), r)
            for a in basis:
                for b in basis:
                    if a.degree > cutoff or b.degree > cutoff:
                        continue
                    checked += 1
                    eta = _const(0 if (a.gens or b.gens) else 1)
                    for lhs in (conv.eval_basis(a, b), conv2.eval_basis(a, b)):
                        if lhs != eta:
                            failure = ((a, b), lhs, eta)
                    if failure:
                        break
                if failure:
                    break
        if failure:
            (a, b), lhs, rhs = failure
            detail = f"{_fmt_pair(model, a, b)}: {lhs} != {rhs}"
            reports.append(BicharReport(prop, cutoff, False, checked, failure, detail))
        else:
            reports.append(BicharReport(prop, cutoff, True, checked))
    return reports


def _products(basis, cutoff):
    """Pairs (u, v) of basis monomials whose product stays within the cutoff."""
    for u in basis:
        for v in basis:
            if u.degree + v.degree <= cutoff:
                yield u, v


def _check_mult(r, basis, cutoff, left):
    """``r(uv (x) c) = sum r(u (x) c') r(v (x) c'')`` or its mirror."""
    model = r.model
    small = [b for b in basis if b.degree <= cutoff]
    gens_only = [b for b in small if not any(b.alpha) or not b.gens]
    checked = 0
    for u, v in _products(gens_only, cutoff):
        uv = u * v
        for c in small:
            if c.degree > cutoff:
                continue
            checked += 1
            terms = []
            for (c1, c2), k in basis_coproduct(model, c, 2).items():
                if left:
                    x, y = r.eval_basis(u, c1), r.eval_basis(v, c2)
                else:
                    x, y = r.eval_basis(c1, u), r.eval_basis(c2, v)
                if x and y:
                    terms.append((x * y).scale(k))
            rhs = sf_sum(terms, VARS12)
            lhs = r.eval_basis(uv, c) if left else r.eval_basis(c, uv)
            if lhs != rhs:
                pair = (uv, c) if left else (c, uv)
                return (pair, lhs, rhs), checked
    return None, checked


def _check_invariance(r, basis, cutoff):
    """``r(D^(i) a (x) b) = d^(i)_{x1} r(a (x) b)`` and the mirror in x2."""
    model = r.model
    checked = 0
    for a in basis:
        for b in basis:
            base = r.eval_basis(a, b)
            for slot, (x, y) in ((1, (a, b)), (2, (b, a))):
                for i in range(1, cutoff - x.degree + 1):
                    checked += 1
                    shifted = basis_taylor(model, x, i)[i]
                    terms = []
                    for bb, c in shifted.items():
                        v = r.eval_basis(bb, y) if slot == 1 else r.eval_basis(y, bb)
                        if v:
                            terms.append(v.scale(c))
                    lhs = sf_sum(terms, VARS12)
                    rhs = sf_divided_deriv(base, slot, i)
                    if lhs != rhs:
                        pair = (x, y) if slot == 1 else (y, x)
                        return (pair, lhs, rhs), checked
    return None, checked


def random_basis(model, cutoff, rng: random.Random, radius=2):
    """Uniform sample from basis monomials of degree <= cutoff, coordinates in [-radius, radius]."""
    key = ("sample", cutoff, radius)
    pool = model._cache.get(key)
    if pool is None:
        pool = model._cache[key] = enumerate_basis(model, cutoff, radius)
    return rng.choice(pool)
