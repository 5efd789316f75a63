"""The state space H(M) and its Hopf structure.

H is the divided-power bialgebra with basis ``D^(i)``; M is a lattice group
ring, a symmetric algebra on free fields, or (for tensor products) both.  A
canonical basis monomial is ``e^alpha * prod g`` where each generator ``g``
is a triple ``(kind, index, order)``:

* ``(LATTICE, k, i)`` with ``i >= 1`` is ``a_{k,i} = e^{-alpha_k} D^(i) e^{alpha_k}``;
* ``(FIELD, j, i)`` with ``i >= 0`` is ``phi_{j,i} = D^(i) phi_j``.

The D-action is implemented through the shift homomorphism
``T_z(u) = sum_n D^(n)(u) z^n``, which is multiplicative, so everything
reduces to the shift series of single generators.
"""

from __future__ import annotations

import itertools
import os
from math import comb
from typing import Iterable, NamedTuple

from .errors import ResourceError, UsageError
from .scalar import ONE, ZERO, ScalarQ, scalar
from .sfield import SingularFn, sf_swap

LATTICE = 0
FIELD = 1

DEFAULT_MAX_DEGREE = 12


def default_max_degree():
    env = os.environ.get("VF_MAX_DEGREE")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"VF_MAX_DEGREE must be an integer, got {env!r}") from None
    return DEFAULT_MAX_DEGREE


class Basis(NamedTuple):
    """Canonical basis monomial: lattice vector and sorted generator multiset."""

    alpha: tuple
    gens: tuple = ()

    @property
    def degree(self):
        return sum(i if kind == LATTICE else i + 1 for kind, _, i in self.gens)

    def __mul__(self, other):
        return basis_mul(self, other)


def basis_mul(b1: Basis, b2: Basis) -> Basis:
    if not b2.gens and not any(b2.alpha):
        return b1
    if not b1.gens and not any(b1.alpha):
        return b2
    alpha = tuple(x + y for x, y in zip(b1.alpha, b2.alpha))
    if not b1.gens:
        gens = b2.gens
    elif not b2.gens:
        gens = b1.gens
    else:
        gens = tuple(sorted(b1.gens + b2.gens))
    return Basis(alpha, gens)


def _dadd(acc, key, c):
    v = acc.get(key)
    if v is None:
        acc[key] = c
    else:
        v = v + c
        if v:
            acc[key] = v
        else:
            del acc[key]


def _dmul(d1, d2):
    """Product of two basis-keyed dictionaries."""
    acc = {}
    for b1, c1 in d1.items():
        for b2, c2 in d2.items():
            _dadd(acc, basis_mul(b1, b2), c1 * c2)
    return acc


class Model:
    """Data fixing H(M) and its bicharacter: a lattice part and/or free fields.

    ``gram`` is the Gram matrix of the lattice basis (empty for pure free
    fields); ``propagator[i][j]`` is ``r(phi_i x phi_j)`` as an element of
    S(1:2).  ``cocycle`` is ``"standard"`` (the basis-ordered sign rule) or
    ``"trivial"`` (c = 1, only meaningful as a negative control).
    """

    kind = "mixed"

    def __init__(self, gram=(), propagator=(), mode="classical", cocycle="standard",
                 max_degree=None):
        if mode not in ("classical", "quantum"):
            raise UsageError(f"mode must be classical or quantum, got {mode!r}")
        if cocycle not in ("standard", "trivial"):
            raise UsageError(f"cocycle must be standard or trivial, got {cocycle!r}")
        gram = tuple(tuple(int(x) for x in row) for row in gram)
        for row in gram:
            if len(row) != len(gram):
                raise UsageError("Gram matrix must be square")
        for i in range(len(gram)):
            for j in range(i):
                if gram[i][j] != gram[j][i]:
                    raise UsageError(
                        f"Gram matrix is not symmetric: entry ({i + 1},{j + 1}) = {gram[i][j]}"
                        f" but ({j + 1},{i + 1}) = {gram[j][i]}")
            if gram[i][i] % 2:
                raise UsageError(
                    f"diagonal entry ({i + 1},{i + 1}) = {gram[i][i]} is odd; only even "
                    "lattices are supported (odd ones give vertex superalgebras)")
        prop = tuple(tuple(row) for row in propagator)
        one2 = frozenset((1, 2))
        for row in prop:
            if len(row) != len(prop):
                raise UsageError("propagator table must be square")
            for f in row:
                if not isinstance(f, SingularFn) or f.varset != one2:
                    raise UsageError("propagator entries must be SingularFn on variables {1,2}")
                if mode == "classical" and any(k.n for k, _ in f.den):
                    raise UsageError(f"classical model has a q-shifted pole in {f}")
        self.gram = gram
        self.propagator = prop
        self.mode = mode
        self.cocycle = cocycle
        self.max_degree = default_max_degree() if max_degree is None else int(max_degree)
        self._cache = {}

    @property
    def rank(self):
        return len(self.gram)

    @property
    def nfields(self):
        return len(self.propagator)

    def _key(self):
        return (self.gram, self.propagator, self.mode, self.cocycle)

    def __eq__(self, other):
        return isinstance(other, Model) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        parts = []
        if self.gram:
            parts.append(f"gram={[list(r) for r in self.gram]}")
        if self.propagator:
            parts.append(f"propagator={[[str(f) for f in r] for r in self.propagator]}")
        parts.append(f"mode={self.mode}")
        if self.cocycle != "standard":
            parts.append(f"cocycle={self.cocycle}")
        return f"{type(self).__name__}({', '.join(parts)})"

    def with_cocycle(self, cocycle):
        return make_model(self.gram, self.propagator, self.mode, cocycle, self.max_degree)

    def cocycle_sign(self, i, j):
        """c(alpha_i, alpha_j) on basis vectors (0-based indices)."""
        if self.cocycle == "trivial" or i >= j:
            return 1
        return -1 if self.gram[i][j] % 2 else 1

    def is_symmetric_propagator(self):
        n = self.nfields
        return all(self.propagator[i][j] == sf_swap(self.propagator[j][i])
                   for i in range(n) for j in range(n))

    # -- element constructors ------------------------------------------
    @property
    def zero_alpha(self):
        return (0,) * self.rank

    def unit_basis(self):
        return Basis(self.zero_alpha, ())

    def element(self, terms):
        return HMElement(self, terms)

    def one(self):
        return HMElement(self, {self.unit_basis(): ONE})

    def zero(self):
        return HMElement(self, {})

    def e(self, alpha):
        alpha = tuple(int(x) for x in alpha)
        if len(alpha) != self.rank:
            raise UsageError(f"lattice vector {alpha} has length {len(alpha)}, rank is {self.rank}")
        return HMElement(self, {Basis(alpha, ()): ONE})

    def a(self, k, i):
        """``a_{k,i}`` with 1-based lattice index ``k``."""
        if self.rank == 0:
            raise UsageError("a-generators need a lattice part; this model has only free fields")
        if not 1 <= k <= self.rank:
            raise UsageError(f"lattice generator index {k} out of range 1..{self.rank}")
        if i < 0:
            raise UsageError("generator order must be nonnegative")
        if i == 0:
            return self.one()
        self.check_degree(i)
        return HMElement(self, {Basis(self.zero_alpha, ((LATTICE, k, i),)): ONE})

    def phi(self, j, i=0):
        """``phi_{j,i} = D^(i) phi_j`` with 1-based field index ``j``."""
        if self.nfields == 0:
            raise UsageError("PHI-generators need free fields; this model is a pure lattice")
        if not 1 <= j <= self.nfields:
            raise UsageError(f"field index {j} out of range 1..{self.nfields}")
        if i < 0:
            raise UsageError("generator order must be nonnegative")
        self.check_degree(i + 1)
        return HMElement(self, {Basis(self.zero_alpha, ((FIELD, j, i),)): ONE})

    def check_degree(self, d):
        if d > self.max_degree:
            raise ResourceError(
                f"D-degree {d} exceeds the cap {self.max_degree} "
                "(raise it with max_degree or VF_MAX_DEGREE)")


class LatticeModel(Model):
    """Even lattice with the given Gram matrix."""

    kind = "lattice"

    def __init__(self, gram, mode="classical", cocycle="standard", max_degree=None):
        if not gram:
            raise UsageError("a lattice model needs rank >= 1")
        super().__init__(gram, (), mode, cocycle, max_degree)


class FreeFieldModel(Model):
    """Free fields with a propagator table."""

    kind = "freefield"

    def __init__(self, propagator, mode="classical", max_degree=None):
        if not propagator:
            raise UsageError("a free-field model needs at least one field")
        super().__init__((), propagator, mode, "standard", max_degree)


def make_model(gram=(), propagator=(), mode="classical", cocycle="standard", max_degree=None):
    """Pick the most specific model class for the given data."""
    if gram and not propagator:
        return LatticeModel(gram, mode, cocycle, max_degree)
    if propagator and not gram:
        return FreeFieldModel(propagator, mode, max_degree)
    return Model(gram, propagator, mode, cocycle, max_degree)


class HMElement:
    """Finite linear combination of :class:`Basis` monomials with scalar coefficients."""

    __slots__ = ("model", "terms")

    def __init__(self, model: Model, terms):
        self.model = model
        self.terms = {b: scalar(c) for b, c in terms.items() if c}

    def _check(self, other):
        if not isinstance(other, HMElement):
            raise UsageError(f"expected an HMElement, got {type(other).__name__}")
        if other.model != self.model:
            raise UsageError("elements belong to different models")

    def __add__(self, other):
        self._check(other)
        acc = dict(self.terms)
        for b, c in other.terms.items():
            _dadd(acc, b, c)
        return HMElement(self.model, acc)

    def __neg__(self):
        return HMElement(self.model, {b: -c for b, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HMElement):
            return hm_product(self, other)
        try:
            c = scalar(other)
        except (TypeError, ValueError):
            return NotImplemented
        return HMElement(self.model, {b: v * c for b, v in self.terms.items()})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n):
        out = self.model.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, HMElement):
            return NotImplemented
        return self.model == other.model and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    @property
    def degree(self):
        return max((b.degree for b in self.terms), default=0)

    def is_homogeneous(self):
        return len({b.degree for b in self.terms}) <= 1

    def __str__(self):
        from .exprparse import format_state

        return format_state(self)

    def __repr__(self):
        return f"HMElement({str(self)!r})"


# -- product, counit -------------------------------------------------------

def hm_product(u: HMElement, v: HMElement) -> HMElement:
    u._check(v)
    return HMElement(u.model, _dmul(u.terms, v.terms))


def basis_counit(b: Basis):
    return 0 if b.gens else 1


def hm_counit(u: HMElement) -> ScalarQ:
    total = ZERO
    for b, c in u.terms.items():
        if not b.gens:
            total = total + c
    return total


# -- coproduct -------------------------------------------------------------

class SweedlerExpansion:
    """``Delta^(n-1)`` of an element: ``{(b_1, ..., b_n): coefficient}``."""

    __slots__ = ("model", "n", "terms")

    def __init__(self, model, n, terms):
        self.model = model
        self.n = n
        self.terms = {k: scalar(c) for k, c in terms.items() if c}

    def contract(self, keep):
        """Apply the counit to every slot except ``keep`` (0-based)."""
        acc = {}
        for legs, c in self.terms.items():
            if all(not legs[t].gens for t in range(self.n) if t != keep):
                _dadd(acc, legs[keep], c)
        return HMElement(self.model, acc)

    def __eq__(self, other):
        if not isinstance(other, SweedlerExpansion):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __repr__(self):
        from .exprparse import format_basis

        parts = [f"{c}*[{' | '.join(format_basis(self.model, b) for b in legs)}]"
                 for legs, c in self.terms.items()]
        return f"SweedlerExpansion(n={self.n}: {' + '.join(parts) or '0'})"


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _gen_coproduct(model, gen, n):
    kind, idx, order = gen
    z = model.zero_alpha
    unit = Basis(z, ())
    out = {}
    if kind == LATTICE:
        for comp in _compositions(order, n):
            legs = tuple(Basis(z, ((LATTICE, idx, i),)) if i else unit for i in comp)
            out[legs] = 1
    else:
        for t in range(n):
            legs = tuple(Basis(z, (gen,)) if s == t else unit for s in range(n))
            out[legs] = 1
    return out


def basis_coproduct(model: Model, b: Basis, n: int = 2):
    """``Delta^(n-1)(b)`` as ``{legs: int}``; memoized per model."""
    if n < 1:
        raise UsageError("coproduct arity must be >= 1")
    if n == 1:
        return {(b,): 1}
    cache = model._cache.setdefault("coproduct", {})
    hit = cache.get((b, n))
    if hit is not None:
        return hit
    result = {tuple(Basis(b.alpha, ()) for _ in range(n)): 1}
    for gen in b.gens:
        g = _gen_coproduct(model, gen, n)
        acc = {}
        for legs1, c1 in result.items():
            for legs2, c2 in g.items():
                key = tuple(basis_mul(x, y) for x, y in zip(legs1, legs2))
                acc[key] = acc.get(key, 0) + c1 * c2
        result = acc
    cache[(b, n)] = result
    return result


def hm_coproduct(u: HMElement, n: int = 2) -> SweedlerExpansion:
    if n < 2:
        raise UsageError("hm_coproduct needs n >= 2")
    acc = {}
    for b, c in u.terms.items():
        for legs, k in basis_coproduct(u.model, b, n).items():
            _dadd(acc, legs, c * k)
    return SweedlerExpansion(u.model, n, acc)


# -- shift series and the D-action -----------------------------------------

def _b_series(model, k, order):
    """Coefficients ``b_{k,0..order}`` of the inverse of ``sum_i a_{k,i} z^i``."""
    cache = model._cache.setdefault("bseries", {})
    have = cache.get(k)
    if have is not None and len(have) > order:
        return have
    z = model.zero_alpha
    out = [{Basis(z, ()): ONE}]
    for i in range(1, order + 1):
        acc = {}
        for t in range(1, i + 1):
            a_t = {Basis(z, ((LATTICE, k, t),)): ONE}
            for bb, c in _dmul(a_t, out[i - t]).items():
                _dadd(acc, bb, -c)
        out.append(acc)
    cache[k] = out
    return out


def _a_series(model, k, order):
    z = model.zero_alpha
    return [{Basis(z, ()): ONE}] + [{Basis(z, ((LATTICE, k, i),)): ONE}
                                     for i in range(1, order + 1)]


def _series_mul(s1, s2, order):
    out = [{} for _ in range(order + 1)]
    for i, x in enumerate(s1[:order + 1]):
        if not x:
            continue
        for j, y in enumerate(s2[:order + 1 - i]):
            if y:
                for bb, c in _dmul(x, y).items():
                    _dadd(out[i + j], bb, c)
    return out


def _gen_shift(model, gen, order):
    """Shift series ``[D^(n) gen for n <= order]`` of one generator."""
    kind, idx, i = gen
    z = model.zero_alpha
    if kind == FIELD:
        return [{Basis(z, ((FIELD, idx, i + n),)): ScalarQ(comb(n + i, i))}
                for n in range(order + 1)]
    b = _b_series(model, idx, order)
    out = []
    for n in range(order + 1):
        acc = {}
        for j in range(n + 1):
            m = n - j + i
            coeff = comb(m, i)
            a_m = {Basis(z, ((LATTICE, idx, m),)): ScalarQ(coeff)}
            for bb, c in _dmul(b[j], a_m).items():
                _dadd(acc, bb, c)
        out.append(acc)
    return out


def _group_shift(model, alpha, order):
    """``[e^{-alpha} D^(n) e^alpha for n <= order]``: product of a/b series."""
    cache = model._cache.setdefault("groupshift", {})
    hit = cache.get(alpha)
    if hit is not None and len(hit) > order:
        return hit[:order + 1]
    z = model.zero_alpha
    series = [{Basis(z, ()): ONE}] + [{} for _ in range(order)]
    for k, m in enumerate(alpha, start=1):
        if m == 0:
            continue
        base = _a_series(model, k, order) if m > 0 else _b_series(model, k, order)[:order + 1]
        for _ in range(abs(m)):
            series = _series_mul(series, base, order)
    cache[alpha] = series
    return series


def basis_taylor(model: Model, b: Basis, order: int):
    """``[D^(n) b for n <= order]`` as basis dictionaries (memoized)."""
    model.check_degree(b.degree + order)
    cache = model._cache.setdefault("taylor", {})
    hit = cache.get(b)
    if hit is not None and len(hit) > order:
        return hit[:order + 1]
    eb = Basis(b.alpha, ())
    series = [{eb * g: c for g, c in d.items()} for d in _group_shift(model, b.alpha, order)]
    for gen in b.gens:
        series = _series_mul(series, _gen_shift(model, gen, order), order)
    cache[b] = series
    return series


def hm_d_action(u: HMElement, k: int) -> HMElement:
    """``D^(k)(u)``."""
    if k < 0:
        raise UsageError("D-order must be nonnegative")
    acc = {}
    for b, c in u.terms.items():
        for bb, v in basis_taylor(u.model, b, k)[k].items():
            _dadd(acc, bb, c * v)
    return HMElement(u.model, acc)


def hm_taylor(u: HMElement, order: int):
    """``[D^(n)(u) for n <= order]``."""
    out = [{} for _ in range(order + 1)]
    for b, c in u.terms.items():
        for n, d in enumerate(basis_taylor(u.model, b, order)):
            for bb, v in d.items():
                _dadd(out[n], bb, c * v)
    return [HMElement(u.model, d) for d in out]


def hm_dgen(model: Model, alpha, i: int) -> HMElement:
    """``D^(i)(e^alpha)`` in the canonical basis."""
    alpha = tuple(int(x) for x in alpha)
    if len(alpha) != model.rank:
        raise UsageError(f"lattice vector {alpha} does not match rank {model.rank}")
    return hm_d_action(model.e(alpha), i)


# -- antipode ----------------------------------------------------------------

def _basis_antipode(model, b):
    cache = model._cache.setdefault("antipode", {})
    hit = cache.get(b)
    if hit is not None:
        return hit
    neg = Basis(tuple(-x for x in b.alpha), ())
    result = {neg: ONE}
    for kind, idx, i in b.gens:
        if kind == FIELD:
            image = {Basis(model.zero_alpha, ((FIELD, idx, i),)): -ONE}
        else:
            image = _b_series(model, idx, i)[i]
        result = _dmul(result, image)
    cache[b] = result
    return result


def hm_antipode(u: HMElement) -> HMElement:
    """Algebra antipode: ``s(e^alpha) = e^-alpha``, ``s(phi) = -phi`` and
    ``s(a_{k,i}) = b_{k,i}``, the solution of ``sum_j s(a_{k,j}) a_{k,i-j} = 0``."""
    acc = {}
    for b, c in u.terms.items():
        for bb, v in _basis_antipode(u.model, b).items():
            _dadd(acc, bb, c * v)
    return HMElement(u.model, acc)


# -- enumeration ---------------------------------------------------------------

def _gen_multisets(gens_by_degree, max_degree):
    """All sorted generator multisets with total degree <= max_degree."""
    items = sorted(gens_by_degree.items(), key=lambda kv: kv[0])
    out = []

    def rec(start, remaining, acc):
        out.append(tuple(sorted(acc)))
        for idx in range(start, len(items)):
            gen, d = items[idx]
            if d <= remaining:
                acc.append(gen)
                rec(idx, remaining - d, acc)
                acc.pop()

    rec(0, max_degree, [])
    return out


def enumerate_basis(model: Model, max_degree: int, radius: int = 1, alphas=None):
    """Canonical basis monomials of D-degree <= max_degree.

    Lattice coordinates range over ``[-radius, radius]`` unless ``alphas`` is
    given explicitly.
    """
    gens = {}
    for k in range(1, model.rank + 1):
        for i in range(1, max_degree + 1):
            gens[(LATTICE, k, i)] = i
    for j in range(1, model.nfields + 1):
        for i in range(0, max_degree):
            gens[(FIELD, j, i)] = i + 1
    if alphas is None:
        alphas = list(itertools.product(range(-radius, radius + 1), repeat=model.rank))
    out = []
    for alpha in alphas:
        for ms in _gen_multisets(gens, max_degree):
            out.append(Basis(tuple(alpha), ms))
    return sorted(set(out), key=lambda b: (b.degree, sum(map(abs, b.alpha)),
                                           tuple(-x for x in b.alpha), b.gens))


def as_element(model, b: Basis) -> HMElement:
    return HMElement(model, {b: ONE})


def linear_combination(model, items: Iterable):
    acc = {}
    for b, c in items:
        _dadd(acc, b, scalar(c))
    return HMElement(model, acc)
