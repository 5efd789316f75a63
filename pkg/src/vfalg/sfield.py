"""Singular coefficient rings S(I).

Elements are Laurent polynomials in variables ``x_i`` (with
:class:`~vfalg.scalar.ScalarQ` coefficients) divided by products of
canonical linear factors ``(x_i - q**n * x_j)`` with ``i < j``.  Every value
is kept in a unique reduced form: no denominator factor divides the
numerator, so equal functions have identical representations.

Monomials are tuples of ``(variable, exponent)`` pairs sorted by variable,
with zero exponents omitted.  Exponents may be negative (poles at the origin
arise after substituting a variable by zero).
"""

from __future__ import annotations

from math import comb
from typing import Iterable, Mapping, NamedTuple

from gmpy2 import lcm, mpq, mpz

from .errors import DomainError, UsageError
from .scalar import _ONE_DEN, ONE, ZERO, ScalarQ, scalar


class FactorKey(NamedTuple):
    """The linear form ``x_i - q**n * x_j`` with ``i < j``."""

    i: int
    j: int
    n: int

    def __str__(self):
        if self.n == 0:
            return f"(x{self.i}-x{self.j})"
        qp = "q" if self.n == 1 else f"q^{self.n}"
        return f"(x{self.i}-{qp}*x{self.j})"


def orient(i, j, n):
    """Canonical form of ``x_i - q**n x_j``: returns ``(unit, FactorKey)``.

    For ``i > j`` the identity ``x_i - q^n x_j = -q^n (x_j - q^-n x_i)`` is used.
    """
    if i == j:
        raise DomainError(f"factor (x{i} - q^{n} x{j}) does not separate two variables")
    if i < j:
        return ONE, FactorKey(i, j, n)
    return ScalarQ.q_power(n, -1), FactorKey(j, i, -n)


# -- monomial helpers ----------------------------------------------------

def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    out = []
    ia = ib = 0
    la, lb = len(a), len(b)
    while ia < la and ib < lb:
        va, ea = a[ia]
        vb, eb = b[ib]
        if va == vb:
            e = ea + eb
            if e:
                out.append((va, e))
            ia += 1
            ib += 1
        elif va < vb:
            out.append(a[ia])
            ia += 1
        else:
            out.append(b[ib])
            ib += 1
    out.extend(a[ia:])
    out.extend(b[ib:])
    return tuple(out)


def _mono_exp(m, v):
    for var, e in m:
        if var == v:
            return e
    return 0


def _mono_drop(m, v):
    """Return ``(exponent of v, monomial without v)``."""
    for k, (var, e) in enumerate(m):
        if var == v:
            return e, m[:k] + m[k + 1:]
    return 0, m


def _mono_shift(m, v, d):
    """Multiply monomial by ``x_v**d``."""
    if d == 0:
        return m
    return _mono_mul(m, ((v, d),))


def _padd(acc, mono, c):
    v = acc.get(mono)
    if v is None:
        acc[mono] = c
    else:
        v = v + c
        if v:
            acc[mono] = v
        else:
            del acc[mono]


def _pmul(p, r):
    if not p or not r:
        return {}
    if len(r) == 1:
        (m2, c2), = r.items()
        if not m2:
            if c2.is_one:
                return dict(p)
            return {m: c * c2 for m, c in p.items()}
    if not (_laurent_only(p) and _laurent_only(r)):
        acc = {}
        for m1, c1 in p.items():
            for m2, c2 in r.items():
                _padd(acc, _mono_mul(m1, m2), c1 * c2)
        return acc
    # all coefficients are Laurent polynomials in q
    if len(p) * len(r) >= _PACK_THRESHOLD:
        return _pmul_packed(p, r)
    return _pmul_sparse(p, r)


def _laurent_only(p):
    one = _ONE_DEN
    for c in p.values():
        if c._den != one:
            return False
    return True


def _pmul_sparse(p, r):
    flat = {}
    rr = [(m2, c2._num) for m2, c2 in r.items()]
    for m1, c1 in p.items():
        n1 = c1._num
        single = n1[0] if len(n1) == 1 else None
        for m2, n2 in rr:
            mono = _mono_mul(m1, m2)
            d = flat.get(mono)
            if d is None:
                d = flat[mono] = {}
            if single is not None and len(n2) == 1:
                e = single[0] + n2[0][0]
                t = single[1] * n2[0][1]
                v = d.get(e)
                d[e] = t if v is None else v + t
                continue
            for e1, a in n1:
                for e2, b in n2:
                    e = e1 + e2
                    v = d.get(e)
                    d[e] = a * b if v is None else v + a * b
    raw = ScalarQ._raw
    out = {}
    for mono, d in flat.items():
        items = tuple(sorted((e, c) for e, c in d.items() if c))
        if items:
            out[mono] = raw(items)
    return out


_PACK_THRESHOLD = 200


def _qpack(p):
    """Pack each q-Laurent coefficient of ``p`` into one integer.

    Returns ``(scale, low, span, cmax, nterms, items)``; coefficient ``c`` of
    ``q**e`` sits at slot ``e - low`` and the true values are ``items / scale``.
    """
    scale = mpz(1)
    low = high = None
    cmax = 0
    nterms = 0
    for c in p.values():
        num = c._num
        nterms += len(num)
        if low is None or num[0][0] < low:
            low = num[0][0]
        if high is None or num[-1][0] > high:
            high = num[-1][0]
        for _, a in num:
            d = a.denominator
            if d != 1:
                scale = lcm(scale, d)
    for c in p.values():
        for _, a in c._num:
            v = abs(a.numerator) * (scale // a.denominator)
            if v > cmax:
                cmax = v
    return scale, low, high - low, cmax, nterms


def _pmul_packed(p, r):
    """Product of q-Laurent numerators with each coefficient packed into an int.

    One big-integer multiplication per pair of monomials replaces the
    convolution over q-exponents.
    """
    sp, lp, wp, cp, np_ = _qpack(p)
    sr, lr, wr, cr, nr = _qpack(r)
    bits = int(cp * cr * min(np_, nr)).bit_length() + 2
    slots = wp + wr + 1

    def pack(form, scale, low):
        out = []
        for mono, c in form.items():
            acc = 0
            for e, a in c._num:
                acc += int(a.numerator * (scale // a.denominator)) << ((e - low) * bits)
            out.append((mono, acc))
        return out

    pp = pack(p, sp, lp)
    pr = pack(r, sr, lr)
    acc = {}
    get = acc.get
    for m1, v1 in pp:
        for m2, v2 in pr:
            mono = _mono_mul(m1, m2)
            acc[mono] = get(mono, 0) + v1 * v2
    low = lp + lr
    mask = (1 << bits) - 1
    half = 1 << (bits - 1)
    full = 1 << bits
    scale = sp * sr
    raw = ScalarQ._raw
    out = {}
    for mono, v in acc.items():
        if not v:
            continue
        items = []
        e = low
        for _ in range(slots):
            if not v:
                break
            c = v & mask
            if c >= half:
                c -= full
            v = (v - c) >> bits
            if c:
                items.append((e, mpq(c, scale) if scale != 1 else mpq(c)))
            e += 1
        if items:
            out[mono] = raw(tuple(items))
    return out


def _factor_poly(key, k):
    """``(x_i - q^n x_j)**k`` as a numerator dictionary, ``k >= 0``."""
    i, j, n = key
    out = {}
    for t in range(k + 1):
        c = ScalarQ.q_power(n * t, comb(k, t) * (-1) ** t)
        mono = []
        if k - t:
            mono.append((i, k - t))
        if t:
            mono.append((j, t))
        out[tuple(mono)] = c
    return out


_PRIME = (1 << 61) - 1
_QV = 1234567891


def _probe(v):
    return (v * 2654435761 + 97) % _PRIME


def _mod_image(num):
    """Coefficients of ``num`` reduced modulo the probe prime, or None if one has no image."""
    out = []
    for mono, c in num.items():
        cv = c._mod
        if cv is None:
            cv = c.mod_value(_PRIME, _QV)
            if cv is None:
                return None
            c._mod = cv
        out.append((cv, mono))
    return out


def _mod_nonzero(image, key):
    """Cheap certificate that the numerator does not vanish on ``x_i = q^n x_j``."""
    if image is None:
        return False
    i, j, n = key
    p = _PRIME
    xi = _probe(j) * pow(_QV, n, p) % p
    powers = {}
    total = 0
    for cv, mono in image:
        for v, e in mono:
            pk = (v, e)
            pv = powers.get(pk)
            if pv is None:
                pv = powers[pk] = pow(xi if v == i else _probe(v), e, p)
            cv = cv * pv % p
        total += cv
    return total % p != 0


def _divides(num, key, image=False):
    """Does ``x_i - q^n x_j`` divide the Laurent polynomial ``num``?

    ``image`` may carry a precomputed :func:`_mod_image` of ``num``.
    """
    if not num:
        return True
    if len(num) == 1:
        return False
    if _mod_nonzero(_mod_image(num) if image is False else image, key):
        return False
    i, j, n = key
    acc = {}
    for mono, c in num.items():
        ei, rest = _mono_drop(mono, i)
        if ei:
            rest = _mono_shift(rest, j, ei)
            c = c * ScalarQ.q_power(n * ei)
        _padd(acc, rest, c)
    return not acc


def _divide(num, key):
    """Exact quotient of ``num`` by ``x_i - q^n x_j`` (caller checked divisibility)."""
    i, j, n = key
    groups = {}
    for mono, c in num.items():
        ei, rest = _mono_drop(mono, i)
        groups.setdefault(ei, {})[rest] = c
    emin = min(groups)
    emax = max(groups)
    cq = ScalarQ.q_power(n)
    quotient = {}
    b = {}
    for d in range(emax - emin, 0, -1):
        a = groups.get(d + emin, {})
        # B_{d-1} = A_d + c x_j B_d
        nb = dict(a)
        for m, c in b.items():
            _padd(nb, _mono_shift(m, j, 1), c * cq)
        b = nb
        for m, c in b.items():
            quotient[_mono_shift(m, i, d - 1 + emin)] = c
    return quotient


def _reduce(num, den):
    """Cancel denominator factors against the numerator; returns (num, den-tuple)."""
    if not num:
        return {}, ()
    out = []
    image = _mod_image(num) if len(num) > 1 else None
    for key in sorted(den):
        m = den[key]
        while m and _divides(num, key, image):
            num = _divide(num, key)
            image = _mod_image(num) if len(num) > 1 else None
            m -= 1
        if m:
            out.append((key, m))
    return num, tuple(out)


class SingularFn:
    """Immutable element of S(I); see module docstring for the normal form."""

    __slots__ = ("num", "den", "varset", "_hash", "_dcache")

    def __init__(self, num, den, varset):
        # callers outside this module should use the constructors below
        self.num = num
        self.den = den
        self.varset = varset
        self._hash = None
        self._dcache = None

    @classmethod
    def build(cls, num: Mapping, den: Mapping, varset: Iterable[int]):
        """Canonicalize raw data: numerator dict and ``{FactorKey: multiplicity}``."""
        varset = frozenset(varset)
        num = {m: scalar(c) for m, c in num.items() if c}
        den = {FactorKey(*k): m for k, m in den.items() if m}
        for k, m in den.items():
            if m < 0:
                raise DomainError(f"negative multiplicity for {k}")
            if not (k.i < k.j):
                raise DomainError(f"factor {k} is not canonically oriented")
        _check_vars(num, den, varset)
        num, den = _reduce(num, den)
        return cls(num, den, varset)

    @classmethod
    def const(cls, c, varset=()):
        c = scalar(c)
        return cls({(): c} if c else {}, (), frozenset(varset))

    @classmethod
    def zero(cls, varset=()):
        return cls({}, (), frozenset(varset))

    @classmethod
    def one(cls, varset=()):
        return cls({(): ONE}, (), frozenset(varset))

    @classmethod
    def monomial(cls, exps: Mapping[int, int], coeff=1, varset=None):
        mono = tuple(sorted((v, e) for v, e in exps.items() if e))
        vs = frozenset(varset) if varset is not None else frozenset(exps)
        c = scalar(coeff)
        f = cls({mono: c} if c else {}, (), vs)
        _check_vars(f.num, {}, vs)
        return f

    @classmethod
    def var(cls, i, varset=None):
        return cls.monomial({i: 1}, 1, varset if varset is not None else (i,))

    @classmethod
    def factor(cls, i, j, n=0, power=1, varset=None):
        """``(x_i - q**n x_j)**power`` for any distinct ``i, j`` and integer power."""
        vs = frozenset(varset) if varset is not None else frozenset((i, j))
        unit, key = orient(i, j, n)
        u = unit ** power
        if power >= 0:
            num = {m: c * u for m, c in _factor_poly(key, power).items()}
            f = cls(num, (), vs)
        else:
            f = cls({(): u}, ((key, -power),), vs)
        _check_vars(f.num, dict(f.den), vs)
        return f

    @classmethod
    def from_factors(cls, powers: Mapping[FactorKey, int], coeff=1, varset=()):
        """Product of canonical factor powers (distinct keys are coprime)."""
        num = {(): scalar(coeff)}
        den = {}
        for key, p in powers.items():
            if p > 0:
                num = _pmul(num, _factor_poly(key, p))
            elif p < 0:
                den[key] = -p
        vs = frozenset(varset)
        _check_vars(num, den, vs)
        return cls(num, tuple(sorted(den.items())), vs)

    # -- basic queries ---------------------------------------------------
    @property
    def is_zero(self):
        return not self.num

    @property
    def is_constant(self):
        return not self.den and all(not m for m in self.num)

    def constant_value(self):
        if not self.is_constant:
            raise DomainError(f"{self} is not constant")
        return self.num.get((), ZERO)

    @property
    def is_polynomial(self):
        """No denominator factors and no negative exponents."""
        return not self.den and all(e > 0 for m in self.num for _, e in m)

    def used_vars(self):
        vs = set()
        for m in self.num:
            vs.update(v for v, _ in m)
        for k, _ in self.den:
            vs.add(k.i)
            vs.add(k.j)
        return frozenset(vs)

    def pole_order(self, i, j):
        """Multiplicity of ``(x_i - x_j)`` (q-exponent zero) in the denominator."""
        a, b = min(i, j), max(i, j)
        for k, m in self.den:
            if k.i == a and k.j == b and k.n == 0:
                return m
        return 0

    def mentions_q(self):
        if any(k.n for k, _ in self.den):
            return True
        return any(not c.is_rational for c in self.num.values())

    # -- arithmetic ------------------------------------------------------
    def _same_vars(self, other):
        if self.varset != other.varset:
            raise UsageError(
                f"variable sets differ: {sorted(self.varset)} vs {sorted(other.varset)}")

    def __add__(self, other):
        if not isinstance(other, SingularFn):
            if isinstance(other, (int, ScalarQ)) or hasattr(other, "denominator"):
                other = SingularFn.const(other, self.varset)
            else:
                return NotImplemented
        return sf_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return SingularFn({m: -c for m, c in self.num.items()}, self.den, self.varset)

    def __sub__(self, other):
        if not isinstance(other, SingularFn):
            other = SingularFn.const(other, self.varset)
        return sf_add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SingularFn):
            return sf_mul(self, other)
        if isinstance(other, ScalarQ) or isinstance(other, int) or hasattr(other, "denominator"):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def scale(self, c):
        c = scalar(c)
        if not c:
            return SingularFn.zero(self.varset)
        if c.is_one:
            return self
        return SingularFn({m: v * c for m, v in self.num.items()}, self.den, self.varset)

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = SingularFn.one(self.varset)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def inverse(self):
        """Inverse when the numerator is a unit times a product of admissible factors."""
        from .exprparse import factor_numerator  # local: parser owns factoring

        if self.is_zero:
            raise ZeroDivisionError("inverse of zero")
        unit, mono, powers = factor_numerator(self.num, self.varset)
        inv_mono = {v: -e for v, e in mono}
        out = dict((k, -m) for k, m in powers.items())
        for k, m in self.den:
            out[k] = out.get(k, 0) + m
        f = SingularFn.from_factors(out, unit.inverse(), self.varset)
        return f * SingularFn.monomial(inv_mono, 1, self.varset)

    def __truediv__(self, other):
        if isinstance(other, SingularFn):
            return self * other.inverse()
        return self.scale(scalar(other).inverse())

    def __eq__(self, other):
        if isinstance(other, SingularFn):
            return (self.varset == other.varset and self.den == other.den
                    and self.num == other.num)
        if isinstance(other, (int, ScalarQ)):
            return self.is_constant and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), self.den, self.varset))
        return self._hash

    def __bool__(self):
        return bool(self.num)

    def __str__(self):
        from .exprparse import format_sfn

        return format_sfn(self)

    def __repr__(self):
        return f"SingularFn({str(self)!r}, vars={sorted(self.varset)})"

    # -- convenience wrappers -------------------------------------------
    def with_varset(self, varset):
        vs = frozenset(varset)
        if vs == self.varset:
            return self
        _check_vars(self.num, dict(self.den), vs)
        return SingularFn(self.num, self.den, vs)

    def divided_deriv(self, var, k=1):
        return sf_divided_deriv(self, var, k)

    def rename(self, mapping, varset=None):
        return sf_rename(self, mapping, varset)

    def set_zero(self, var):
        return sf_set_zero(self, var)

    def expand(self, region, cutoff):
        return sf_expand(self, region, cutoff)

    def substitute_q(self, value):
        """Specialize q; q-shifted denominator factors are only allowed when ``value == 1``."""
        num = {}
        for m, c in self.num.items():
            _padd(num, m, c.at_q(value))
        den = {}
        for k, mult in self.den:
            key = k
            if k.n:
                if ScalarQ.q_power(k.n).at_q(value) != 1:
                    raise DomainError("only q=1 specialization of q-shifted factors is supported")
                key = FactorKey(k.i, k.j, 0)
            den[key] = den.get(key, 0) + mult
        return SingularFn.build(num, den, self.varset)


def _check_vars(num, den, varset):
    for m in num:
        for v, _ in m:
            if v not in varset:
                raise UsageError(f"variable x{v} not in variable set {sorted(varset)}")
    for k in den:
        if k.i not in varset or k.j not in varset:
            raise UsageError(f"factor {k} uses variables outside {sorted(varset)}")


# -- ring operations -----------------------------------------------------

def sf_add(f: SingularFn, g: SingularFn) -> SingularFn:
    f._same_vars(g)
    if not g.num:
        return f
    if not f.num:
        return g
    if f.den == g.den:
        acc = dict(f.num)
        for m, c in g.num.items():
            _padd(acc, m, c)
        if not f.den:
            return SingularFn(acc, (), f.varset)
        num, den = _reduce(acc, dict(f.den))
        return SingularFn(num, den, f.varset)
    return sf_sum([f, g], f.varset)


def sf_sum(items, varset=None) -> SingularFn:
    """Sum of many elements.

    Items sharing a denominator are added directly; the remaining partial sums
    are combined pairwise, closest denominators first, so intermediate common
    denominators stay small.
    """
    items = [x for x in items if x.num]
    if varset is None:
        if not items:
            raise UsageError("sf_sum of an empty list needs an explicit varset")
        varset = items[0].varset
    varset = frozenset(varset)
    for x in items:
        if x.varset != varset:
            raise UsageError(
                f"variable sets differ: {sorted(x.varset)} vs {sorted(varset)}")
    if not items:
        return SingularFn.zero(varset)
    if len(items) == 1:
        return items[0]
    groups = {}
    for x in items:
        acc = groups.get(x.den)
        if acc is None:
            groups[x.den] = dict(x.num)
        else:
            for mono, c in x.num.items():
                _padd(acc, mono, c)
    parts = []
    for den, num in groups.items():
        if not num:
            continue
        if den:
            num, den = _reduce(num, dict(den))
        parts.append((num, dict(den)))
    parts = [pt for pt in parts if pt[0]]
    parts = _greedy_merge(parts)
    if not parts:
        return SingularFn.zero(varset)
    num, den = parts[0]
    return SingularFn(num, tuple(sorted((k, m) for k, m in den.items() if m)), varset)


def _excess(da, db):
    """Degree added to the two denominators by passing to their lcm."""
    e = 0
    for k, m in da.items():
        d = db.get(k, 0)
        e += abs(m - d)
    for k, m in db.items():
        if k not in da:
            e += m
    return e


def _greedy_merge(parts):
    """Repeatedly add the two parts whose denominators are closest."""
    parts = list(parts)
    while len(parts) > 1:
        best = None
        for x in range(len(parts)):
            dx = parts[x][1]
            for y in range(x + 1, len(parts)):
                e = _excess(dx, parts[y][1])
                if best is None or e < best[0]:
                    best = (e, x, y)
                    if e == 0:
                        break
            if best[0] == 0:
                break
        _, x, y = best
        merged = _combine(parts[x], parts[y])
        del parts[y]
        del parts[x]
        if merged[0]:
            parts.append(merged)
    return parts


def _cofactor(den, lcm):
    return [(k, m - den.get(k, 0)) for k, m in lcm.items() if m != den.get(k, 0)]


def _times_x(mono, v):
    for k, (var, e) in enumerate(mono):
        if var == v:
            return mono[:k] + ((v, e + 1),) + mono[k + 1:] if e != -1 else mono[:k] + mono[k + 1:]
        if var > v:
            return mono[:k] + ((v, 1),) + mono[k:]
    return mono + ((v, 1),)


def _mul_factors(num, factors):
    """``num * prod (x_i - q^n x_j)^d`` one binomial at a time.

    Coefficients are packed as in :func:`_pmul_packed`, so each binomial
    step is a shift and a subtraction per monomial.
    """
    if not factors:
        return num
    if not _laurent_only(num):
        for key, d in factors:
            num = _pmul(num, _factor_poly(key, d))
        return num
    scale, low, span, cmax, _ = _qpack(num)
    steps = sum(d for _, d in factors)
    bits = int(cmax).bit_length() + steps + 2
    cur = {}
    for mono, c in num.items():
        acc = 0
        for e, a in c._num:
            acc += int(a.numerator * (scale // a.denominator)) << ((e - low) * bits)
        cur[mono] = acc
    for (i, j, n), d in factors:
        for _ in range(d):
            nxt = {}
            get = nxt.get
            if n >= 0:
                sh_i, sh_j = 0, n * bits
            else:
                sh_i, sh_j = -n * bits, 0
                low += n
            for mono, v in cur.items():
                m1 = _times_x(mono, i)
                nxt[m1] = get(m1, 0) + (v << sh_i)
                m2 = _times_x(mono, j)
                nxt[m2] = get(m2, 0) - (v << sh_j)
            cur = {m: v for m, v in nxt.items() if v}
    mask = (1 << bits) - 1
    half = 1 << (bits - 1)
    full = 1 << bits
    raw = ScalarQ._raw
    out = {}
    for mono, v in cur.items():
        items = []
        e = low
        while v:
            c = v & mask
            if c >= half:
                c -= full
            v = (v - c) >> bits
            if c:
                items.append((e, mpq(c, scale)))
            e += 1
        out[mono] = raw(tuple(items))
    return out


def _combine(a, b):
    """``a + b`` for reduced ``(numerator, {key: multiplicity})`` pairs, reduced."""
    (na, da), (nb, db) = a, b
    lcm = dict(da)
    for k, m in db.items():
        if lcm.get(k, 0) < m:
            lcm[k] = m
    acc = dict(_mul_factors(na, _cofactor(da, lcm)))
    for mono, c in _mul_factors(nb, _cofactor(db, lcm)).items():
        _padd(acc, mono, c)
    if not acc:
        return {}, {}
    # a factor can only cancel where both summands carry it to the same power
    image = False
    for k in sorted(k for k, m in da.items() if db.get(k) == m):
        m = lcm[k]
        if image is False:
            image = _mod_image(acc) if len(acc) > 1 else None
        while m and _divides(acc, k, image):
            acc = _divide(acc, k)
            image = _mod_image(acc) if len(acc) > 1 else None
            m -= 1
        lcm[k] = m
    return acc, {k: m for k, m in lcm.items() if m}


def sf_mul(f: SingularFn, g: SingularFn) -> SingularFn:
    f._same_vars(g)
    if not f.num or not g.num:
        return SingularFn.zero(f.varset)
    if not f.den and not g.den:
        return SingularFn(_pmul(f.num, g.num), (), f.varset)
    # f and g are reduced and the factors are prime, so a factor of f.den can
    # only cancel against g.num and vice versa; cancel before multiplying
    fnum, gden = _cancel(f.num, g.den)
    gnum, fden = _cancel(g.num, f.den)
    num = _pmul(fnum, gnum)
    den = fden
    for k, m in gden.items():
        den[k] = den.get(k, 0) + m
    return SingularFn(num, tuple(sorted((k, m) for k, m in den.items() if m)), f.varset)


def _cancel(num, den):
    """Divide ``num`` by factors of ``den``; returns (quotient, remaining den)."""
    rest = dict(den)
    if len(num) < 2 or not rest:
        return num, rest
    image = _mod_image(num)
    for key in sorted(rest):
        m = rest[key]
        while m and _divides(num, key, image):
            num = _divide(num, key)
            image = _mod_image(num) if len(num) > 1 else None
            m -= 1
        rest[key] = m
    return num, rest


def sf_prod(items, varset) -> SingularFn:
    out = SingularFn.one(varset)
    for x in items:
        out = sf_mul(out, x)
        if not out.num:
            break
    return out


# -- calculus ------------------------------------------------------------

def _deriv1(f: SingularFn, var: int) -> SingularFn:
    """Plain partial derivative in ``x_var``."""
    if not f.num:
        return f
    involved = [(k, m) for k, m in f.den if var in (k.i, k.j)]
    dn = {}
    for mono, c in f.num.items():
        e, rest = _mono_drop(mono, var)
        if e:
            dn[_mono_shift(rest, var, e - 1)] = c * e
    if not involved:
        if not dn:
            return SingularFn.zero(f.varset)
        num, den = _reduce(dn, dict(f.den))
        return SingularFn(num, den, f.varset)
    # d/dx (N / prod F^m) = (N' prod F - N sum m F' prod_{G != F} G) / prod F^{m+1}
    polys = [_factor_poly(k, 1) for k, _ in involved]
    full = {(): ONE}
    for p in polys:
        full = _pmul(full, p)
    acc = _pmul(dn, full) if dn else {}
    for idx, (k, m) in enumerate(involved):
        dF = ONE if var == k.i else ScalarQ.q_power(k.n, -1)
        others = {(): dF * (-m)}
        for jdx, p in enumerate(polys):
            if jdx != idx:
                others = _pmul(others, p)
        for mono, c in _pmul(f.num, others).items():
            _padd(acc, mono, c)
    den = dict(f.den)
    for k, m in involved:
        den[k] = m + 1
    num, den = _reduce(acc, den)
    return SingularFn(num, den, f.varset)


def sf_divided_deriv(f: SingularFn, var: int, k: int) -> SingularFn:
    """Divided derivative ``(1/k!) d^k/dx_var^k``."""
    if var not in f.varset:
        raise UsageError(f"x{var} not in variable set {sorted(f.varset)}")
    if k < 0:
        raise UsageError("derivative order must be nonnegative")
    if k == 0 or not f.num:
        return f
    if f._dcache is None:
        f._dcache = {}
    hit = f._dcache.get((var, k))
    if hit is not None:
        return hit
    prev = sf_divided_deriv(f, var, k - 1)
    out = _deriv1(prev, var).scale(ScalarQ(1) / k)
    f._dcache[(var, k)] = out
    return out


# -- substitution --------------------------------------------------------

def sf_set_zero(f: SingularFn, var: int) -> SingularFn:
    """Substitute ``x_var = 0``; the variable leaves the variable set."""
    if var not in f.varset:
        raise UsageError(f"x{var} not in variable set {sorted(f.varset)}")
    vs = f.varset - {var}
    num = {}
    for mono, c in f.num.items():
        e, rest = _mono_drop(mono, var)
        if e < 0:
            raise DomainError(f"x{var}^{e} has a pole at x{var} = 0")
        if e == 0:
            _padd(num, rest, c)
    if not num:
        return SingularFn.zero(vs)
    coeff = ONE
    mono = ()
    den = {}
    for k, m in f.den:
        if k.i == var:
            # (0 - q^n x_j)^-m
            coeff = coeff * ScalarQ.q_power(-k.n * m, (-1) ** m)
            mono = _mono_shift(mono, k.j, -m)
        elif k.j == var:
            mono = _mono_shift(mono, k.i, -m)
        else:
            den[k] = m
    if mono or not coeff.is_one:
        num = {_mono_mul(m, mono): c * coeff for m, c in num.items()}
    num, den = _reduce(num, den)
    return SingularFn(num, den, vs)


def sf_rename(f: SingularFn, mapping: Mapping[int, int], varset=None) -> SingularFn:
    """Relabel variables by an injective map (identity outside its keys)."""
    full = {v: mapping.get(v, v) for v in f.varset}
    if len(set(full.values())) != len(full):
        raise UsageError(f"renaming {dict(mapping)} is not injective on {sorted(f.varset)}")
    target = frozenset(full.values()) if varset is None else frozenset(varset)
    if not frozenset(full.values()) <= target:
        raise UsageError("renamed variables fall outside the requested variable set")
    num = {}
    for mono, c in f.num.items():
        num[tuple(sorted((full[v], e) for v, e in mono))] = c
    if not f.den:
        return SingularFn(num, (), target)
    den = {}
    unit = ONE
    for k, m in f.den:
        u, key = orient(full[k.i], full[k.j], k.n)
        if not u.is_one:
            unit = unit * u ** (-m)
        den[key] = m
    if not unit.is_one:
        num = {mono: c * unit for mono, c in num.items()}
    return SingularFn(num, tuple(sorted(den.items())), target)


def sf_swap(f: SingularFn, a: int = 1, b: int = 2) -> SingularFn:
    return sf_rename(f, {a: b, b: a})


# -- series expansion ----------------------------------------------------

class LaurentSeries:
    """Truncated expansion of an S-element in a region ``x_{r0} >> x_{r1} >> ...``.

    ``terms`` maps exponent vectors (ordered like ``region``) to scalars.  The
    stored terms are exactly those of the full expansion whose exponents in
    every non-outermost variable are at most ``cutoff``.
    """

    __slots__ = ("region", "terms", "cutoff")

    def __init__(self, region, terms, cutoff):
        self.region = tuple(region)
        self.terms = {e: c for e, c in terms.items() if c}
        self.cutoff = cutoff

    def _keep(self, exps, cutoff=None):
        c = self.cutoff if cutoff is None else cutoff
        return all(e <= c for e in exps[1:])

    def truncate(self, cutoff):
        if cutoff > self.cutoff:
            raise UsageError("cannot raise the cutoff of a truncated series")
        return LaurentSeries(self.region,
                             {e: c for e, c in self.terms.items() if self._keep(e, cutoff)},
                             cutoff)

    def _check(self, other):
        if not isinstance(other, LaurentSeries):
            raise UsageError("expected a LaurentSeries")
        if self.region != other.region or self.cutoff != other.cutoff:
            raise UsageError(
                "series are comparable only with equal region and cutoff: "
                f"{self.region}/{self.cutoff} vs {other.region}/{other.cutoff}")

    def __add__(self, other):
        self._check(other)
        acc = dict(self.terms)
        for e, c in other.terms.items():
            _padd(acc, e, c)
        return LaurentSeries(self.region, acc, self.cutoff)

    def __neg__(self):
        return LaurentSeries(self.region, {e: -c for e, c in self.terms.items()}, self.cutoff)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        """Product truncated at the common cutoff.

        Exact only when both factors were expanded far enough that no product
        term inside the window needs a factor term outside it.
        """
        self._check(other)
        acc = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if self._keep(e):
                    _padd(acc, e, c1 * c2)
        return LaurentSeries(self.region, acc, self.cutoff)

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), ZERO)

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        self._check(other)
        return self.terms == other.terms

    __hash__ = None

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda t: (t[1:], t[0])):
            mono = "*".join(
                f"x{v}" if k == 1 else f"x{v}^{k}" for v, k in zip(self.region, e) if k)
            c = self.terms[e]
            if not mono:
                parts.append(f"({c})")
            else:
                parts.append(f"({c})*{mono}")
        return " + ".join(parts)

    def __repr__(self):
        return f"LaurentSeries(region={self.region}, cutoff={self.cutoff}, {self})"


def _geometric(m, c, k_max):
    """Coefficients of ``(1 - c t)**-m`` up to ``t**k_max``."""
    out = []
    ck = ONE
    for k in range(k_max + 1):
        out.append(ck * comb(m + k - 1, k))
        ck = ck * c
    return out


def expansion_bounds(f: SingularFn, region, cutoff):
    """Per-factor geometric orders needed to fill the window of ``sf_expand``."""
    pos = {v: p for p, v in enumerate(region)}
    nmin = {v: min((_mono_exp(m, v) for m in f.num), default=0) for v in region}
    inner_of = {}
    outer_of = {}
    for k, m in f.den:
        a, b = (k.i, k.j) if pos[k.i] < pos[k.j] else (k.j, k.i)
        outer_of.setdefault(a, []).append((k, m))
        inner_of.setdefault(b, []).append((k, m))
    bound = {}
    for v in reversed(region[1:]):
        extra = sum(bound[k] + m for k, m in outer_of.get(v, []))
        lim = cutoff - nmin[v] + extra
        for k, _ in inner_of.get(v, []):
            bound[k] = max(lim, 0)
    return bound


def sf_expand(f: SingularFn, region, cutoff: int) -> LaurentSeries:
    """Expand ``f`` in the region where ``region[0]`` is outermost (largest)."""
    region = tuple(region)
    if len(set(region)) != len(region):
        raise UsageError(f"region {region} repeats a variable")
    if not f.varset <= set(region):
        raise UsageError(f"region {region} does not cover {sorted(f.varset)}")
    pos = {v: p for p, v in enumerate(region)}
    bounds = expansion_bounds(f, region, cutoff)
    series = {}
    for mono, c in f.num.items():
        e = [0] * len(region)
        for v, k in mono:
            e[pos[v]] = k
        _padd(series, tuple(e), c)
    for key, m in f.den:
        i, j, n = key
        kmax = bounds[key]
        if pos[i] < pos[j]:
            # (x_i - c x_j)^-m = x_i^-m sum C(m+k-1,k) c^k (x_j/x_i)^k
            coeffs = _geometric(m, ScalarQ.q_power(n), kmax)
            outer, inner = pos[i], pos[j]
            unit = ONE
        else:
            # x_i - c x_j = -c x_j (1 - c^-1 x_i/x_j)
            coeffs = _geometric(m, ScalarQ.q_power(-n), kmax)
            outer, inner = pos[j], pos[i]
            unit = ScalarQ.q_power(-n * m, (-1) ** m)
        nxt = {}
        for e, c in series.items():
            for k, gk in enumerate(coeffs):
                e2 = list(e)
                e2[outer] -= m + k
                e2[inner] += k
                _padd(nxt, tuple(e2), c * gk * unit)
        series = nxt
    return LaurentSeries(region, {e: c for e, c in series.items()
                                  if all(x <= cutoff for x in e[1:])}, cutoff)
