"""Exact scalars: rational functions of the deformation parameter q.

A :class:`ScalarQ` is stored as ``L(q) / d(q)`` where ``L`` is a Laurent
polynomial with rational coefficients and ``d`` is a primitive integer
polynomial with positive leading coefficient and nonzero constant term.
Powers of q are absorbed into ``L`` so the pair is a unique normal form of
the underlying element of Q(q).  The overwhelmingly common case ``d == 1``
never touches polynomial gcd.
"""

from __future__ import annotations

from math import gcd as igcd

from gmpy2 import mpq

_ONE_DEN = (1,)
# powers of the probe value; a handful of entries per exponent range
_POW = {}


def _strip(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def _pmul(a, b):
    if not a or not b:
        return []
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _strip(out)


def _pdivmod(a, b):
    a = list(a)
    quot = [mpq(0)] * max(len(a) - len(b) + 1, 0)
    lead = b[-1]
    while len(a) >= len(b) and a:
        c = a[-1] / lead
        shift = len(a) - len(b)
        quot[shift] = c
        for i, y in enumerate(b):
            a[i + shift] -= c * y
        _strip(a)
    return _strip(quot), a


def _pgcd(a, b):
    a, b = [mpq(x) for x in a], [mpq(x) for x in b]
    _strip(a)
    _strip(b)
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    if not a:
        return [mpq(1)]
    lead = a[-1]
    return [x / lead for x in a]


def _primitive(p):
    """Split a rational polynomial as ``c * P`` with ``P`` primitive over Z, lead > 0."""
    den = 1
    for x in p:
        den = den * x.denominator // igcd(den, int(x.denominator))
    ints = [int(x * den) for x in p]
    g = 0
    for x in ints:
        g = igcd(g, x)
    if ints[-1] < 0:
        g = -g
    return mpq(g, den), tuple(x // g for x in ints)


class ScalarQ:
    """Element of Q(q) in reduced normal form; immutable."""

    # _mod caches the value modulo the probe prime used by the S-ring
    __slots__ = ("_num", "_den", "_hash", "_mod")

    def __init__(self, value=0):
        if isinstance(value, ScalarQ):
            self._num, self._den = value._num, value._den
        else:
            v = mpq(value)
            self._num = ((0, v),) if v else ()
            self._den = _ONE_DEN
        self._hash = None
        self._mod = None

    @classmethod
    def _raw(cls, num, den=_ONE_DEN):
        obj = cls.__new__(cls)
        obj._num = num
        obj._den = den
        obj._hash = None
        obj._mod = None
        return obj

    @classmethod
    def q_power(cls, n, coeff=1):
        """``coeff * q**n``."""
        c = mpq(coeff)
        return cls._raw(((n, c),) if c else ())

    @classmethod
    def laurent(cls, coeffs):
        """From a mapping ``{exponent: coefficient}``."""
        items = tuple(sorted((e, mpq(c)) for e, c in coeffs.items() if c))
        return cls._raw(items)

    @classmethod
    def from_polys(cls, num, den):
        """``num(q)/den(q)`` for coefficient lists (lowest degree first)."""
        num = _strip([mpq(x) for x in num])
        den = _strip([mpq(x) for x in den])
        if not den:
            raise ZeroDivisionError("zero denominator")
        lnum = {i: c for i, c in enumerate(num) if c}
        return cls._normalize(lnum, den)

    @classmethod
    def _normalize(cls, lnum, den):
        # lnum: {exp: mpq} Laurent numerator; den: list of mpq, nonzero
        if not lnum:
            return cls._raw(())
        shift = 0
        while den[shift] == 0:
            shift += 1
        if shift:
            den = den[shift:]
            lnum = {e - shift: c for e, c in lnum.items()}
        if len(den) == 1:
            c = den[0]
            return cls._raw(tuple(sorted((e, v / c) for e, v in lnum.items())))
        e0 = min(lnum)
        poly = [mpq(0)] * (max(lnum) - e0 + 1)
        for e, c in lnum.items():
            poly[e - e0] = c
        g = _pgcd(poly, den)
        if len(g) > 1:
            poly, _ = _pdivmod(poly, g)
            den, _ = _pdivmod(den, g)
        if len(den) == 1:
            c = den[0]
            return cls._raw(tuple((e0 + i, v / c) for i, v in enumerate(poly) if v))
        c, pden = _primitive(den)
        return cls._raw(tuple((e0 + i, v / c) for i, v in enumerate(poly) if v), pden)

    # -- structure -------------------------------------------------------
    @property
    def is_zero(self):
        return not self._num

    @property
    def is_one(self):
        return self._den == _ONE_DEN and self._num == ((0, 1),)

    @property
    def is_rational(self):
        """True when the value does not involve q."""
        return self._den == _ONE_DEN and all(e == 0 for e, _ in self._num)

    @property
    def is_q_monomial(self):
        return self._den == _ONE_DEN and len(self._num) == 1

    def q_span(self):
        """Min and max q-exponent of the Laurent numerator (``(0, 0)`` for zero)."""
        if not self._num:
            return 0, 0
        return self._num[0][0], self._num[-1][0]

    def as_polys(self):
        """Integer-coefficient ``(numerator, denominator)`` lists, lowest degree first.

        Content and common powers of q are cleared; the denominator's leading
        coefficient is positive.
        """
        if not self._num:
            return [0], [1]
        e0 = self._num[0][0]
        poly = [mpq(0)] * (self._num[-1][0] - e0 + 1)
        for e, c in self._num:
            poly[e - e0] = c
        den = [mpq(x) for x in self._den]
        if e0 < 0:
            den = [mpq(0)] * (-e0) + den
        else:
            poly = [mpq(0)] * e0 + poly
        cn, pn = _primitive(poly)
        cd, pd = _primitive(den)
        c = cn / cd
        num = [int(x * c.numerator) for x in pn]
        den = [int(x * c.denominator) for x in pd]
        return num, den

    def to_rational(self):
        if not self.is_rational:
            raise ValueError(f"{self} depends on q")
        return self._num[0][1] if self._num else mpq(0)

    def at_q(self, value):
        """Specialize q to a nonzero rational number."""
        v = mpq(value)
        num = sum((c * v**e for e, c in self._num), mpq(0))
        den = sum((c * v**i for i, c in enumerate(self._den)), mpq(0))
        if den == 0:
            raise ZeroDivisionError(f"pole of {self} at q={value}")
        return ScalarQ(num / den)

    def mod_value(self, p, qv):
        """Value modulo the prime ``p`` at ``q = qv``; ``None`` if the denominator vanishes."""
        den = 1
        if self._den != _ONE_DEN:
            den = 0
            for i, c in enumerate(self._den):
                den = (den + c * pow(qv, i, p)) % p
            if not den:
                return None
        num = 0
        for e, c in self._num:
            cn = int(c.numerator)
            cd = int(c.denominator)
            if cd != 1:
                if not cd % p:
                    return None
                cn = cn * pow(cd, -1, p)
            if e:
                key = (p, qv, e)
                pe = _POW.get(key)
                if pe is None:
                    pe = _POW[key] = pow(qv, e, p)
                cn *= pe
            num += cn
        num %= p
        return num if den == 1 else num * pow(den, -1, p) % p

    # -- arithmetic ------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, ScalarQ):
            return other
        if isinstance(other, (int, type(mpq(0)))):
            return ScalarQ(other)
        try:
            return ScalarQ(mpq(other))
        except (TypeError, ValueError):
            return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other._num:
            return self
        if not self._num:
            return other
        if self._den == other._den:
            acc = dict(self._num)
            for e, c in other._num:
                v = acc.get(e, 0) + c
                if v:
                    acc[e] = v
                else:
                    acc.pop(e, None)
            if self._den == _ONE_DEN:
                return ScalarQ._raw(tuple(sorted(acc.items())))
            return ScalarQ._normalize(acc, [mpq(x) for x in self._den])
        d1 = [mpq(x) for x in self._den]
        d2 = [mpq(x) for x in other._den]
        acc = {}
        for e, c in self._num:
            for i, y in enumerate(d2):
                if y:
                    acc[e + i] = acc.get(e + i, 0) + c * y
        for e, c in other._num:
            for i, y in enumerate(d1):
                if y:
                    acc[e + i] = acc.get(e + i, 0) + c * y
        acc = {e: c for e, c in acc.items() if c}
        return ScalarQ._normalize(acc, _pmul(d1, d2))

    __radd__ = __add__

    def __neg__(self):
        return ScalarQ._raw(tuple((e, -c) for e, c in self._num), self._den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, int):
            if other == 0:
                return ScalarQ._raw(())
            return ScalarQ._raw(tuple((e, c * other) for e, c in self._num), self._den)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not self._num or not other._num:
            return ScalarQ._raw(())
        if len(other._num) == 1 and other._den == _ONE_DEN:
            (f, d), = other._num
            return ScalarQ._raw(tuple((e + f, c * d) for e, c in self._num), self._den)
        if len(self._num) == 1 and self._den == _ONE_DEN:
            (f, d), = self._num
            return ScalarQ._raw(tuple((e + f, c * d) for e, c in other._num), other._den)
        acc = {}
        for e, c in self._num:
            for f, d in other._num:
                acc[e + f] = acc.get(e + f, 0) + c * d
        acc = {e: c for e, c in acc.items() if c}
        if self._den == _ONE_DEN and other._den == _ONE_DEN:
            return ScalarQ._raw(tuple(sorted(acc.items())))
        den = _pmul([mpq(x) for x in self._den], [mpq(x) for x in other._den])
        return ScalarQ._normalize(acc, den)

    __rmul__ = __mul__

    def inverse(self):
        if not self._num:
            raise ZeroDivisionError("inverse of zero scalar")
        if len(self._num) == 1:
            (e, c), = self._num
            if self._den == _ONE_DEN:
                return ScalarQ._raw(((-e, 1 / c),))
            return ScalarQ._raw(tuple((i - e, x / c) for i, x in enumerate(self._den) if x))
        e0 = self._num[0][0]
        poly = [mpq(0)] * (self._num[-1][0] - e0 + 1)
        for e, c in self._num:
            poly[e - e0] = c
        lnum = {i - e0: mpq(x) for i, x in enumerate(self._den) if x}
        return ScalarQ._normalize(lnum, poly)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = ScalarQ(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, ScalarQ):
            return self._num == other._num and self._den == other._den
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._num == other._num and self._den == other._den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._num, self._den))
        return self._hash

    def __bool__(self):
        return bool(self._num)

    # -- text ------------------------------------------------------------
    def _laurent_text(self):
        if not self._num:
            return "0"
        parts = []
        for e, c in reversed(self._num):
            neg = c < 0
            a = -c if neg else c
            if e == 0:
                body = str(a)
            else:
                var = "q" if e == 1 else f"q^{e}"
                body = var if a == 1 else f"{a}*{var}"
            parts.append((neg, body))
        out = ("-" if parts[0][0] else "") + parts[0][1]
        for neg, body in parts[1:]:
            out += (" - " if neg else " + ") + body
        return out

    def is_single_term(self):
        return len(self._num) <= 1 and self._den == _ONE_DEN

    def __str__(self):
        text = self._laurent_text()
        if self._den == _ONE_DEN:
            return text
        dparts = []
        for i in range(len(self._den) - 1, -1, -1):
            c = self._den[i]
            if not c:
                continue
            neg = c < 0
            a = -c if neg else c
            if i == 0:
                body = str(a)
            else:
                var = "q" if i == 1 else f"q^{i}"
                body = var if a == 1 else f"{a}*{var}"
            dparts.append((neg, body))
        dtext = ("-" if dparts[0][0] else "") + dparts[0][1]
        for neg, body in dparts[1:]:
            dtext += (" - " if neg else " + ") + body
        if len(self._num) > 1:
            text = f"({text})"
        return f"{text}/({dtext})"

    def __repr__(self):
        return f"ScalarQ({str(self)!r})"


ZERO = ScalarQ(0)
ONE = ScalarQ(1)
Q = ScalarQ.q_power(1)


def scalar(value):
    """Coerce an int, rational or :class:`ScalarQ` to :class:`ScalarQ`."""
    return value if isinstance(value, ScalarQ) else ScalarQ(value)
