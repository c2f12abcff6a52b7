"""Exact scalar field for symbolic perturbative coefficients.

Every matrix element produced by the conjugation engine is a rational function
of the model couplings.  The numerator is a polynomial in all symbols and the
denominator is a product of powers of polynomials in the *classical* symbols
only (on-site interactions, fields, chemical potentials).  Inverting the
adjoint action of a diagonal operator only ever divides by energy differences,
which are linear in the classical couplings, so this representation is closed
under everything the engine does.

Monomials are packed into Python integers (``_BITS`` bits per exponent) so that
monomial multiplication is integer addition.  Integer order on packed
monomials is a lexicographic monomial order, which makes exact polynomial
division straightforward.

Truncation in the hopping degree acts on the numerator only; since the
denominator does not depend on hopping symbols this is exactly the truncation
of the Taylor expansion in the hopping amplitudes.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

logger = logging.getLogger(__name__)

_BITS = 12
_MASK = (1 << _BITS) - 1

Poly = Dict[int, "mpq"]
DenKey = Tuple[Tuple[int, "mpq"], ...]
Number = Union[int, Fraction, "mpq"]

__all__ = ["Ring", "ScalarValue", "to_mpq", "format_rational"]


def to_mpq(x) -> "mpq":
    """Convert an int, Fraction, mpq or ``"p/q"`` string to ``mpq`` exactly."""
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Rational)) or type(x).__name__ == "mpq":
        return mpq(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def format_rational(q) -> str:
    """Render an exact rational as ``"p/q"`` (or ``"p"`` when integral)."""
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class Ring:
    """A set of named symbols split into hopping and classical symbols.

    Parameters
    ----------
    hopping : sequence of str
        Symbols counted by :meth:`ScalarValue.hopping_degree`.
    classical : sequence of str
        Symbols allowed to appear in denominators.
    """

    def __init__(self, hopping: Sequence[str], classical: Sequence[str]):
        names = tuple(hopping) + tuple(classical)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol names in {names}")
        self.hopping = tuple(hopping)
        self.classical = tuple(classical)
        self.names = names
        self.n_hop = len(self.hopping)
        self._index = {n: i for i, n in enumerate(names)}
        self._hop_mask = 0
        for i in range(self.n_hop):
            self._hop_mask |= _MASK << (_BITS * i)
        self._hdeg_cache: Dict[int, int] = {}
        self._factors: Dict[DenKey, Poly] = {}

    def __repr__(self) -> str:
        return f"Ring(hopping={self.hopping}, classical={self.classical})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Ring) and self.names == other.names and self.n_hop == other.n_hop

    def __hash__(self) -> int:
        return hash((self.names, self.n_hop))

    # -- monomials -------------------------------------------------------
    def pack(self, exps: Sequence[int]) -> int:
        m = 0
        for i, e in enumerate(exps):
            if e < 0 or e > _MASK:
                raise ValueError(f"exponent {e} out of range")
            m |= e << (_BITS * i)
        return m

    def unpack(self, m: int) -> Tuple[int, ...]:
        return tuple((m >> (_BITS * i)) & _MASK for i in range(len(self.names)))

    def hop_degree(self, m: int) -> int:
        d = self._hdeg_cache.get(m)
        if d is None:
            h = m & self._hop_mask
            d = 0
            while h:
                d += h & _MASK
                h >>= _BITS
            self._hdeg_cache[m] = d
        return d

    def is_classical(self, m: int) -> bool:
        return not (m & self._hop_mask)

    # -- constructors ----------------------------------------------------
    def symbol(self, name: str) -> "ScalarValue":
        """Return the scalar for a single named symbol."""
        try:
            i = self._index[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r}; ring has {self.names}") from None
        return ScalarValue(self, {1 << (_BITS * i): mpq(1)})

    def symbols(self, *names: str) -> Tuple["ScalarValue", ...]:
        return tuple(self.symbol(n) for n in names)

    def const(self, value: Number) -> "ScalarValue":
        q = to_mpq(value)
        return ScalarValue(self, {0: q} if q else {})

    @property
    def zero(self) -> "ScalarValue":
        return ScalarValue(self, {})

    @property
    def one(self) -> "ScalarValue":
        return ScalarValue(self, {0: mpq(1)})

    # -- denominator factor registry -------------------------------------
    def _register_factor(self, poly: Poly) -> DenKey:
        key = tuple(sorted(poly.items()))
        if key not in self._factors:
            self._factors[key] = dict(poly)
        return key

    def factor_poly(self, key: DenKey) -> Poly:
        return self._factors[key]


# ---------------------------------------------------------------------------
# dense polynomial helpers on packed monomials
# ---------------------------------------------------------------------------

def _poly_add_into(acc: Poly, p: Poly, scale=None) -> None:
    for m, c in p.items():
        if scale is not None:
            c = c * scale
        v = acc.get(m)
        if v is None:
            acc[m] = c
        else:
            v = v + c
            if v:
                acc[m] = v
            else:
                del acc[m]


def _poly_mul(ring: Ring, p: Poly, q: Poly, max_degree: Optional[int] = None) -> Poly:
    if not p or not q:
        return {}
    out: Poly = {}
    if max_degree is None:
        for m1, c1 in p.items():
            for m2, c2 in q.items():
                m = m1 + m2
                v = out.get(m)
                out[m] = c1 * c2 if v is None else v + c1 * c2
    else:
        hd = ring.hop_degree
        qd = [(m2, c2, hd(m2)) for m2, c2 in q.items()]
        for m1, c1 in p.items():
            d1 = hd(m1)
            if d1 > max_degree:
                continue
            for m2, c2, d2 in qd:
                if d1 + d2 > max_degree:
                    continue
                m = m1 + m2
                v = out.get(m)
                out[m] = c1 * c2 if v is None else v + c1 * c2
    return {m: c for m, c in out.items() if c}


def _divides(a: int, b: int) -> bool:
    """True when monomial ``a`` divides monomial ``b``."""
    while a:
        if (a & _MASK) > (b & _MASK):
            return False
        a >>= _BITS
        b >>= _BITS
    return True


def _poly_divexact(p: Poly, f: Poly) -> Optional[Poly]:
    """Return ``p / f`` if ``f`` divides ``p`` exactly, else ``None``."""
    if not f:
        raise ZeroDivisionError("division by the zero polynomial")
    lf = max(f)
    cf = f[lf]
    rem = dict(p)
    quot: Poly = {}
    while rem:
        lt = max(rem)
        if not _divides(lf, lt):
            return None
        qm = lt - lf
        qc = rem[lt] / cf
        quot[qm] = qc
        for m, c in f.items():
            mm = qm + m
            v = rem.get(mm, 0) - qc * c
            if v:
                rem[mm] = v
            else:
                rem.pop(mm, None)
    return quot


def _den_merge(a: DenKey, b: DenKey) -> Tuple:
    d = dict(a)
    for k, e in b:
        d[k] = d.get(k, 0) + e
    return tuple(sorted(d.items()))


class ScalarValue:
    """Exact rational function in the symbols of a :class:`Ring`.

    Instances are immutable by convention.  Arithmetic with Python ints,
    :class:`fractions.Fraction` and ``mpq`` is supported.  Division is only
    defined by values whose numerator is free of hopping symbols.

    Examples
    --------
    >>> R = Ring(["t"], ["U"])
    >>> t, U = R.symbols("t", "U")
    >>> x = 4 * t**2 / U - 16 * t**4 / U**3
    >>> x.hopping_degree, x.min_degree
    (4, 2)
    >>> x.truncate(2) == 4 * t**2 / U
    True
    """

    __slots__ = ("ring", "num", "den")
    __hash__ = None  # equality is semantic, not structural

    def __init__(self, ring: Ring, num: Poly, den: Tuple = ()):
        self.ring = ring
        self.num = num
        self.den = den if num else ()

    # -- basic predicates --------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    @property
    def hopping_degree(self) -> int:
        """Maximal hopping degree among numerator monomials (-1 for zero)."""
        if not self.num:
            return -1
        hd = self.ring.hop_degree
        return max(hd(m) for m in self.num)

    @property
    def min_degree(self) -> Optional[int]:
        """Minimal hopping degree among numerator monomials (None for zero)."""
        if not self.num:
            return None
        hd = self.ring.hop_degree
        return min(hd(m) for m in self.num)

    def is_classical(self) -> bool:
        return all(self.ring.is_classical(m) for m in self.num)

    def is_constant(self) -> bool:
        return not self.num or (set(self.num) == {0} and not self.den)

    def constant_value(self) -> "mpq":
        if not self.is_constant():
            raise ValueError(f"{self} is not a constant")
        return self.num.get(0, mpq(0))

    # -- coercion -------------------------------------------------------------
    def _coerce(self, other) -> "ScalarValue":
        if isinstance(other, ScalarValue):
            if other.ring is not self.ring and other.ring != self.ring:
                raise ValueError("cannot combine scalars from different rings")
            return other
        return self.ring.const(other)

    def _den_poly(self, den: Tuple) -> Poly:
        out: Poly = {0: mpq(1)}
        for k, e in den:
            f = self.ring.factor_poly(k)
            for _ in range(e):
                out = _poly_mul(self.ring, out, f)
        return out

    def _lift(self, target: Tuple) -> Poly:
        """Numerator rescaled to the (larger) denominator ``target``."""
        if self.den == target:
            return self.num
        mine = dict(self.den)
        extra = []
        for k, e in target:
            d = e - mine.get(k, 0)
            if d < 0:
                raise AssertionError("target denominator does not contain self.den")
            if d:
                extra.append((k, d))
        return _poly_mul(self.ring, self.num, self._den_poly(tuple(extra)))

    @staticmethod
    def _den_lcm(a: Tuple, b: Tuple) -> Tuple:
        d = dict(a)
        for k, e in b:
            if d.get(k, 0) < e:
                d[k] = e
        return tuple(sorted(d.items()))

    # -- arithmetic -------------------------------------------------------------
    def __add__(self, other) -> "ScalarValue":
        other = self._coerce(other)
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            acc = dict(self.num)
            _poly_add_into(acc, other.num)
            return ScalarValue(self.ring, acc, self.den)
        den = self._den_lcm(self.den, other.den)
        acc = dict(self._lift(den))
        _poly_add_into(acc, other._lift(den))
        return ScalarValue(self.ring, acc, den)

    __radd__ = __add__

    def __neg__(self) -> "ScalarValue":
        return ScalarValue(self.ring, {m: -c for m, c in self.num.items()}, self.den)

    def __sub__(self, other) -> "ScalarValue":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "ScalarValue":
        return self._coerce(other) - self

    def mul(self, other, max_degree: Optional[int] = None) -> "ScalarValue":
        """Product, optionally truncated to hopping degree ``max_degree``."""
        if not isinstance(other, ScalarValue):
            q = to_mpq(other)
            if not q:
                return self.ring.zero
            return ScalarValue(self.ring, {m: c * q for m, c in self.num.items()}, self.den)
        other = self._coerce(other)
        num = _poly_mul(self.ring, self.num, other.num, max_degree)
        if not num:
            return self.ring.zero
        return ScalarValue(self.ring, num, _den_merge(self.den, other.den))

    def __mul__(self, other) -> "ScalarValue":
        return self.mul(other)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ScalarValue":
        if not isinstance(n, int) or n < 0:
            if isinstance(n, int) and n < 0:
                return self.ring.one / (self ** (-n))
            raise ValueError("only integer powers are supported")
        out = self.ring.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other) -> "ScalarValue":
        if not isinstance(other, ScalarValue):
            q = to_mpq(other)
            if not q:
                raise ZeroDivisionError("division by zero")
            return ScalarValue(self.ring, {m: c / q for m, c in self.num.items()}, self.den)
        other = self._coerce(other)
        if not other.num:
            raise ZeroDivisionError("division by the zero scalar")
        if not other.is_classical():
            raise ValueError("division is only defined by hopping-free scalars")
        num = self.num
        if other.den:
            num = _poly_mul(self.ring, num, self._den_poly(other.den))
        div = other.num
        nonconst = [m for m in div if m]
        lead = min(nonconst) if nonconst else 0
        content = div[lead]
        if not nonconst:
            return ScalarValue(self.ring, {m: c / content for m, c in num.items()}, self.den)
        norm = {m: c / content for m, c in div.items()}
        num = {m: c / content for m, c in num.items()}
        key = self.ring._register_factor(norm)
        return ScalarValue(self.ring, num, _den_merge(self.den, ((key, 1),)))

    def __rtruediv__(self, other) -> "ScalarValue":
        return self._coerce(other) / self

    def __eq__(self, other) -> bool:
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return (self - other).is_zero()

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    # -- structural operations ------------------------------------------------
    def truncate(self, max_degree: int) -> "ScalarValue":
        """Drop numerator monomials of hopping degree above ``max_degree``."""
        hd = self.ring.hop_degree
        num = {m: c for m, c in self.num.items() if hd(m) <= max_degree}
        if len(num) == len(self.num):
            return self
        return ScalarValue(self.ring, num, self.den)

    def degree_part(self, degree: int) -> "ScalarValue":
        """Homogeneous component of the given hopping degree."""
        hd = self.ring.hop_degree
        return ScalarValue(self.ring, {m: c for m, c in self.num.items() if hd(m) == degree}, self.den)

    def cancel(self) -> "ScalarValue":
        """Remove denominator factors that divide the numerator exactly."""
        num = self.num
        den = dict(self.den)
        changed = False
        for k in list(den):
            f = self.ring.factor_poly(k)
            while den[k]:
                q = _poly_divexact(num, f)
                if q is None:
                    break
                num = q
                den[k] -= 1
                changed = True
            if not den[k]:
                del den[k]
        if not changed:
            return self
        return ScalarValue(self.ring, num, tuple(sorted(den.items())))

    # -- evaluation -------------------------------------------------------------
    def _eval_poly(self, poly: Poly, vals: Sequence) -> object:
        total = 0
        for m, c in poly.items():
            term = c
            exps = self.ring.unpack(m)
            for v, e in zip(vals, exps):
                if e:
                    term = term * v**e
            total = total + term
        return total

    def evaluate(self, values: Mapping[str, object]):
        """Evaluate numerically.

        Exact inputs (int, Fraction, mpq) give a :class:`fractions.Fraction`;
        any float or complex input gives a float or complex result.
        """
        vals = []
        exact = True
        for n in self.ring.names:
            if n not in values:
                used = any(self.ring.unpack(m)[self.ring._index[n]] for m in self.num) or any(
                    self.ring.unpack(m)[self.ring._index[n]]
                    for k, _ in self.den
                    for m in self.ring.factor_poly(k)
                )
                if used:
                    raise KeyError(f"no value supplied for symbol {n!r}")
                vals.append(0)
                continue
            v = values[n]
            if isinstance(v, str):
                v = to_mpq(v)
            if isinstance(v, (float, complex)):
                exact = False
            elif not isinstance(v, int):
                v = mpq(v)
            vals.append(v)
        num = self._eval_poly(self.num, vals)
        den = 1
        for k, e in self.den:
            d = self._eval_poly(self.ring.factor_poly(k), vals)
            if d == 0:
                raise ZeroDivisionError(f"denominator factor {self._fmt_poly(self.ring.factor_poly(k))} vanishes")
            den = den * d**e
        res = num / den if not isinstance(den, int) or den != 1 else num
        if exact:
            q = mpq(res)
            return Fraction(int(q.numerator), int(q.denominator))
        return res

    def subs(self, mapping: Mapping[str, object]) -> "ScalarValue":
        """Substitute symbols by scalars or exact numbers."""
        ring = self.ring
        images = []
        for n in ring.names:
            if n in mapping:
                v = mapping[n]
                images.append(v if isinstance(v, ScalarValue) else ring.const(v))
            else:
                images.append(ring.symbol(n))

        def img(poly: Poly) -> ScalarValue:
            out = ring.zero
            for m, c in poly.items():
                term = ring.const(c)
                for v, e in zip(images, ring.unpack(m)):
                    if e:
                        term = term * v**e
                out = out + term
            return out

        res = img(self.num)
        for k, e in self.den:
            d = img(ring.factor_poly(k))
            if d.is_zero():
                raise ZeroDivisionError("substitution makes a denominator vanish")
            res = res / d**e
        return res

    # -- display ------------------------------------------------------------------
    def _fmt_mono(self, m: int) -> str:
        parts = []
        for n, e in zip(self.ring.names, self.ring.unpack(m)):
            if e == 1:
                parts.append(n)
            elif e:
                parts.append(f"{n}^{e}")
        return "*".join(parts)

    def _fmt_poly(self, poly: Poly) -> str:
        if not poly:
            return "0"
        terms = []
        for m in sorted(poly, key=lambda m: (self.ring.hop_degree(m), m)):
            c = poly[m]
            mono = self._fmt_mono(m)
            if not mono:
                terms.append(format_rational(c))
            elif c == 1:
                terms.append(mono)
            elif c == -1:
                terms.append("-" + mono)
            else:
                terms.append(f"{format_rational(c)}*{mono}")
        s = " + ".join(terms)
        return s.replace("+ -", "- ")

    def __str__(self) -> str:
        x = self.cancel()
        n = self._fmt_poly(x.num)
        if not x.den:
            return n
        dens = []
        for k, e in x.den:
            f = self._fmt_poly(self.ring.factor_poly(k))
            f = f if len(self.ring.factor_poly(k)) == 1 else f"({f})"
            dens.append(f if e == 1 else f"{f}^{e}")
        if len(x.num) > 1:
            n = f"({n})"
        return f"{n}/" + ("*".join(dens) if len(dens) == 1 else "(" + "*".join(dens) + ")")

    def __repr__(self) -> str:
        return f"ScalarValue({self})"

    def to_sympy(self):
        """Convert to a sympy expression (for display and cross-checks)."""
        import sympy

        syms = sympy.symbols(self.ring.names)
        if len(self.ring.names) == 1:
            syms = (syms,) if not isinstance(syms, tuple) else syms

        def conv(poly: Poly):
            expr = sympy.Integer(0)
            for m, c in poly.items():
                term = sympy.Rational(int(mpq(c).numerator), int(mpq(c).denominator))
                for s, e in zip(syms, self.ring.unpack(m)):
                    if e:
                        term = term * s**e
                expr += term
            return expr

        x = self.cancel()
        den = sympy.Integer(1)
        for k, e in x.den:
            den *= conv(self.ring.factor_poly(k)) ** e
        return conv(x.num) / den


def sum_scalars(ring: Ring, items: Iterable[ScalarValue]) -> ScalarValue:
    """Sum an iterable of scalars, grouping by denominator for speed."""
    groups: Dict[Tuple, Poly] = {}
    for x in items:
        if not x.num:
            continue
        acc = groups.setdefault(x.den, {})
        _poly_add_into(acc, x.num)
    out = ring.zero
    for den, num in groups.items():
        if num:
            out = out + ScalarValue(ring, num, den)
    return out
