"""Valued base fields and their exact arithmetic.

Three concrete coefficient fields cover every scenario the engine handles:

* `RationalFunctions`: K = k(t) with the t-adic valuation, k the rationals or a
  prime field.  Elements are reduced fractions of dense polynomials.
* `LexMonomialSeries`: Laurent polynomials in several variables over a prime
  field, valued by the lexicographic exponent order (first variable dominant).
  Supports a per-variable precision box so that objects known only modulo a
  monomial ideal can be handled honestly: asking for a leading term that the
  box cannot certify raises InsufficientPrecision instead of guessing.
* `CoordinateTower`: the fraction field of a 2-variable coordinate tower
  u_i = v_i^p (v_{i+1} + gamma_{i+1}), v_i = u_{i+1}, with v(u_1) = 1 and
  v(v_i) = 1/p^i.  Monomials in the tower atoms carry their values outright; a
  tied minimum is rewritten one atom deeper, and only where it ties, until a
  lone leading term certifies the value.

All fields share one duck-typed interface (see ValuedFieldBase) consumed by the
polynomial ring and the chain engine: exact arithmetic, `valuate`, residues of
units against canonical elements, canonical elements for base-group values, and
named atoms for the scenario expression parser.
"""

from fractions import Fraction
from math import comb

from .values import INF, Value, ValueGroup


class InsufficientPrecision(Exception):
    """A leading term was requested that the declared precision cannot certify."""


class UnsupportedStructure(Exception):
    """The input is legal mathematics but outside what this engine implements."""


# ---------------------------------------------------------------------------
# scalar domains (residue fields)


class Rationals:
    """The field Q with Fraction elements."""

    char = 0

    def __init__(self):
        self.zero = Fraction(0)
        self.one = Fraction(1)

    def from_int(self, n):
        return Fraction(n)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / a

    def div(self, a, b):
        return a * self.inv(b)

    def is_zero(self, a):
        return a == 0

    def pow(self, a, n):
        return a**n

    def sort_key(self, a):
        return (a.numerator, a.denominator)

    def format(self, a):
        return str(a)

    def __repr__(self):
        return "Q"


class PrimeField:
    """The field F_p with int elements in [0, p)."""

    def __init__(self, p):
        if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
            raise ValueError("%d is not prime" % p)
        self.p = p
        self.char = p
        self.zero = 0
        self.one = 1 % p

    def from_int(self, n):
        return n % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def div(self, a, b):
        return (a * self.inv(b)) % self.p

    def is_zero(self, a):
        return a % self.p == 0

    def pow(self, a, n):
        if n < 0:
            return pow(self.inv(a), -n, self.p)
        return pow(a, n, self.p)

    def sort_key(self, a):
        return (a % self.p,)

    def format(self, a):
        return str(a % self.p)

    def __repr__(self):
        return "GF(%d)" % self.p


QQ = Rationals()


# ---------------------------------------------------------------------------
# dense univariate polynomials over a scalar domain
#
# Coefficient lists are constant-first tuples with the trailing (highest) zero
# coefficients stripped; the zero polynomial is the empty tuple.


class ScalarPolys:
    def __init__(self, domain):
        self.domain = domain

    def trim(self, coeffs):
        coeffs = list(coeffs)
        while coeffs and self.domain.is_zero(coeffs[-1]):
            coeffs.pop()
        return tuple(coeffs)

    def zero(self):
        return ()

    def one(self):
        return (self.domain.one,)

    def const(self, c):
        return self.trim([c])

    def monomial(self, k, c=None):
        c = self.domain.one if c is None else c
        return self.trim([self.domain.zero] * k + [c])

    def degree(self, f):
        return len(f) - 1

    def lead(self, f):
        if not f:
            raise ValueError("zero polynomial has no leading coefficient")
        return f[-1]

    def ord(self, f):
        """Index of the lowest nonzero coefficient."""
        if not f:
            raise ValueError("zero polynomial has no order")
        return next(i for i, c in enumerate(f) if not self.domain.is_zero(c))

    def add(self, f, g):
        n = max(len(f), len(g))
        d = self.domain
        out = [d.zero] * n
        for i, c in enumerate(f):
            out[i] = c
        for i, c in enumerate(g):
            out[i] = d.add(out[i], c)
        return self.trim(out)

    def neg(self, f):
        return tuple(self.domain.neg(c) for c in f)

    def sub(self, f, g):
        return self.add(f, self.neg(g))

    def mul(self, f, g):
        if not f or not g:
            return ()
        d = self.domain
        out = [d.zero] * (len(f) + len(g) - 1)
        for i, a in enumerate(f):
            if d.is_zero(a):
                continue
            for j, b in enumerate(g):
                out[i + j] = d.add(out[i + j], d.mul(a, b))
        return self.trim(out)

    def scale(self, f, c):
        d = self.domain
        if d.is_zero(c):
            return ()
        return self.trim([d.mul(a, c) for a in f])

    def divmod(self, f, g):
        if not g:
            raise ZeroDivisionError("division by the zero polynomial")
        d = self.domain
        inv_lead = d.inv(self.lead(g))
        rem = list(f)
        dg = self.degree(g)
        q = [d.zero] * max(len(f) - dg, 0)
        while len(rem) - 1 >= dg and any(not d.is_zero(c) for c in rem):
            while rem and d.is_zero(rem[-1]):
                rem.pop()
            if len(rem) - 1 < dg:
                break
            k = len(rem) - 1 - dg
            c = d.mul(rem[-1], inv_lead)
            q[k] = c
            for i, b in enumerate(g):
                rem[k + i] = d.sub(rem[k + i], d.mul(c, b))
        return self.trim(q), self.trim(rem)

    def mod(self, f, g):
        return self.divmod(f, g)[1]

    def gcd(self, f, g):
        while g:
            f, g = g, self.mod(f, g)
        if f:
            f = self.scale(f, self.domain.inv(self.lead(f)))
        return f

    def xgcd(self, f, g):
        """(d, s, t) with s*f + t*g = d, d monic."""
        r0, r1 = f, g
        s0, s1 = self.one(), self.zero()
        t0, t1 = self.zero(), self.one()
        while r1:
            q, r = self.divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, self.sub(s0, self.mul(q, s1))
            t0, t1 = t1, self.sub(t0, self.mul(q, t1))
        if r0:
            c = self.domain.inv(self.lead(r0))
            r0, s0, t0 = self.scale(r0, c), self.scale(s0, c), self.scale(t0, c)
        return r0, s0, t0

    def monic(self, f):
        if not f:
            return f
        return self.scale(f, self.domain.inv(self.lead(f)))

    def pow(self, f, n):
        out = self.one()
        for _ in range(n):
            out = self.mul(out, f)
        return out

    def eval(self, f, x):
        d = self.domain
        acc = d.zero
        for c in reversed(f):
            acc = d.add(d.mul(acc, x), c)
        return acc

    def format(self, f, var):
        if not f:
            return "0"
        d = self.domain
        parts = []
        for i in range(len(f) - 1, -1, -1):
            c = f[i]
            if d.is_zero(c):
                continue
            if i == 0:
                mono = d.format(c)
            else:
                head = var if i == 1 else "%s^%d" % (var, i)
                cs = d.format(c)
                if cs == "1":
                    mono = head
                elif cs == "-1":
                    mono = "-" + head
                else:
                    mono = "%s*%s" % (cs, head)
            parts.append(mono)
        out = parts[0]
        for part in parts[1:]:
            out += " - " + part[1:] if part.startswith("-") else " + " + part
        return out


def factor_scalar_poly(domain, coeffs):
    """Monic irreducible factors of a univariate polynomial over Q or F_p, as a
    deterministically sorted list of (coeffs, multiplicity) pairs.  The leading
    unit is dropped.  sympy does the factoring; everything else stays local."""
    import sympy

    T = sympy.Symbol("T")
    sp = ScalarPolys(domain)
    coeffs = sp.trim(coeffs)
    if sp.degree(coeffs) < 1:
        return []
    desc = list(reversed(coeffs))
    if domain.char == 0:
        poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in desc], T, domain="QQ")
        _, raw = poly.factor_list()
        out = []
        for fac, mult in raw:
            fc = [Fraction(int(c.numerator), int(c.denominator)) for c in fac.all_coeffs()]
            out.append((sp.monic(sp.trim(reversed(fc))), int(mult)))
    else:
        poly = sympy.Poly([int(c) for c in desc], T, modulus=domain.char)
        _, raw = poly.factor_list()
        out = []
        for fac, mult in raw:
            fc = [int(c) % domain.char for c in fac.all_coeffs()]
            out.append((sp.monic(sp.trim(reversed(fc))), int(mult)))
    out.sort(key=lambda fm: (len(fm[0]), [domain.sort_key(c) for c in fm[0]]))
    return out


# ---------------------------------------------------------------------------
# shared field scaffolding


class ValuedFieldBase:
    """Interface shared by the concrete base fields.

    Subclasses provide: rank, scalars, arithmetic (add/sub/mul/neg/div),
    is_zero, valuate, unit_residue, canonical_element, lift_scalar, atom,
    base_group_gens, format_element.
    """

    def eq(self, x, y):
        return self.is_zero(self.sub(x, y))

    def base_group(self):
        return ValueGroup(self.rank, self.base_group_gens())

    def is_zero_mod_precision(self, x):
        """Default: exact fields have nothing to truncate."""
        return self.is_zero(x)

    def residue(self, x):
        """Residue of a value-zero element."""
        return self.unit_residue(x, self.one)

    def pow(self, x, n):
        out = self.one
        for _ in range(n):
            out = self.mul(out, x)
        return out

    def from_int(self, n):
        return self.lift_scalar(self.scalars.from_int(n))


# ---------------------------------------------------------------------------
# K = k(t) with the t-adic valuation


class RationalFunctions(ValuedFieldBase):
    """Fractions of polynomials in one variable, valued by order of vanishing
    at the origin.  Elements are canonical: numerator and denominator coprime,
    at most one of them divisible by t, lowest denominator coefficient 1."""

    rank = 1

    def __init__(self, scalars, var):
        self.scalars = scalars
        self.var = var
        self.sp = ScalarPolys(scalars)
        self.zero = ((), (scalars.one,))
        self.one = ((scalars.one,), (scalars.one,))

    @property
    def char(self):
        return self.scalars.char

    def _make(self, num, den):
        sp = self.sp
        num, den = sp.trim(num), sp.trim(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return self.zero
        g = sp.gcd(num, den)
        if sp.degree(g) > 0:
            num = sp.divmod(num, g)[0]
            den = sp.divmod(den, g)[0]
        c = den[sp.ord(den)]
        if not self.scalars.is_zero(self.scalars.sub(c, self.scalars.one)):
            inv = self.scalars.inv(c)
            num = sp.scale(num, inv)
            den = sp.scale(den, inv)
        return (num, den)

    def add(self, x, y):
        sp = self.sp
        return self._make(sp.add(sp.mul(x[0], y[1]), sp.mul(y[0], x[1])), sp.mul(x[1], y[1]))

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def neg(self, x):
        return (self.sp.neg(x[0]), x[1])

    def mul(self, x, y):
        return self._make(self.sp.mul(x[0], y[0]), self.sp.mul(x[1], y[1]))

    def div(self, x, y):
        if self.is_zero(y):
            raise ZeroDivisionError("division by zero")
        return self._make(self.sp.mul(x[0], y[1]), self.sp.mul(x[1], y[0]))

    def is_zero(self, x):
        return not x[0]

    def valuate(self, x):
        if self.is_zero(x):
            return INF
        return Value([self.sp.ord(x[0]) - self.sp.ord(x[1])])

    def unit_residue(self, x, d):
        vx, vd = self.valuate(x), self.valuate(d)
        if vx != vd:
            raise ValueError("unit_residue needs equal values, got %s and %s" % (vx, vd))
        sp, sc = self.sp, self.scalars
        num = sp.mul(x[0], d[1])
        den = sp.mul(x[1], d[0])
        return sc.div(num[sp.ord(num)], den[sp.ord(den)])

    def canonical_element(self, v):
        m = v.coords[0]
        if m.denominator != 1:
            raise ValueError("%s is not in the base value group" % v)
        m = int(m)
        if m >= 0:
            return (self.sp.monomial(m), (self.scalars.one,))
        return ((self.scalars.one,), self.sp.monomial(-m))

    def lift_scalar(self, c):
        return (self.sp.const(c), (self.scalars.one,))

    def atom(self, name):
        if name == self.var:
            return (self.sp.monomial(1), (self.scalars.one,))
        raise KeyError(name)

    def base_group_gens(self):
        return [Value([1])]

    def format_element(self, x):
        num = self.sp.format(x[0], self.var)
        if self.sp.degree(x[1]) == 0 and self.scalars.is_zero(self.scalars.sub(x[1][0], self.scalars.one)):
            return num
        den = self.sp.format(x[1], self.var)
        return "(%s)/(%s)" % (num, den)

    def __repr__(self):
        return "%r(%s) t-adic" % (self.scalars, self.var)


# ---------------------------------------------------------------------------
# lexicographically valued monomial series


class _BoxedTerms:
    """Laurent terms with an exactness flag.  `terms` maps exponent tuples to
    nonzero scalars; `exact` is False when the element is known only modulo the
    precision box of its field."""

    __slots__ = ("terms", "exact")

    def __init__(self, terms, exact):
        self.terms = terms
        self.exact = exact

    def __repr__(self):
        return "_BoxedTerms(%r, exact=%r)" % (self.terms, self.exact)


class LexMonomialSeries(ValuedFieldBase):
    """Laurent polynomials in an ordered tuple of variables, valued by the
    lexicographic order on exponent vectors (first variable strongest), with an
    optional per-variable truncation box.

    Division is supported only by single-term elements; everything the chain
    machinery needs from this field reduces to term arithmetic and leading
    forms, and a general series inverse would silently leave the exact world.
    """

    def __init__(self, scalars, varnames, precision=None):
        self.scalars = scalars
        self.varnames = tuple(varnames)
        self.rank = len(self.varnames)
        self.precision = dict(precision or {})
        for var in self.precision:
            if var not in self.varnames:
                raise ValueError("precision bound for unknown variable %r" % var)
        self.zero = _BoxedTerms({}, True)
        self.one = _BoxedTerms({(0,) * self.rank: scalars.one}, True)

    @property
    def char(self):
        return self.scalars.char

    def _bounds(self):
        return [(i, self.precision[v]) for i, v in enumerate(self.varnames) if v in self.precision]

    def _dropped(self, exps):
        return any(exps[i] >= b for i, b in self._bounds())

    def _make(self, terms, exact):
        sc = self.scalars
        out = {}
        for e, c in terms.items():
            if sc.is_zero(c):
                continue
            if not exact and self._dropped(e):
                continue
            out[e] = c
        return _BoxedTerms(out, exact)

    def approximate(self, x):
        """Forget everything outside the precision box."""
        if not self._bounds():
            return x
        return self._make(x.terms, False)

    def add(self, x, y):
        sc = self.scalars
        terms = dict(x.terms)
        for e, c in y.terms.items():
            terms[e] = sc.add(terms.get(e, sc.zero), c)
        return self._make(terms, x.exact and y.exact)

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def neg(self, x):
        return _BoxedTerms({e: self.scalars.neg(c) for e, c in x.terms.items()}, x.exact)

    def mul(self, x, y):
        sc = self.scalars
        terms = {}
        for e1, c1 in x.terms.items():
            for e2, c2 in y.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = sc.add(terms.get(e, sc.zero), sc.mul(c1, c2))
        return self._make(terms, x.exact and y.exact)

    def div(self, x, y):
        if not y.terms:
            raise ZeroDivisionError("division by zero")
        if len(y.terms) != 1:
            raise UnsupportedStructure("series division is restricted to monomial divisors")
        (e0, c0), = y.terms.items()
        inv = self.scalars.inv(c0)
        terms = {
            tuple(a - b for a, b in zip(e, e0)): self.scalars.mul(c, inv)
            for e, c in x.terms.items()
        }
        return self._make(terms, x.exact and y.exact)

    def is_zero(self, x):
        # for inexact elements this means: indistinguishable from zero
        return not x.terms

    def is_zero_mod_precision(self, x):
        return all(self._dropped(e) for e in x.terms)

    def _certified_min(self, x):
        if not x.terms:
            return None
        lead = min(x.terms)
        if not x.exact:
            for i, b in self._bounds():
                ghost = [0] * self.rank
                ghost[i] = b
                if not tuple(ghost) > lead:
                    raise InsufficientPrecision(
                        "leading term %s not certifiable inside the precision box" % (lead,)
                    )
        return lead

    def valuate(self, x):
        lead = self._certified_min(x)
        if lead is None:
            return INF
        return Value(lead)

    def unit_residue(self, x, d):
        lx, ld = self._certified_min(x), self._certified_min(d)
        if lx is None or ld is None:
            raise ValueError("unit_residue of zero")
        if lx != ld:
            raise ValueError("unit_residue needs equal values, got %s and %s" % (lx, ld))
        return self.scalars.div(x.terms[lx], d.terms[ld])

    def canonical_element(self, v):
        exps = []
        for c in v.coords:
            if c.denominator != 1:
                raise ValueError("%s is not in the base value group" % v)
            exps.append(int(c))
        return _BoxedTerms({tuple(exps): self.scalars.one}, True)

    def lift_scalar(self, c):
        if self.scalars.is_zero(c):
            return self.zero
        return _BoxedTerms({(0,) * self.rank: c}, True)

    def atom(self, name):
        if name in self.varnames:
            exps = tuple(1 if v == name else 0 for v in self.varnames)
            return _BoxedTerms({exps: self.scalars.one}, True)
        raise KeyError(name)

    def base_group_gens(self):
        gens = []
        for i in range(self.rank):
            gens.append(Value([1 if j == i else 0 for j in range(self.rank)]))
        return gens

    def format_element(self, x):
        if not x.terms:
            return "0"
        sc = self.scalars
        parts = []
        for e in sorted(x.terms):
            c = x.terms[e]
            factors = []
            for var, k in zip(self.varnames, e):
                if k == 0:
                    continue
                factors.append(var if k == 1 else "%s^%d" % (var, k))
            cs = sc.format(c)
            if not factors:
                mono = cs
            elif cs == "1":
                mono = "*".join(factors)
            elif cs == "-1":
                mono = "-" + "*".join(factors)
            else:
                mono = "*".join([cs] + factors)
            parts.append(mono)
        out = parts[0]
        for part in parts[1:]:
            out += " - " + part[1:] if part.startswith("-") else " + " + part
        if not x.exact:
            out += " + O(box)"
        return out

    def __repr__(self):
        return "%r[[%s]] lex" % (self.scalars, ", ".join(self.varnames))


# ---------------------------------------------------------------------------
# the coordinate tower


class CoordinateTower(ValuedFieldBase):
    """Fraction field of the tower k[u_1, v_1] -> k[u_2, v_2] -> ... over F_p,
    glued by u_i = v_i^p (v_{i+1} + gamma_{i+1}) and v_i = u_{i+1}, with
    v(u_i) = 1/p^(i-1) and v(v_i) = 1/p^i.

    Elements are fractions of sparse polynomials in the v-atoms alone; a u-atom
    enters through its defining expansion.  A monomial wears its value on its
    face (exponent over p^level, summed), so nothing is rewritten until a value
    computation actually ties.  A tie substitutes the shallowest atom involved
    one step deeper, v_i -> v_{i+1}^p (v_{i+2} + gamma_{i+2}), and only inside
    the tied terms; the unit power expands through base-p digits of the
    exponent using the Frobenius, which keeps structured inputs sparse.  Either
    the tie cancels and the minimum climbs, or a lone leading term survives and
    certifies the value.  The same reduction drives unit residues: numerator
    and denominator leads are pushed deeper until their monomials literally
    match, the unit evaluations accumulating into the scalars in front.

    A polynomial is the dict {((level, exp), ...): coefficient} with exponent
    vectors sorted by level; an element is a (num, den) pair of those.  Note
    that distinct polynomials can name the same field element when a scenario
    spells one atom through the relation of a deeper pair; values and residues
    still come out right, but `is_zero` and `eq` answer for the spelling, and a
    disguised zero fails loudly in certification rather than quietly.
    """

    rank = 1

    def __init__(self, p, gamma, max_depth):
        self.scalars = PrimeField(p)
        self.p = p
        self.max_depth = max_depth
        if isinstance(gamma, int):
            self._gammas = [gamma % p] * (max_depth + 1)
        else:
            self._gammas = [g % p for g in gamma]
            if len(self._gammas) < max_depth + 1:
                raise ValueError("need a tower unit for every level up to %d" % max_depth)
        if any(g == 0 for g in self._gammas):
            raise ValueError("tower units must be nonzero")
        self._one_poly = {(): self.scalars.one}
        self.zero = ({}, dict(self._one_poly))
        self.one = (dict(self._one_poly), dict(self._one_poly))

    @property
    def char(self):
        return self.p

    def gamma(self, level):
        return self._gammas[level]

    # sparse polynomials over the v-atoms

    def _padd(self, f, g):
        sc = self.scalars
        out = dict(f)
        for e, c in g.items():
            s = sc.add(out.get(e, sc.zero), c)
            if sc.is_zero(s):
                out.pop(e, None)
            else:
                out[e] = s
        return out

    def _pneg(self, f):
        sc = self.scalars
        return {e: sc.neg(c) for e, c in f.items()}

    @staticmethod
    def _emul(e1, e2):
        if not e1:
            return e2
        if not e2:
            return e1
        out = dict(e1)
        for lvl, n in e2:
            out[lvl] = out.get(lvl, 0) + n
        return tuple(sorted(out.items()))

    def _pmul(self, f, g):
        if g == self._one_poly:
            return dict(f)
        if f == self._one_poly:
            return dict(g)
        sc = self.scalars
        out = {}
        for e1, c1 in f.items():
            for e2, c2 in g.items():
                e = self._emul(e1, e2)
                s = sc.add(out.get(e, sc.zero), sc.mul(c1, c2))
                if sc.is_zero(s):
                    out.pop(e, None)
                else:
                    out[e] = s
        return out

    def _mono_value(self, exps):
        num = 0
        for lvl, n in exps:
            num += n * self.p ** (self.max_depth - lvl)
        return num

    # lazy rewriting

    def _unit_block(self, e, gamma):
        """(V + gamma)^e as {v_exponent: scalar} through base-p digits of e;
        gamma^(p^j) = gamma over the prime field, so each digit contributes a
        small binomial block in V^(p^j)."""
        sc = self.scalars
        out = {0: sc.one}
        block_exp = 1
        while e:
            d = e % self.p
            e //= self.p
            if d:
                block = {}
                for k in range(d + 1):
                    c = sc.mul(sc.from_int(comb(d, k)), sc.pow(gamma, d - k))
                    if not sc.is_zero(c):
                        block[k * block_exp] = c
                new = {}
                for e1, c1 in out.items():
                    for e2, c2 in block.items():
                        s = sc.add(new.get(e1 + e2, sc.zero), sc.mul(c1, c2))
                        if sc.is_zero(s):
                            new.pop(e1 + e2, None)
                        else:
                            new[e1 + e2] = s
                out = new
            block_exp *= self.p
        return out

    def _subst_term(self, exps, coeff, i):
        """One term with its v_i^e replaced by v_{i+1}^(p e) (v_{i+2} + g)^e."""
        sc = self.scalars
        by_level = dict(exps)
        e = by_level.pop(i)
        by_level[i + 1] = by_level.get(i + 1, 0) + self.p * e
        out = {}
        for ve, uc in self._unit_block(e, self.gamma(i + 2)).items():
            term = dict(by_level)
            if ve:
                term[i + 2] = term.get(i + 2, 0) + ve
            out[tuple(sorted(term.items()))] = sc.mul(coeff, uc)
        return out

    def _reduce_group(self, f, group, i):
        """Substitute atom i inside the given terms, leaving the rest alone."""
        sc = self.scalars
        out = {e: c for e, c in f.items() if e not in group}
        for e in group:
            c = f[e]
            if any(lvl == i for lvl, _ in e):
                pieces = self._subst_term(e, c, i)
            else:
                pieces = {e: c}
            for e2, c2 in pieces.items():
                s = sc.add(out.get(e2, sc.zero), c2)
                if sc.is_zero(s):
                    out.pop(e2, None)
                else:
                    out[e2] = s
        return out

    @staticmethod
    def _split_level(monos):
        """Smallest level at which the given exponent tuples disagree.
        Substituting a shared atom deepens every term in lockstep and never
        breaks a tie, so this is the only productive choice."""
        dicts = [dict(e) for e in monos]
        for lvl in sorted({l for d in dicts for l in d}):
            if len({d.get(lvl, 0) for d in dicts}) > 1:
                return lvl
        raise ValueError("monomials do not disagree at any level")

    def _certify(self, f):
        """Reduce until one monomial owns the minimal value; returns the
        scaled value (numerator over p^depth), its coefficient, its exponent
        vector, and the reduced polynomial."""
        steps = 0
        while True:
            if not f:
                raise InsufficientPrecision(
                    "certification cancelled every term within depth %d"
                    % self.max_depth)
            vals = {e: self._mono_value(e) for e in f}
            minv = min(vals.values())
            group = [e for e, w in vals.items() if w == minv]
            if len(group) == 1:
                e = group[0]
                return minv, f[e], e, f
            i = self._split_level(group)
            if i + 2 > self.max_depth:
                raise InsufficientPrecision("tower depth %d exhausted" % self.max_depth)
            f = self._reduce_group(f, set(group), i)
            steps += 1
            if steps > 64 * self.max_depth:
                raise InsufficientPrecision(
                    "value certification did not settle within depth %d"
                    % self.max_depth)

    # the field interface

    def _make(self, num, den):
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return ({}, dict(self._one_poly))
        return (num, den)

    def add(self, x, y):
        n1, d1 = x
        n2, d2 = y
        if d1 == d2:
            return self._make(self._padd(n1, n2), dict(d1))
        return self._make(self._padd(self._pmul(n1, d2), self._pmul(n2, d1)),
                          self._pmul(d1, d2))

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def neg(self, x):
        return (self._pneg(x[0]), x[1])

    def mul(self, x, y):
        return self._make(self._pmul(x[0], y[0]), self._pmul(x[1], y[1]))

    def div(self, x, y):
        if self.is_zero(y):
            raise ZeroDivisionError("division by zero")
        return self._make(self._pmul(x[0], y[1]), self._pmul(x[1], y[0]))

    def is_zero(self, x):
        return not x[0]

    def valuate(self, x):
        if self.is_zero(x):
            return INF
        num, den = x
        vn = self._certify(dict(num))[0]
        vd = self._certify(dict(den))[0]
        return Value([Fraction(vn - vd, self.p ** self.max_depth)])

    def unit_residue(self, x, d):
        if self.is_zero(x) or self.is_zero(d):
            raise ValueError("unit_residue of zero")
        num = self._pmul(x[0], d[1])
        den = self._pmul(x[1], d[0])
        sc = self.scalars
        steps = 0
        while True:
            vn, cn, en, num = self._certify(num)
            vd, cd, ed, den = self._certify(den)
            if vn != vd:
                raise ValueError(
                    "unit_residue needs equal values, got %s and %s"
                    % (Fraction(vn, self.p ** self.max_depth),
                       Fraction(vd, self.p ** self.max_depth)))
            if en == ed:
                return sc.div(cn, cd)
            i = self._split_level([en, ed])
            if i + 2 > self.max_depth:
                raise InsufficientPrecision("tower depth %d exhausted" % self.max_depth)
            if any(lvl == i for lvl, _ in en):
                num = self._reduce_group(num, {en}, i)
            if any(lvl == i for lvl, _ in ed):
                den = self._reduce_group(den, {ed}, i)
            steps += 1
            if steps > 64 * self.max_depth:
                raise InsufficientPrecision(
                    "residue computation did not settle within depth %d"
                    % self.max_depth)

    def canonical_element(self, v):
        n = v.coords[0] * self.p ** self.max_depth
        if n.denominator != 1:
            raise ValueError("%s is not in the base value group" % v)
        n = int(n)
        if n == 0:
            return (dict(self._one_poly), dict(self._one_poly))
        poly = {self._digit_monomial(abs(n)): self.scalars.one}
        if n > 0:
            return (poly, dict(self._one_poly))
        return (dict(self._one_poly), poly)

    def _digit_monomial(self, n):
        """Exponent vector of the shallowest monomial of value n / p^depth:
        base-p digits on the atoms, whole units carried by powers of v_1."""
        exps = {}
        for lvl in range(self.max_depth, 1, -1):
            n, d = divmod(n, self.p)
            if d:
                exps[lvl] = d
        if n:
            exps[1] = exps.get(1, 0) + n
        return tuple(sorted(exps.items()))

    def lift_scalar(self, c):
        c = c % self.p
        if c == 0:
            return ({}, dict(self._one_poly))
        return ({(): c}, dict(self._one_poly))

    def atom(self, name):
        kind, level = None, None
        if name in ("u", "v"):
            kind, level = name, 1
        elif name[:1] in ("u", "v") and name[1:].isdigit():
            kind, level = name[0], int(name[1:])
        if kind is None or level is None or level < 1:
            raise KeyError(name)
        if kind == "v":
            if level > self.max_depth:
                raise KeyError(name)
            return ({((level, 1),): self.scalars.one}, dict(self._one_poly))
        if level + 1 > self.max_depth:
            raise KeyError(name)
        num = {((level, self.p), (level + 1, 1)): self.scalars.one,
               ((level, self.p),): self.gamma(level + 1)}
        return (num, dict(self._one_poly))

    def base_group_gens(self):
        return [Value([Fraction(1, self.p**self.max_depth)])]

    def _format_poly(self, f):
        if not f:
            return "0"
        sc = self.scalars
        parts = []
        for e in sorted(f, key=lambda e: (self._mono_value(e), e)):
            c = f[e]
            factors = []
            for lvl, n in e:
                vn = "v" if lvl == 1 else "v%d" % lvl
                factors.append(vn if n == 1 else "%s^%d" % (vn, n))
            cs = sc.format(c)
            if not factors:
                mono = cs
            elif cs == "1":
                mono = "*".join(factors)
            else:
                mono = "*".join([cs] + factors)
            parts.append(mono)
        return " + ".join(parts)

    def format_element(self, x):
        num, den = x
        ns = self._format_poly(num)
        if den == self._one_poly:
            return ns
        return "(%s)/(%s)" % (ns, self._format_poly(den))

    def __repr__(self):
        return "tower(p=%d, depth=%d)" % (self.p, self.max_depth)
