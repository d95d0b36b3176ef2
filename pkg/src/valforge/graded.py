"""Residue arithmetic for graded pieces of a truncated valuation.

A chain stage assigns every polynomial an initial form: a value together with
X-coefficients living in the residue ring of the stage.  The residue ring is
the scalar domain until some step adjoins a root of a nonlinear residual, at
which point it becomes k[T]/(m).  That quotient need not be a field (a lumped
residual can be a product of distinct irreducibles), so inverses go through
the extended euclidean algorithm and a non-coprime element is reported as an
unsupported structure rather than silently wrong.

Initial forms multiply like polynomials in X with no reduction: at its own
level the class of the key polynomial is transcendental over the residue ring.
"""

from .fields import ScalarPolys, UnsupportedStructure
from .values import INF


class ScalarRing:
    """The residue ring before any extension: the scalar domain itself."""

    def __init__(self, domain):
        self.domain = domain
        self.zero = domain.zero
        self.one = domain.one

    def embed(self, c):
        return c

    def add(self, a, b):
        return self.domain.add(a, b)

    def sub(self, a, b):
        return self.domain.sub(a, b)

    def mul(self, a, b):
        return self.domain.mul(a, b)

    def neg(self, a):
        return self.domain.neg(a)

    def inv(self, a):
        if self.domain.is_zero(a):
            raise UnsupportedStructure("inverse of zero in the residue ring")
        return self.domain.inv(a)

    def pow(self, a, n):
        if n < 0:
            return self.pow(self.inv(a), -n)
        out = self.one
        for _ in range(n):
            out = self.mul(out, a)
        return out

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def is_zero(self, a):
        return self.domain.is_zero(a)

    def eq(self, a, b):
        return self.is_zero(self.sub(a, b))

    def is_scalar(self, a):
        return True

    def to_scalar(self, a):
        return a

    def format(self, a):
        return self.domain.format(a)


class EtaleRing:
    """k[T]/(m) for a monic modulus m of degree >= 2.

    Elements are the coefficient tuples of ScalarPolys, reduced mod m.  A
    scalar embeds as a constant; the class of T is the adjoined root.
    """

    def __init__(self, domain, modulus):
        self.domain = domain
        self.sp = ScalarPolys(domain)
        self.modulus = self.sp.trim(modulus)
        if self.sp.degree(self.modulus) < 2:
            raise ValueError("extension modulus must have degree >= 2")
        self.zero = self.sp.zero()
        self.one = self.sp.one()
        self.gen = self.sp.monomial(1)

    def embed(self, c):
        if isinstance(c, tuple):
            return self.sp.mod(c, self.modulus)
        return self.sp.const(c)

    def add(self, a, b):
        return self.sp.add(a, b)

    def sub(self, a, b):
        return self.sp.sub(a, b)

    def mul(self, a, b):
        return self.sp.mod(self.sp.mul(a, b), self.modulus)

    def neg(self, a):
        return self.sp.neg(a)

    def inv(self, a):
        g, s, _ = self.sp.xgcd(a, self.modulus)
        if self.sp.degree(g) != 0:
            raise UnsupportedStructure(
                "residue %s is a zero divisor mod %s"
                % (self.sp.format(a, "T"), self.sp.format(self.modulus, "T")))
        return self.sp.mod(s, self.modulus)

    def pow(self, a, n):
        if n < 0:
            return self.pow(self.inv(a), -n)
        out = self.one
        for _ in range(n):
            out = self.mul(out, a)
        return out

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def is_zero(self, a):
        return not a

    def eq(self, a, b):
        return self.is_zero(self.sub(a, b))

    def is_scalar(self, a):
        return self.sp.degree(a) <= 0

    def to_scalar(self, a):
        if not self.is_scalar(a):
            raise UnsupportedStructure("residue %s does not lie in the scalar domain"
                                       % self.sp.format(a, "T"))
        return a[0] if a else self.domain.zero

    def format(self, a):
        return self.sp.format(a, "T")


class InClass:
    """Initial form of a polynomial at a chain stage: the truncated value plus
    the finitely many X-coefficients that attain it, as residue ring elements.
    """

    __slots__ = ("ring", "value", "terms")

    def __init__(self, ring, value, terms):
        self.ring = ring
        self.value = value
        self.terms = {j: c for j, c in terms.items() if not ring.is_zero(c)}

    @property
    def degree(self):
        return max(self.terms) if self.terms else None

    @property
    def is_zero(self):
        return not self.terms

    def __repr__(self):
        body = " + ".join("(%s)*X^%d" % (self.ring.format(c), j)
                          for j, c in sorted(self.terms.items()))
        return "InClass(%s @ %s)" % (body or "0", self.value)


def graded_mul(a, b):
    ring = a.ring
    terms = {}
    for i, c in a.terms.items():
        for j, d in b.terms.items():
            k = i + j
            prod = ring.mul(c, d)
            terms[k] = ring.add(terms.get(k, ring.zero), prod)
    return InClass(ring, a.value + b.value, terms)


def graded_equal(a, b):
    if a.is_zero and b.is_zero:
        return True
    if a.is_zero != b.is_zero:
        return False
    if a.value != b.value or set(a.terms) != set(b.terms):
        return False
    return all(a.ring.eq(c, b.terms[j]) for j, c in a.terms.items())


def graded_is_unit(a):
    """Units of the graded ring are the classes concentrated in X-degree 0
    with an invertible residue."""
    if set(a.terms) != {0}:
        return False
    try:
        a.ring.inv(a.terms[0])
    except UnsupportedStructure:
        return False
    return True


def graded_inverse(a):
    if not graded_is_unit(a):
        raise ValueError("initial form is not a unit")
    return InClass(a.ring, -a.value, {0: a.ring.inv(a.terms[0])})


def graded_add(a, b):
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if a.value != b.value:
        raise ValueError("graded pieces at different values do not add")
    ring = a.ring
    terms = dict(a.terms)
    for j, c in b.terms.items():
        terms[j] = ring.add(terms.get(j, ring.zero), c)
    terms = {j: c for j, c in terms.items() if not ring.is_zero(c)}
    if not terms:
        return InClass(ring, INF, {})
    return InClass(ring, a.value, terms)


def graded_divmod(a, b):
    """Euclidean step for the effective degree: a = b*q + r with the degree
    of r strictly below the degree of b, or r = 0.  A unit divisor always
    leaves r = 0."""
    ring = a.ring
    if b.is_zero:
        raise ZeroDivisionError("graded division by zero")
    zero = InClass(ring, INF, {})
    if a.is_zero:
        return zero, zero
    da, db = a.degree, b.degree
    if da < db:
        return zero, a
    lead_inv = ring.inv(b.terms[db])
    rem = dict(a.terms)
    q = {}
    for k in range(da - db, -1, -1):
        top = rem.get(k + db, ring.zero)
        if ring.is_zero(top):
            continue
        c = ring.mul(top, lead_inv)
        q[k] = c
        for j, d in b.terms.items():
            rem[k + j] = ring.sub(rem.get(k + j, ring.zero), ring.mul(c, d))
    rem = {j: c for j, c in rem.items() if not ring.is_zero(c)}
    assert all(j < db for j in rem), "division left terms at the lead"
    quo = InClass(ring, a.value - b.value, q)
    return quo, (InClass(ring, a.value, rem) if rem else zero)


def graded_div(a, b):
    """Exact division of initial forms; raises ValueError when b does not
    divide a in the graded ring."""
    ring = a.ring
    if b.is_zero:
        raise ZeroDivisionError("graded division by zero")
    if a.is_zero:
        return InClass(ring, INF, {})
    da, db = a.degree, b.degree
    if da < db:
        raise ValueError("initial form is not divisible: degree drop")
    lead_inv = ring.inv(b.terms[db])
    rem = dict(a.terms)
    q = {}
    for k in range(da - db, -1, -1):
        top = rem.get(k + db, ring.zero)
        if ring.is_zero(top):
            continue
        c = ring.mul(top, lead_inv)
        q[k] = c
        for j, d in b.terms.items():
            rem[k + j] = ring.sub(rem.get(k + j, ring.zero), ring.mul(c, d))
    if any(not ring.is_zero(c) for c in rem.values()):
        raise ValueError("initial form is not divisible: nonzero remainder")
    return InClass(ring, a.value - b.value, q)
