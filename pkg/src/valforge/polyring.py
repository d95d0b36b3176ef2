"""Dense univariate polynomials over a valued base field.

Coefficients are opaque field elements manipulated through the field object;
polynomials are constant-first tuples with trailing zeros stripped.  Division
is euclidean against a divisor with invertible leading coefficient (in the
chain machinery the divisor is always a monic key polynomial), and repeated
division gives the finite expansion of any polynomial in powers of a key.
"""


class Poly:
    __slots__ = ("field", "var", "coeffs")

    def __init__(self, field, var, coeffs):
        self.field = field
        self.var = var
        cs = list(coeffs)
        while cs and field.is_zero(cs[-1]):
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def zero(cls, field, var):
        return cls(field, var, ())

    @classmethod
    def const(cls, field, var, elem):
        return cls(field, var, (elem,))

    @classmethod
    def variable(cls, field, var):
        return cls(field, var, (field.zero, field.lift_scalar(field.scalars.one)))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def lead(self):
        if self.is_zero:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    @property
    def is_monic(self):
        return not self.is_zero and self.field.eq(self.lead, self.field.one)

    def coeff(self, j):
        return self.coeffs[j] if j < len(self.coeffs) else self.field.zero

    def constant_term(self):
        """The base element of a polynomial of degree <= 0."""
        if self.degree > 0:
            raise ValueError("degree %d polynomial is not a constant" % self.degree)
        return self.coeffs[0] if self.coeffs else self.field.zero

    def _spawn(self, coeffs):
        return Poly(self.field, self.var, coeffs)

    def __add__(self, other):
        F = self.field
        n = max(len(self.coeffs), len(other.coeffs))
        out = []
        for i in range(n):
            out.append(F.add(self.coeff(i), other.coeff(i)))
        return self._spawn(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._spawn([self.field.neg(c) for c in self.coeffs])

    def __mul__(self, other):
        F = self.field
        if self.is_zero or other.is_zero:
            return self._spawn(())
        out = [F.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if F.is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = F.add(out[i + j], F.mul(a, b))
        return self._spawn(out)

    def scale(self, elem):
        F = self.field
        return self._spawn([F.mul(c, elem) for c in self.coeffs])

    def shift(self, k):
        """Multiply by var^k."""
        if self.is_zero:
            return self
        return self._spawn([self.field.zero] * k + list(self.coeffs))

    def pow(self, n):
        out = Poly.const(self.field, self.var, self.field.one)
        for _ in range(n):
            out = out * self
        return out

    def eq(self, other):
        return (self - other).is_zero

    def euclid_div(self, g):
        """(q, r) with self = q*g + r and deg r < deg g."""
        F = self.field
        if g.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        inv_lead = F.div(F.one, g.lead)
        rem = list(self.coeffs)
        dg = g.degree
        q = [F.zero] * max(len(rem) - dg, 0)
        while True:
            while rem and F.is_zero(rem[-1]):
                rem.pop()
            if len(rem) - 1 < dg or not rem:
                break
            k = len(rem) - 1 - dg
            c = F.mul(rem[-1], inv_lead)
            q[k] = c
            for i, b in enumerate(g.coeffs):
                rem[k + i] = F.sub(rem[k + i], F.mul(c, b))
        return self._spawn(q), self._spawn(rem)

    def gcd(self, other):
        """Monic gcd, by the euclidean algorithm over the coefficient field."""
        a, b = self, other
        while not b.is_zero:
            a, b = b, a.euclid_div(b)[1]
        if not a.is_zero:
            a = a.scale(a.field.div(a.field.one, a.lead))
        return a

    def derivative(self):
        F = self.field
        out = []
        for i in range(1, len(self.coeffs)):
            out.append(F.mul(self.coeffs[i], F.from_int(i)))
        return self._spawn(out)

    def format(self):
        if self.is_zero:
            return "0"
        F = self.field
        parts = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if F.is_zero(c):
                continue
            cs = F.format_element(c)
            wrapped = "(%s)" % cs if (" + " in cs or " - " in cs or "/" in cs) else cs
            if i == 0:
                parts.append(wrapped)
                continue
            head = self.var if i == 1 else "%s^%d" % (self.var, i)
            if cs == "1":
                parts.append(head)
            elif cs == "-1":
                parts.append("-" + head)
            else:
                parts.append("%s*%s" % (wrapped, head))
        out = parts[0]
        for part in parts[1:]:
            out += " - " + part[1:] if part.startswith("-") else " + " + part
        return out

    def __repr__(self):
        return "Poly(%s)" % self.format()


def standard_expansion(f, q):
    """Coefficients [c_0, c_1, ...] with f = sum c_j * q^j and deg c_j < deg q,
    by repeated euclidean division."""
    if q.degree < 1:
        raise ValueError("expansion needs a divisor of positive degree")
    out = []
    rest = f
    while not rest.is_zero:
        rest, r = rest.euclid_div(q)
        out.append(r)
    if not out:
        out.append(Poly.zero(f.field, f.var))
    return out
