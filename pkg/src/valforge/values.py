"""Value-group arithmetic: ordered value vectors, finitely generated groups, ordinal indices.

Values live in Q^r ordered lexicographically (rank r is fixed per valued field), with a
single formal infinite element on top.  Groups are finitely generated subgroups of Q^r;
membership and subgroup index go through integer Hermite normal forms of the scaled
generator matrix, so everything is exact.
"""

from fractions import Fraction
from math import lcm


class Value:
    """A finite point of Q^r under lexicographic order."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        self.coords = tuple(Fraction(c) for c in coords)

    @classmethod
    def zero(cls, rank):
        return cls((0,) * rank)

    @property
    def rank(self):
        return len(self.coords)

    @property
    def is_infinite(self):
        return False

    def scale(self, n):
        return Value(c * n for c in self.coords)

    def __add__(self, other):
        if other.is_infinite:
            return INF
        return Value(a + b for a, b in zip(self.coords, other.coords, strict=True))

    def __sub__(self, other):
        if other.is_infinite:
            raise ValueError("cannot subtract the infinite value")
        return Value(a - b for a, b in zip(self.coords, other.coords, strict=True))

    def __neg__(self):
        return Value(-c for c in self.coords)

    def __eq__(self, other):
        return isinstance(other, Value) and not other.is_infinite and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __lt__(self, other):
        if other.is_infinite:
            return True
        return self.coords < other.coords

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        return not self <= other

    def __ge__(self, other):
        return not self < other

    def __repr__(self):
        return "Value(%s)" % (self.coords,)

    def __str__(self):
        return format_value(self)


class _InfiniteValue(Value):
    """The formal top element; absorbing under addition and positive scaling."""

    __slots__ = ()

    def __init__(self):
        self.coords = None

    @property
    def rank(self):
        raise ValueError("infinite value has no rank")

    @property
    def is_infinite(self):
        return True

    def scale(self, n):
        if n <= 0:
            raise ValueError("cannot scale the infinite value by %s" % n)
        return self

    def __add__(self, other):
        return self

    def __sub__(self, other):
        raise ValueError("cannot subtract from the infinite value")

    def __neg__(self):
        raise ValueError("cannot negate the infinite value")

    def __eq__(self, other):
        return isinstance(other, _InfiniteValue)

    def __hash__(self):
        return hash("inf-value")

    def __lt__(self, other):
        return False

    def __repr__(self):
        return "INF"


INF = _InfiniteValue()


def format_value(v):
    if v.is_infinite:
        return "inf"
    if len(v.coords) == 1:
        return str(v.coords[0])
    return "(%s)" % ", ".join(str(c) for c in v.coords)


def parse_value(text, rank):
    """Parse 'inf', a single fraction, or a tuple '(a, b, ...)' of the given rank."""
    text = text.strip()
    if text == "inf":
        return INF
    if text.startswith("("):
        if not text.endswith(")"):
            raise ValueError("unbalanced value tuple: %r" % text)
        parts = [p.strip() for p in text[1:-1].split(",")]
    else:
        parts = [text]
    if len(parts) != rank:
        raise ValueError("value %r has %d coordinates, expected %d" % (text, len(parts), rank))
    try:
        return Value(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError("bad value literal %r: %s" % (text, exc)) from None


def _hermite_rows(rows):
    """Row Hermite form of an integer matrix: echelon basis rows, positive pivots,
    entries above each pivot reduced into [0, pivot)."""
    ncols = len(rows[0]) if rows else 0
    mat = [list(r) for r in rows if any(r)]
    basis = []
    for col in range(ncols):
        while True:
            nz = [r for r in mat if r[col]]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda r: abs(r[col]))
            a = nz[0]
            for b in nz[1:]:
                q = b[col] // a[col]
                for k in range(col, ncols):
                    b[k] -= q * a[k]
            mat = [r for r in mat if any(r)]
        nz = [r for r in mat if r[col]]
        if nz:
            p = nz[0]
            mat = [r for r in mat if r is not p]
            if p[col] < 0:
                p = [-x for x in p]
            basis.append(p)
    for i, row in enumerate(basis):
        pc = next(k for k, x in enumerate(row) if x)
        for j in range(i):
            q = basis[j][pc] // row[pc]
            if q:
                basis[j] = [x - q * y for x, y in zip(basis[j], row)]
    return basis


class ValueGroup:
    """Finitely generated subgroup of Q^r, closed under the queries the chains need:
    membership, extension by a new value, and index of a finite-index subgroup."""

    __slots__ = ("rank", "gens", "_den", "_basis", "_pivots")

    def __init__(self, rank, gens):
        self.rank = rank
        self.gens = tuple(gens)
        for g in self.gens:
            if g.is_infinite:
                raise ValueError("groups are generated by finite values only")
            if g.rank != rank:
                raise ValueError("generator rank %d does not match group rank %d" % (g.rank, rank))
        dens = [c.denominator for g in self.gens for c in g.coords]
        self._den = lcm(*dens) if dens else 1
        rows = [[int(c * self._den) for c in g.coords] for g in self.gens]
        self._basis = _hermite_rows(rows)
        self._pivots = tuple(next(k for k, x in enumerate(r) if x) for r in self._basis)

    def contains(self, v):
        if v.is_infinite or v.rank != self.rank:
            return False
        scaled = [c * self._den for c in v.coords]
        if any(c.denominator != 1 for c in scaled):
            return False
        t = [int(c) for c in scaled]
        for row, pc in zip(self._basis, self._pivots):
            if t[pc] % row[pc]:
                return False
            q = t[pc] // row[pc]
            if q:
                t = [x - q * y for x, y in zip(t, row)]
        return not any(t)

    def extend(self, v):
        if self.contains(v):
            return self
        return ValueGroup(self.rank, self.gens + (v,))

    def multiple_order(self, v, cap=10**6):
        """Least m >= 1 with m*v in the group; the commensurability index of v."""
        if v.is_infinite:
            raise ValueError("infinite value has no order against a group")
        ext = ValueGroup(self.rank, self.gens + (v,))
        m = group_index(self, ext)
        if m > cap:
            raise ValueError("order of %s exceeds cap %d" % (v, cap))
        return m

    def __repr__(self):
        return "ValueGroup(rank=%d, gens=%s)" % (self.rank, list(self.gens))


def group_index(sub, sup):
    """Index [sup : sub] for groups with the same Q-span; raises if the index
    is infinite or the containment fails."""
    if sub.rank != sup.rank:
        raise ValueError("ambient ranks differ")
    for g in sub.gens:
        if not sup.contains(g):
            raise ValueError("%s is not contained in the larger group" % g)
    if sub._pivots != sup._pivots:
        raise ValueError("groups span different subspaces; index is infinite")
    s = len(sub._pivots)
    num = sup._den**s
    den = sub._den**s
    for row, pc in zip(sub._basis, sub._pivots):
        num *= row[pc]
    for row, pc in zip(sup._basis, sup._pivots):
        den *= row[pc]
    idx = Fraction(num, den)
    if idx.denominator != 1:
        raise AssertionError("index computation produced a non-integer: %s" % idx)
    return int(idx)


def in_isolated_subgroup(v, depth=1):
    """Whether v lies in the isolated (convex) subgroup where the first `depth`
    lexicographic coordinates vanish."""
    if v.is_infinite:
        return False
    return all(c == 0 for c in v.coords[:depth])


class OrdinalIndex:
    """Chain position of shape w*m + n, printed in ASCII ('3', 'w+1', 'w2+5')."""

    __slots__ = ("limit", "offset")

    def __init__(self, limit, offset):
        if limit < 0 or offset < 0:
            raise ValueError("ordinal parts must be nonnegative")
        self.limit = limit
        self.offset = offset

    @property
    def is_limit(self):
        return self.limit > 0 and self.offset == 0

    def successor(self):
        return OrdinalIndex(self.limit, self.offset + 1)

    def next_limit(self):
        return OrdinalIndex(self.limit + 1, 0)

    def key(self):
        return (self.limit, self.offset)

    def __eq__(self, other):
        return isinstance(other, OrdinalIndex) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __lt__(self, other):
        return self.key() < other.key()

    def __le__(self, other):
        return self.key() <= other.key()

    def __str__(self):
        if self.limit == 0:
            return str(self.offset)
        head = "w" if self.limit == 1 else "w%d" % self.limit
        return head if self.offset == 0 else "%s+%d" % (head, self.offset)

    def __repr__(self):
        return "OrdinalIndex(%d, %d)" % (self.limit, self.offset)
