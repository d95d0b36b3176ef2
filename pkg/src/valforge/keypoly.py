"""Key polynomial chains and the truncated valuations they carry.

A chain is a sequence of monic keys Q_1, Q_2, ... with strictly increasing
values beta_1 < beta_2 < ...; positions are ordinal indices so that a chain
can pass through limit stages.  Stage k assigns every polynomial the value

    min_m ( m*beta_k + value of the m-th coefficient at stage k-1 )

over its expansion in powers of Q_k, with the base valuation at stage 0.
Everything else here is bookkeeping on top of that recursion: effective
degrees (the largest expansion exponent attaining the minimum), Newton
polygons of coefficient values, residues of graded pieces against canonical
monomials, and the peel-refine loop that grows chains from the residual
polynomial of a side.

Residues are normalized against canonical monomials.  Every value in the
stage group has a unique expression v0 + sum m_j*beta_j with 0 <= m_j below
the spacing e_j of level j and v0 in the base group; the canonical monomial
multiplies the base element of v0 with the matching key powers.  Residue
identifications (what the class of Q_j^{e_j} divided by its weight monomial
evaluates to) are recorded per level as each next entry arrives, either as a
scalar or as a generator of one quotient ring k[T]/(m); a second simultaneous
extension is refused rather than approximated.
"""

from fractions import Fraction

from .fields import ScalarPolys, UnsupportedStructure, factor_scalar_poly
from .graded import EtaleRing, InClass, ScalarRing
from .polyring import Poly, standard_expansion
from .values import INF, OrdinalIndex, Value


class ChainError(Exception):
    """An entry or query that the chain axioms reject."""


# ---------------------------------------------------------------------------
# canonical monomials


class CanonMono:
    """A value split as v0 + sum m_j*beta_j: base part plus key exponents."""

    __slots__ = ("v0", "exps")

    def __init__(self, v0, exps):
        self.v0 = v0
        self.exps = {j: m for j, m in exps.items() if m}

    def value(self, chain):
        v = self.v0
        for j, m in self.exps.items():
            v = v + chain.entry(j).beta.scale(m)
        return v

    def materialize(self, chain):
        out = Poly.const(chain.field, chain.var,
                         chain.field.canonical_element(self.v0))
        for j in sorted(self.exps):
            out = out * chain.entry(j).poly.pow(self.exps[j])
        return out

    def __repr__(self):
        return "CanonMono(%s, %r)" % (self.v0, self.exps)


# ---------------------------------------------------------------------------
# chain entries


class ChainEntry:
    __slots__ = ("index", "poly", "beta", "origin", "alpha",
                 "e_step", "f_step", "group", "rule")

    def __init__(self, index, poly, beta, origin, alpha, e_step, f_step, group,
                 rule=None):
        self.index = index
        self.poly = poly
        self.beta = beta
        self.origin = origin
        self.alpha = alpha
        self.e_step = e_step
        self.f_step = f_step
        self.group = group
        self.rule = rule

    def with_rule(self, rule):
        return ChainEntry(self.index, self.poly, self.beta, self.origin,
                          self.alpha, self.e_step, self.f_step, self.group,
                          rule)

    def __repr__(self):
        return "ChainEntry(%s: %s @ %s)" % (self.index, self.poly.format(),
                                            self.beta)


# ---------------------------------------------------------------------------
# Newton polygon helpers (exact, division-free comparisons)


class Side:
    __slots__ = ("j_left", "v_left", "j_right", "v_right", "sigma")

    def __init__(self, j_left, v_left, j_right, v_right):
        self.j_left = j_left
        self.v_left = v_left
        self.j_right = j_right
        self.v_right = v_right
        self.sigma = (v_left - v_right).scale(Fraction(1, j_right - j_left))

    @property
    def length(self):
        return self.j_right - self.j_left

    def __repr__(self):
        return "Side(%d..%d, sigma=%s)" % (self.j_left, self.j_right, self.sigma)


def lower_hull(points):
    """Vertices of the lower convex hull of (int, Value) points, collinear
    interior points merged away."""
    pts = sorted(points)
    hull = []
    for x3, y3 in pts:
        while len(hull) >= 2:
            x1, y1 = hull[-2]
            x2, y2 = hull[-1]
            # drop the middle point when slope(1,2) >= slope(2,3)
            if (y2 - y1).scale(x3 - x2) >= (y3 - y2).scale(x2 - x1):
                hull.pop()
            else:
                break
        hull.append((x3, y3))
    return hull


def polygon_sides(hull):
    return [Side(hull[i][0], hull[i][1], hull[i + 1][0], hull[i + 1][1])
            for i in range(len(hull) - 1)]


# ---------------------------------------------------------------------------
# the chain


class Chain:
    def __init__(self, field, var, target, lump_sides=False):
        if not target.is_monic:
            raise ChainError("the tracked polynomial must be monic")
        self.field = field
        self.var = var
        self.target = target
        self.lump_sides = lump_sides
        self.entries = []
        self.base_group = field.base_group()
        self.ext_level = None
        self._weights = {}

    # -- structure ----------------------------------------------------------

    def depth(self):
        return len(self.entries)

    def entry(self, k):
        if not 1 <= k <= len(self.entries):
            raise ChainError("no entry at level %d" % k)
        return self.entries[k - 1]

    def group(self, k):
        return self.base_group if k == 0 else self.entry(k).group

    def clone(self):
        ch = Chain.__new__(Chain)
        ch.field = self.field
        ch.var = self.var
        ch.target = self.target
        ch.lump_sides = self.lump_sides
        ch.entries = list(self.entries)
        ch.base_group = self.base_group
        ch.ext_level = self.ext_level
        ch._weights = dict(self._weights)
        return ch

    def ring(self):
        if self.ext_level is None:
            return ScalarRing(self.field.scalars)
        return EtaleRing(self.field.scalars, self.entry(self.ext_level).rule[1])

    # -- truncated values ---------------------------------------------------

    def cval(self, f, k):
        """Value of f under the stage-k truncation (base valuation at k=0)."""
        if f.is_zero:
            return INF
        if k == 0:
            if f.degree > 0:
                raise ChainError("stage 0 only values constants")
            elem = f.constant_term()
            return INF if self.field.is_zero(elem) else self.field.valuate(elem)
        ent = self.entry(k)
        if f.degree < ent.poly.degree:
            return self.cval(f, k - 1)
        best = None
        for m, _, v in self.term_values(f, k):
            if v is INF:
                continue
            if best is None or v < best:
                best = v
        return INF if best is None else best

    def term_values(self, f, k):
        """(m, coefficient, m*beta_k + stage-(k-1) value) over the expansion
        of f in powers of Q_k; zero coefficients are skipped."""
        ent = self.entry(k)
        out = []
        for m, c in enumerate(standard_expansion(f, ent.poly)):
            if c.is_zero:
                continue
            cv = self.cval(c, k - 1)
            if cv is INF or (m > 0 and ent.beta is INF):
                v = INF
            else:
                v = cv if m == 0 else cv + ent.beta.scale(m)
            out.append((m, c, v))
        return out

    def argmin_data(self, f, k):
        """(min value, [(m, coefficient)] attaining it), or None when every
        term is infinite."""
        finite = [(m, c, v) for m, c, v in self.term_values(f, k)
                  if v is not INF]
        if not finite:
            return None
        minv = min(v for _, _, v in finite)
        return minv, [(m, c) for m, c, v in finite if v == minv]

    def effective_degree(self, f, k=None):
        """Largest expansion exponent attaining the stage value; None when f
        vanishes under the truncation."""
        k = self.depth() if k is None else k
        data = self.argmin_data(f, k)
        if data is None:
            return None
        return max(m for m, _ in data[1])

    # -- canonical monomials and residues -----------------------------------

    def canonical_monomial(self, v, k):
        """Split v uniquely over the stage-k group: base part plus bounded key
        exponents."""
        if v is INF:
            raise ChainError("no canonical monomial for an infinite value")
        exps = {}
        cur = v
        for j in range(k, 0, -1):
            ent = self.entry(j)
            if ent.beta is INF:
                continue
            for m in range(ent.e_step):
                if self.group(j - 1).contains(cur - ent.beta.scale(m)):
                    if m:
                        exps[j] = m
                        cur = cur - ent.beta.scale(m)
                    break
            else:
                raise ChainError("%s is not in the stage %d value group" % (v, k))
        if not self.base_group.contains(cur):
            raise ChainError("%s is not in the stage %d value group" % (v, k))
        return CanonMono(cur, exps)

    def weight(self, k):
        """Canonical monomial of e_k*beta_k, written at level k-1: the unit
        against which the class of Q_k^{e_k} is measured."""
        if k not in self._weights:
            ent = self.entry(k)
            if ent.beta is INF:
                raise ChainError("terminated level has no weight monomial")
            self._weights[k] = self.canonical_monomial(
                ent.beta.scale(ent.e_step), k - 1)
        return self._weights[k]

    def _rule_power(self, k, q):
        ring = self.ring()
        if q == 0:
            return ring.one
        rule = self.entry(k).rule
        if rule is None:
            raise ChainError("level %d has no residue identification yet" % k)
        if rule[0] == "const":
            return ring.pow(ring.embed(rule[1]), q)
        return ring.pow(ring.gen, q)

    def nres(self, f, dv0, dexps, k):
        """Residue of the initial form of f against the monomial with base
        part dv0 and key exponents dexps, all at level k.  Returns zero when
        f sits strictly above the monomial, and refuses to look below it."""
        ring = self.ring()
        if f.is_zero:
            return ring.zero
        if k == 0:
            elem = f.constant_term()
            if self.field.is_zero(elem):
                return ring.zero
            fv = self.field.valuate(elem)
            if fv > dv0:
                return ring.zero
            if fv < dv0:
                raise ChainError("initial form dips below its reference monomial")
            return ring.embed(self.field.unit_residue(
                elem, self.field.canonical_element(dv0)))
        ent = self.entry(k)
        target = dv0
        for j, m in dexps.items():
            target = target + self.entry(j).beta.scale(m)
        finite = [(m, c, v) for m, c, v in self.term_values(f, k)
                  if v is not INF]
        if not finite:
            return ring.zero
        minv = min(v for _, _, v in finite)
        if minv > target:
            return ring.zero
        if minv < target:
            raise ChainError("initial form dips below its reference monomial")
        dk = dexps.get(k, 0)
        wt = self.weight(k)
        acc = ring.zero
        for m, c, v in finite:
            if v != minv:
                continue
            q, r = divmod(m - dk, ent.e_step)
            if r:
                raise ChainError("graded term off the value lattice of level %d" % k)
            sub_v0 = dv0 - wt.v0.scale(q) if q else dv0
            sub_exps = {j: n for j, n in dexps.items() if j < k}
            if q:
                for j, n in wt.exps.items():
                    sub_exps[j] = sub_exps.get(j, 0) - q * n
                sub_exps = {j: n for j, n in sub_exps.items() if n}
            part = self.nres(c, sub_v0, sub_exps, k - 1)
            if ring.is_zero(part):
                continue
            acc = ring.add(acc, ring.mul(self._rule_power(k, q), part))
        return acc

    def in_class(self, f, k=None):
        """Initial form of f at stage k as a graded object: the stage value
        plus residue coefficients in X-degrees that attain it."""
        k = self.depth() if k is None else k
        ring = self.ring()
        data = self.argmin_data(f, k)
        if data is None:
            return InClass(ring, INF, {})
        minv, S = data
        ent = self.entry(k)
        terms = {}
        for m, c in S:
            cv = minv if m == 0 else minv - ent.beta.scale(m)
            mono = self.canonical_monomial(cv, k - 1)
            terms[m] = self.nres(c, mono.v0, mono.exps, k - 1)
        return InClass(ring, minv, terms)

    # -- growth: validation, residuals, lifting ------------------------------

    def append(self, index, poly, beta, origin):
        field = self.field
        if not poly.is_monic:
            raise ChainError("key polynomials are monic")
        prev = self.entries[-1] if self.entries else None
        if prev is None:
            if poly.degree != 1:
                raise ChainError("a chain starts with a degree 1 key")
            if index != OrdinalIndex(0, 1):
                raise ChainError("a chain starts at index 1")
            alpha = 1
        else:
            if prev.beta is INF:
                raise ChainError("cannot extend beyond a terminated stage")
            if not prev.index < index:
                raise ChainError("chain indices must increase")
            alpha, r = divmod(poly.degree, prev.poly.degree)
            if r or alpha < 1:
                raise ChainError("key degree must be a positive multiple of "
                                 "its predecessor")
            if beta is not INF and beta <= prev.beta:
                raise ChainError("stage values must strictly increase")
            if not index.is_limit and beta is not INF:
                dom = self.cval(poly, self.depth())
                if not beta > dom:
                    raise ChainError("declared value %s does not dominate the "
                                     "current truncation %s" % (beta, dom))
        prev_group = self.group(self.depth())
        if beta is INF:
            e_order = 1
            group = prev_group
        else:
            e_order = prev_group.multiple_order(beta)
            group = prev_group.extend(beta)
        if prev is None or index.is_limit:
            f_step = 1
        else:
            f_step, fr = divmod(alpha, prev.e_step)
            if fr:
                raise ChainError("degree jump %d is not a multiple of the "
                                 "level %d spacing %d"
                                 % (alpha, self.depth(), prev.e_step))
        if beta is INF:
            c0 = standard_expansion(self.target, poly)[0]
            if not all(field.is_zero_mod_precision(c) for c in c0.coeffs):
                raise ChainError("terminal key does not divide the tracked "
                                 "polynomial within the working precision")
        if prev is not None:
            rule = self._derive_rule(poly, alpha)
            if rule[0] == "ext":
                if self.ext_level is not None:
                    raise UnsupportedStructure(
                        "a second residue field extension is not supported")
                self.ext_level = self.depth()
            self.entries[-1] = prev.with_rule(rule)
        self.entries.append(ChainEntry(index, poly, beta, origin, alpha,
                                       e_order, f_step, group))

    def _derive_rule(self, newpoly, alpha):
        """Identification of the level-k residue class forced by the incoming
        key: the monic relation its initial form imposes on the class of
        Q_k^{e_k} over the weight monomial."""
        k = self.depth()
        ent = self.entries[-1]
        e = ent.e_step
        g, r = divmod(alpha, e)
        if r:
            raise ChainError("degree jump %d is not a multiple of the level "
                             "%d spacing %d" % (alpha, k, e))
        expected = ent.beta.scale(g * e)
        tv = self.term_values(newpoly, k)
        finite = [(m, c, v) for m, c, v in tv if v is not INF]
        minv = min(v for _, _, v in finite)
        if minv < expected:
            raise ChainError("incoming key is not balanced at level %d: value "
                             "%s below %s" % (k, minv, expected))
        for m, _, v in finite:
            if v == minv and m % e:
                raise ChainError("initial form of the incoming key leaves the "
                                 "value lattice of level %d" % k)
        coeffs_by_m = {m: c for m, c, _ in tv}
        wt = self.weight(k)
        ring = self.ring()
        rel = []
        for s in range(g):
            c = coeffs_by_m.get(s * e)
            if c is None:
                rel.append(ring.zero)
                continue
            n = g - s
            rel.append(self.nres(c, wt.v0.scale(n),
                                 {j: mle * n for j, mle in wt.exps.items()},
                                 k - 1))
        rel.append(ring.one)
        if all(ring.is_scalar(a) for a in rel):
            domain = self.field.scalars
            sp = ScalarPolys(domain)
            factors = factor_scalar_poly(domain, [ring.to_scalar(a) for a in rel])
            if len(factors) == 1:
                fac = factors[0][0]
                if sp.degree(fac) == 1:
                    return ("const", domain.neg(fac[0]))
                return ("ext", fac)
            rad = sp.one()
            for fac, _ in factors:
                rad = sp.mul(rad, fac)
            return ("ext", rad)
        if g == 1:
            return ("const", ring.neg(rel[0]))
        raise UnsupportedStructure(
            "key relation of degree %d over an extended residue ring" % g)

    def side_residual(self, k=None):
        """The residual polynomial of the minimal side at stage k: spacing,
        support range, and T-coefficients in the stage residue ring."""
        k = self.depth() if k is None else k
        ent = self.entry(k)
        if ent.beta is INF:
            raise ChainError("a terminated stage has no residual")
        data = self.argmin_data(self.target, k)
        if data is None:
            raise ChainError("tracked polynomial vanishes at stage %d" % k)
        minv, S = data
        ms = [m for m, _ in S]
        j1, j2 = min(ms), max(ms)
        e = ent.e_step
        for m in ms:
            if (m - j1) % e:
                raise ChainError("side support leaves the value lattice")
        coeffs = {m: c for m, c in S}
        all_coeffs = {m: c for m, c, _ in self.term_values(self.target, k)}
        ring = self.ring()
        c1 = coeffs[j1]
        dmono = self.canonical_monomial(self.cval(c1, k - 1), k - 1)
        base_inv = ring.inv(self.nres(c1, dmono.v0, dmono.exps, k - 1))
        wpoly = self.weight(k).materialize(self)
        rho = []
        acc = Poly.const(self.field, self.var, self.field.one)
        for t in range((j2 - j1) // e + 1):
            c = all_coeffs.get(j1 + t * e)
            if c is None:
                rho.append(ring.zero)
            else:
                rho.append(ring.mul(
                    self.nres(c * acc, dmono.v0, dmono.exps, k - 1), base_inv))
            acc = acc * wpoly
        return e, j1, j2, rho, minv

    def derive_keys(self, k=None):
        """Monic keys lifted from the irreducible factors of the stage
        residual, in deterministic order.  With lump_sides a residual that
        splits is kept whole, so the whole side lifts to a single key."""
        k = self.depth() if k is None else k
        e, j1, j2, rho, _ = self.side_residual(k)
        if j2 == j1:
            return []
        ring = self.ring()
        if not all(ring.is_scalar(r) for r in rho):
            raise UnsupportedStructure(
                "residual coefficients leave the scalar residue field")
        domain = self.field.scalars
        sp = ScalarPolys(domain)
        resid = sp.trim([ring.to_scalar(r) for r in rho])
        factors = factor_scalar_poly(domain, resid)
        if len(factors) > 1 and self.lump_sides:
            picks = [sp.monic(resid)]
        else:
            picks = [fac for fac, _ in factors]
        return [self._lift_key(k, gco) for gco in picks]

    def _lift_key(self, k, gcoeffs):
        ent = self.entry(k)
        e = ent.e_step
        domain = self.field.scalars
        sp = ScalarPolys(domain)
        g = sp.degree(gcoeffs)
        wpoly = self.weight(k).materialize(self)
        out = ent.poly.pow(g * e)
        for s in range(g):
            a = gcoeffs[s] if s < len(gcoeffs) else domain.zero
            if domain.is_zero(a):
                continue
            term = Poly.const(self.field, self.var, self.field.lift_scalar(a))
            term = term * wpoly.pow(g - s) * ent.poly.pow(s * e)
            out = out + term
        return out

    def candidate_betas(self, qnew, k=None):
        """Admissible next values for the key qnew: negated slopes of the
        Newton polygon of the tracked polynomial against qnew that exceed the
        current truncation of qnew, plus infinity on exact division."""
        k = self.depth() if k is None else k
        cs = standard_expansion(self.target, qnew)
        pts = []
        for j, c in enumerate(cs):
            if c.is_zero:
                continue
            v = self.cval(c, k)
            if v is not INF:
                pts.append((j, v))
        threshold = None if k == 0 else self.cval(qnew, k)
        out = []
        for side in reversed(polygon_sides(lower_hull(pts))):
            if threshold is None or side.sigma > threshold:
                out.append(side.sigma)
        if cs[0].is_zero:
            out.append(INF)
        return out

    def newton_points(self, f, k=None):
        """(j, value) pairs for the polygon of f against the stage-k key,
        ordinates taken at stage k-1; infinite ordinates are reported too."""
        k = self.depth() if k is None else k
        ent = self.entry(k)
        out = []
        for j, c in enumerate(standard_expansion(f, ent.poly)):
            if c.is_zero:
                continue
            out.append((j, self.cval(c, k - 1)))
        return out


# ---------------------------------------------------------------------------
# growing chains


def first_key(field, var):
    return Poly.variable(field, var)


def explore(field, var, target, depth, lump_sides=False, scripted=None,
            scripted_only=False):
    """All chains for the target up to the given depth.  scripted maps a first
    value to a full entry list [(index, poly, beta)] replayed verbatim;
    unscripted starting values grow by peel-and-refine unless scripted_only,
    in which case they are reported as skipped."""
    scripted = dict(scripted or {})
    seed = Chain(field, var, target, lump_sides)
    x = first_key(field, var)
    chains, skipped = [], []
    for beta1 in seed.candidate_betas(x, 0):
        script = None
        for key in list(scripted):
            if key == beta1:
                script = scripted.pop(key)
                break
        if script is not None:
            chains.append(replay(field, var, target, script, lump_sides))
        elif scripted_only:
            skipped.append(beta1)
        else:
            ch = Chain(field, var, target, lump_sides)
            ch.append(OrdinalIndex(0, 1), x, beta1, "derived")
            chains.extend(_grow(ch, depth))
    for script in scripted.values():
        chains.append(replay(field, var, target, script, lump_sides))
    return chains, skipped


def replay(field, var, target, entries, lump_sides=False):
    ch = Chain(field, var, target, lump_sides)
    for index, poly, beta in entries:
        origin = "limit" if index.is_limit else "scripted"
        ch.append(index, poly, beta, origin)
    return ch


def _grow(ch, depth):
    out = []
    stack = [ch]
    while stack:
        cur = stack.pop()
        while True:
            if cur.depth() >= depth:
                out.append(cur)
                break
            top = cur.entries[-1]
            if top.beta is INF:
                out.append(cur)
                break
            keys = cur.derive_keys()
            moves = []
            for q in keys:
                for sigma in cur.candidate_betas(q):
                    moves.append((q, sigma))
            if not moves:
                out.append(cur)
                break
            nxt = top.index.successor()
            for q, sigma in reversed(moves[1:]):
                alt = cur.clone()
                alt.append(nxt, q, sigma, "derived")
                stack.append(alt)
            cur.append(nxt, moves[0][0], moves[0][1], "derived")
    return out
