"""Extension-level bookkeeping over explored chains.

A finished branch decomposes into blocks separated by its limit entries.
Each completed block contributes one defect factor: the effective degree
of the key that closes it, read over the last stages of the block, where
it must have settled.  The final block contributes its own stable
effective degree of the tracked polynomial; a terminated branch
contributes one.  Step invariants multiply into the ramification index
and residue degree, and the branch rows are summed against the degree of
the tracked polynomial.
"""

from .values import INF, format_value, group_index

__all__ = ["ReportError", "BlockReport", "BranchReport", "DegreeIdentity",
           "classify", "invariants_ef", "defect", "degree_identity",
           "completeness_sample", "chain_rows", "render_chain",
           "render_defect", "render_newton"]


class ReportError(Exception):
    """A bookkeeping cross-check failed or a branch is not classifiable."""


class BlockReport:
    """One block of consecutive stages: the slice between limit entries."""

    __slots__ = ("number", "stages", "kind", "deltas", "d")

    def __init__(self, number, stages, kind, deltas, d):
        self.number = number
        self.stages = stages
        self.kind = kind          # limit | terminated | stable | open
        self.deltas = deltas      # window sweep backing the classification
        self.d = d                # None only while open


class BranchReport:
    __slots__ = ("branch_id", "chain", "blocks", "e", "f", "status", "notes")

    def __init__(self, branch_id, chain, blocks, e, f, status, notes):
        self.branch_id = branch_id
        self.chain = chain
        self.blocks = blocks
        self.e = e
        self.f = f
        self.status = status
        self.notes = notes

    @property
    def d_blocks(self):
        return [blk.d for blk in self.blocks]

    @property
    def d(self):
        out = 1
        for blk in self.blocks:
            if blk.d is None:
                raise ReportError("branch %d is open; its defect is undefined"
                                  % self.branch_id)
            out *= blk.d
        return out


def split_stages(ch):
    """Stage numbers grouped into blocks.  A limit entry opens its block
    and at the same time closes the previous one."""
    groups = []
    for k in range(1, ch.depth() + 1):
        b = ch.entry(k).index.limit
        while len(groups) <= b:
            groups.append([])
        groups[b].append(k)
    return [g for g in groups if g]


def invariants_ef(ch):
    """Products of the step invariants over the successor entries, checked
    against the degree of the last key: the degree must factor as e times f
    times the jumps taken at the limit entries."""
    if ch.depth() == 0:
        raise ReportError("empty chain has no invariants")
    e = f = jumps = 1
    for k in range(1, ch.depth() + 1):
        ent = ch.entry(k)
        if ent.index.is_limit:
            jumps *= ent.alpha
        else:
            e *= ent.e_step
            f *= ent.f_step
    lastdeg = ch.entry(ch.depth()).poly.degree
    if lastdeg != e * f * jumps:
        raise ReportError(
            "last key degree %d does not factor as e*f*jumps = %d*%d*%d"
            % (lastdeg, e, f, jumps))
    return e, f


def classify(ch, window, branch_id=1):
    """Block decomposition with one defect factor per block, the step
    invariant products, and a leaf status."""
    if window < 1:
        raise ReportError("window must be at least 1")
    blocks = []
    groups = split_stages(ch)
    for j, stages in enumerate(groups):
        if j + 1 < len(groups):
            closer = ch.entry(groups[j + 1][0])
            deltas = [ch.effective_degree(closer.poly, k)
                      for k in stages[-window:]]
            if len(set(deltas)) != 1:
                raise ReportError("block %d has not settled against its "
                                  "closing key over the window" % j)
            if closer.alpha != deltas[-1]:
                raise ReportError(
                    "block %d closes with a degree jump of %d but effective "
                    "degree %d" % (j, closer.alpha, deltas[-1]))
            blocks.append(BlockReport(j, stages, "limit", deltas, deltas[-1]))
            continue
        last = ch.entry(stages[-1])
        if last.beta is INF:
            blocks.append(BlockReport(j, stages, "terminated", [], 1))
            status = "terminated"
        else:
            deltas = [ch.effective_degree(ch.target, k)
                      for k in stages[-window:]]
            if len(set(deltas)) == 1:
                blocks.append(BlockReport(j, stages, "stable", deltas,
                                          deltas[-1]))
                status = "stable delta %d" % deltas[-1]
            else:
                blocks.append(BlockReport(j, stages, "open", deltas, None))
                status = "open"
    e, f = invariants_ef(ch)
    notes = []
    try:
        direct = group_index(ch.base_group, ch.group(ch.depth()))
    except ValueError as exc:
        notes.append("group index not directly comparable: %s" % exc)
    else:
        if direct != e:
            notes.append("direct group index %d differs from e = %d"
                         % (direct, e))
    return BranchReport(branch_id, ch, blocks, e, f, status, notes)


def defect(branches):
    """One defect per branch: the product of its block factors.  Open
    branches refuse; in positive characteristic each defect must be a
    power of the residue characteristic."""
    out = []
    for br in branches:
        d = br.d
        p = br.chain.field.char
        if p:
            m = d
            while m % p == 0:
                m //= p
            if m != 1:
                raise ReportError("defect %d of branch %d is not a power "
                                  "of %d" % (d, br.branch_id, p))
        out.append(d)
    return out


class DegreeIdentity:
    """Comparison of the target degree with the branch totals e*f*d."""

    __slots__ = ("lhs", "terms", "complete")

    def __init__(self, lhs, terms, complete):
        self.lhs = lhs
        self.terms = terms
        self.complete = complete

    @property
    def total(self):
        return sum(e * f * d for e, f, d in self.terms)

    @property
    def verdict(self):
        return self.complete and self.lhs == self.total

    def line(self):
        rhs = " + ".join("%d*%d*%d" % t for t in self.terms)
        if self.complete:
            return "%d %s %s" % (self.lhs, "=" if self.verdict else "!=", rhs)
        op = ">" if self.lhs > self.total else "!="
        return "%d %s %s (partial)" % (self.lhs, op, rhs)


def degree_identity(target, branches, complete=True):
    ds = defect(branches)
    terms = [(br.e, br.f, d) for br, d in zip(branches, ds)]
    if target.field.char == 0:
        for _, _, d in terms:
            if d != 1:
                raise ReportError(
                    "defect %d over a base of characteristic zero" % d)
    return DegreeIdentity(target.degree, terms, complete)


def completeness_sample(ch, samples):
    """True when every (polynomial, expected value) pair is attained by
    some stage truncation of the chain.  A sample declared with an
    infinite value sits in the support, where the attainment condition
    does not speak; it is skipped rather than failed."""
    for f, want in samples:
        if want is None:
            raise ReportError("sample %s carries no expected value"
                              % f.format())
        if want is INF:
            continue
        if not any(ch.cval(f, k) == want
                   for k in range(1, ch.depth() + 1)):
            return False
    return True


# ---------------------------------------------------------------------------
# serialization


def chain_rows(ch):
    rows = []
    for k in range(1, ch.depth() + 1):
        ent = ch.entry(k)
        if ent.beta is INF:
            delta = "-"
        else:
            delta = str(ch.effective_degree(ch.target, k))
        rows.append((str(ent.index), ent.poly.format(),
                     format_value(ent.beta), str(ent.alpha), delta,
                     ent.origin))
    return rows


def render_chain(chains, fmt="text"):
    """Stage table per branch; works on raw chains, settled or not."""
    lines = []
    for bid, ch in chains:
        rows = chain_rows(ch)
        if fmt == "tsv":
            for row in rows:
                lines.append("\t".join((str(bid),) + row))
            continue
        tag = ", terminated" if ch.entry(ch.depth()).beta is INF else ""
        lines.append("branch %d: depth %d%s" % (bid, ch.depth(), tag))
        for idx, key, beta, alpha, delta, origin in rows:
            lines.append("  %s: Q = %s, beta = %s, alpha %s, delta %s, %s"
                         % (idx, key, beta, alpha, delta, origin))
    return "\n".join(lines) + "\n"


def render_defect(branches, identity, skipped=(), fmt="text"):
    lines = []
    ds = defect(branches)
    if fmt == "tsv":
        for br, d in zip(branches, ds):
            lines.append("\t".join(
                [str(br.branch_id), str(br.e), str(br.f),
                 ",".join(str(x) for x in br.d_blocks), str(d), br.status]))
        lines.append("identity\t%s" % identity.line())
        return "\n".join(lines) + "\n"
    for br, d in zip(branches, ds):
        lines.append("branch %d: e %d, f %d, d_blocks [%s], d %d, %s"
                     % (br.branch_id, br.e, br.f,
                        ", ".join(str(x) for x in br.d_blocks), d, br.status))
        for note in br.notes:
            lines.append("  note: %s" % note)
    for beta1 in skipped:
        lines.append("skipped branch at first value %s" % format_value(beta1))
    if len(branches) == 1:
        lines.append("d = %d" % ds[0])
    lines.append("identity: %s" % identity.line())
    return "\n".join(lines) + "\n"


def render_newton(ch, f, k, fmt="text"):
    from .keypoly import lower_hull, polygon_sides
    pts = ch.newton_points(f, k)
    finite = [(j, v) for j, v in pts if v is not INF]
    hull = lower_hull(finite)
    sides = polygon_sides(hull)
    if fmt == "tsv":
        lines = ["point\t%d\t%s" % (j, format_value(v)) for j, v in pts]
        lines += ["vertex\t%d\t%s" % (j, format_value(v)) for j, v in hull]
        lines += ["side\t%d\t%d\t%s" % (s.j_left, s.j_right,
                                        format_value(s.sigma))
                  for s in sides]
        return "\n".join(lines) + "\n"
    lines = ["stage %s polygon of %s" % (ch.entry(k).index, f.format())]
    lines.append("points: " + "  ".join(
        "(%d, %s)" % (j, format_value(v)) for j, v in pts))
    lines.append("hull:   " + "  ".join(
        "(%d, %s)" % (j, format_value(v)) for j, v in hull))
    for s in sides:
        lines.append("side %d..%d: slope %s"
                     % (s.j_left, s.j_right, format_value(s.sigma)))
    return "\n".join(lines) + "\n"
