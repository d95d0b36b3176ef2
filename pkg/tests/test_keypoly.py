import random
from fractions import Fraction

import pytest

from bruteforce import brute_flat_value, brute_lower_hull
from valforge.fields import (CoordinateTower, InsufficientPrecision,
                             LexMonomialSeries, PrimeField, QQ,
                             RationalFunctions, UnsupportedStructure)
from valforge.graded import (graded_add, graded_div, graded_divmod,
                             graded_equal, graded_inverse, graded_is_unit,
                             graded_mul)
from valforge.keypoly import (Chain, ChainError, explore, lower_hull,
                              polygon_sides, replay)
from valforge.polyring import Poly, standard_expansion
from valforge.values import INF, OrdinalIndex, Value


def V(*coords):
    return Value([Fraction(c) for c in coords])


IDX = [OrdinalIndex(0, n) for n in range(12)]


# ---------------------------------------------------------------------------
# the running example: P = Q^2 + (y^2 x + y^5) Q + y^8 over Q(y), Q = x^2 - y^3


def quartic_setup():
    F = RationalFunctions(QQ, "y")
    x = Poly.variable(F, "x")
    y = lambda n: Poly.const(F, "x", F.canonical_element(V(n)))
    Q = x * x - y(3)
    P = Q * Q + (x.scale(F.canonical_element(V(2))) + y(5)) * Q + y(8)
    return F, x, Q, P


def test_first_candidates_single_side():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    assert ch.candidate_betas(x, 0) == [V("3/2")]


def test_first_entry_bookkeeping():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    ch.append(IDX[1], x, V("3/2"), "derived")
    ent = ch.entries[0]
    assert ent.e_step == 2 and ent.f_step == 1 and ent.alpha == 1
    assert ch.group(1).contains(V("3/2"))
    assert not ch.base_group.contains(V("3/2"))


def test_side_residual_is_squared_linear():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    ch.append(IDX[1], x, V("3/2"), "derived")
    e, j1, j2, rho, minv = ch.side_residual()
    assert (e, j1, j2) == (2, 0, 4)
    assert minv == V(6)
    assert rho == [Fraction(1), Fraction(-2), Fraction(1)]
    keys = ch.derive_keys()
    assert len(keys) == 1
    assert keys[0].eq(Q)


def test_branch_point_candidates():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    ch.append(IDX[1], x, V("3/2"), "derived")
    assert ch.candidate_betas(Q) == [V("7/2"), V("9/2")]


def test_rule_derivation_and_weights():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    ch.append(IDX[1], x, V("3/2"), "derived")
    ch.append(IDX[2], Q, V("7/2"), "derived")
    assert ch.entries[0].rule == ("const", Fraction(1))
    w2 = ch.weight(2)
    assert w2.v0 == V(2) and w2.exps == {1: 1}
    assert w2.materialize(ch).format() == "y^2*x"


def test_lift_on_both_branches():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    ch.append(IDX[1], x, V("3/2"), "derived")
    hi = ch.clone()
    ch.append(IDX[2], Q, V("7/2"), "derived")
    e, j1, j2, rho, _ = ch.side_residual()
    assert (e, j1, j2) == (1, 1, 2)
    assert rho == [Fraction(1), Fraction(1)]
    keys = ch.derive_keys()
    assert len(keys) == 1
    assert keys[0].format() == "x^2 + y^2*x - y^3"
    assert ch.candidate_betas(keys[0]) == [V("9/2")]

    hi.append(IDX[2], Q, V("9/2"), "derived")
    assert hi.weight(2).materialize(hi).format() == "y^3*x"
    keys = hi.derive_keys()
    assert len(keys) == 1
    assert keys[0].format() == "x^2 + y^3*x - y^3"
    assert hi.candidate_betas(keys[0]) == [V("11/2")]


def test_explore_two_branches_frozen_values():
    F, x, Q, P = quartic_setup()
    chains, skipped = explore(F, "x", P, depth=6)
    assert skipped == []
    assert len(chains) == 2
    lo, hi = chains
    assert [e.beta for e in lo.entries] == [V("3/2"), V("7/2"), V("9/2"),
                                            V("11/2"), V("13/2"), V("15/2")]
    assert [e.beta for e in hi.entries] == [V("3/2"), V("9/2"), V("11/2"),
                                            V("13/2"), V("15/2"), V("17/2")]
    # every key after the branch point stays quadratic
    assert all(e.poly.degree == 2 for e in lo.entries[1:])
    assert all(e.poly.degree == 2 for e in hi.entries[1:])
    assert [e.e_step for e in lo.entries] == [2, 1, 1, 1, 1, 1]
    assert [e.f_step for e in lo.entries] == [1, 1, 1, 1, 1, 1]


def test_truncated_values_frozen():
    F, x, Q, P = quartic_setup()
    chains, _ = explore(F, "x", P, depth=3)
    lo, hi = chains
    assert lo.cval(P, 1) == V(6)
    assert lo.cval(P, 2) == V(7)
    assert hi.cval(P, 2) == V(8)
    assert lo.cval(Q, 2) == V("7/2")
    assert hi.cval(Q, 2) == V("9/2")
    assert lo.cval(x, 2) == V("3/2")
    # nondecreasing along the chain
    for ch in chains:
        for f in (P, Q, x):
            vals = [ch.cval(f, k) for k in range(1, ch.depth() + 1)]
            assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_effective_degrees_frozen():
    F, x, Q, P = quartic_setup()
    chains, _ = explore(F, "x", P, depth=3)
    lo, hi = chains
    assert lo.effective_degree(P, 1) == 4
    assert lo.effective_degree(P, 2) == 2
    assert lo.effective_degree(P, 3) == 1
    assert hi.effective_degree(P, 2) == 1
    # the refinement inequality alpha*delta_new <= delta_old at every step
    for ch in chains:
        for k in range(1, ch.depth()):
            d_old = ch.effective_degree(P, k)
            d_new = ch.effective_degree(P, k + 1)
            assert ch.entries[k].alpha * d_new <= d_old


def test_cval_matches_flat_expansion_oracle():
    F, x, Q, P = quartic_setup()
    chains, _ = explore(F, "x", P, depth=4)
    rng = random.Random(41)
    y = F.atom("y")
    for ch in chains:
        polys = [e.poly for e in ch.entries]
        betas = [e.beta for e in ch.entries]
        for _ in range(25):
            f = Poly(F, "x", [
                F.mul(F.from_int(rng.randrange(-3, 4)), F.pow(y, rng.randrange(4)))
                for _ in range(rng.randrange(1, 6))])
            if f.is_zero:
                continue
            for k in range(1, ch.depth() + 1):
                assert ch.cval(f, k) == brute_flat_value(polys[:k], betas[:k], F, f)


def test_hull_against_bruteforce():
    rng = random.Random(99)
    for _ in range(80):
        pts = []
        for j in range(rng.randrange(2, 9)):
            pts.append((j, V(Fraction(rng.randrange(-12, 13), rng.randrange(1, 4)))))
        assert lower_hull(pts) == brute_lower_hull(pts)


def test_graded_additivity_and_units():
    F, x, Q, P = quartic_setup()
    chains, _ = explore(F, "x", P, depth=3)
    ch = chains[0]
    rng = random.Random(5)
    y = F.atom("y")

    def rand_poly():
        while True:
            f = Poly(F, "x", [
                F.mul(F.from_int(rng.randrange(-2, 3)), F.pow(y, rng.randrange(3)))
                for _ in range(rng.randrange(1, 6))])
            if not f.is_zero:
                return f

    for _ in range(40):
        f, g = rand_poly(), rand_poly()
        df, dg = ch.effective_degree(f), ch.effective_degree(g)
        dfg = ch.effective_degree(f * g)
        assert dfg == df + dg
        # the initial form of a product is the product of initial forms
        assert graded_equal(ch.in_class(f * g),
                            graded_mul(ch.in_class(f), ch.in_class(g)))
        # delta = 0 exactly for graded units, certified by an explicit inverse
        a = ch.in_class(f)
        assert (df == 0) == graded_is_unit(a)
        if df == 0:
            inv = graded_inverse(a)
            one = graded_mul(a, inv)
            assert one.value == V(0) and set(one.terms) == {0}
            assert one.ring.eq(one.terms[0], one.ring.one)


def test_graded_div_postconditions():
    F, x, Q, P = quartic_setup()
    chains, _ = explore(F, "x", P, depth=3)
    ch = chains[0]
    rng = random.Random(17)
    y = F.atom("y")

    def rand_poly():
        while True:
            f = Poly(F, "x", [
                F.mul(F.from_int(rng.randrange(-2, 3)), F.pow(y, rng.randrange(3)))
                for _ in range(rng.randrange(1, 6))])
            if not f.is_zero:
                return f

    for _ in range(40):
        f, g = rand_poly(), rand_poly()
        a = ch.in_class(f * g)
        b = ch.in_class(f)
        q = graded_div(a, b)
        assert graded_equal(graded_mul(b, q), a)
        assert q.value == a.value - b.value


def test_graded_divmod_postconditions():
    F, x, Q, P = quartic_setup()
    chains, _ = explore(F, "x", P, depth=3)
    ch = chains[0]
    rng = random.Random(23)
    y = F.atom("y")

    def rand_poly():
        while True:
            f = Poly(F, "x", [
                F.mul(F.from_int(rng.randrange(-2, 3)), F.pow(y, rng.randrange(3)))
                for _ in range(rng.randrange(1, 6))])
            if not f.is_zero:
                return f

    for _ in range(60):
        a = ch.in_class(rand_poly())
        b = ch.in_class(rand_poly())
        q, r = graded_divmod(a, b)
        assert graded_equal(a, graded_add(graded_mul(b, q), r))
        assert r.is_zero or r.degree < b.degree
        if graded_is_unit(b):
            assert r.is_zero
        if r.is_zero and not q.is_zero:
            assert graded_equal(graded_div(a, b), q)
    # exact divisions leave no remainder
    f, g = rand_poly(), rand_poly()
    q, r = graded_divmod(ch.in_class(f * g), ch.in_class(g))
    assert r.is_zero and graded_equal(q, ch.in_class(f))
    with pytest.raises(ZeroDivisionError):
        graded_divmod(ch.in_class(f), ch.in_class(f - f))
    with pytest.raises(ValueError):
        graded_add(ch.in_class(x), ch.in_class(f * f * f * f * f))


def test_validation_rejects_bad_entries():
    F, x, Q, P = quartic_setup()
    ch = Chain(F, "x", P)
    with pytest.raises(ChainError):
        ch.append(IDX[1], x * x, V(1), "scripted")  # wrong starting degree
    ch.append(IDX[1], x, V("3/2"), "scripted")
    with pytest.raises(ChainError):
        ch.append(IDX[2], Q, V(1), "scripted")  # value does not increase
    with pytest.raises(ChainError):
        ch.append(IDX[2], Q, V(2), "scripted")  # fails to dominate mu'(Q) = 3
    with pytest.raises(ChainError):
        ch.append(IDX[2], Q + x, V(4), "scripted")  # degree not a multiple: ok, 3 = no
    with pytest.raises(ChainError):
        # unbalanced: x^2 - y has stage-1 value 2*beta at top but min(3, 1) = 1 below
        ch.append(IDX[2], x * x - Poly.const(F, "x", F.canonical_element(V(1))),
                  V(4), "scripted")
    ch.append(IDX[2], Q, V("7/2"), "scripted")
    with pytest.raises(ChainError):
        ch.append(IDX[2], Q, V(4), "scripted")  # index must increase


def test_terminal_entry_requires_divisibility():
    F, x, Q, P = quartic_setup()
    y = lambda n: Poly.const(F, "x", F.canonical_element(V(n)))
    target = (x * x - y(3)) * (x * x + y(1))
    ch = Chain(F, "x", target)
    ch.append(IDX[1], x, V("1/2"), "scripted")
    with pytest.raises(ChainError):
        bad = ch.clone()
        bad.append(IDX[2], x * x - y(1), INF, "scripted")
    ch.append(IDX[2], x * x + y(1), INF, "scripted")
    assert ch.entries[-1].beta is INF
    with pytest.raises(ChainError):
        ch.append(IDX[3], target, V(9), "scripted")  # nothing beyond a terminal


# ---------------------------------------------------------------------------
# char 3, rank 2: P = w^3 - z^6 w + y^3 z^9 over GF(3)((z,y)) lex


def cubic_setup(precision={"y": 40}):
    F = LexMonomialSeries(PrimeField(3), ("z", "y"), precision=precision)
    w = Poly.variable(F, "w")
    z = F.atom("z")
    y = F.atom("y")
    c = lambda e: Poly.const(F, "w", e)
    P = w.pow(3) - c(F.pow(z, 6)) * w + c(F.mul(F.pow(y, 3), F.pow(z, 9)))
    return F, w, z, y, P


def test_cubic_two_sides():
    F, w, z, y, P = cubic_setup()
    ch = Chain(F, "w", P)
    assert ch.candidate_betas(w, 0) == [V(3, 0), V(3, 3)]


def test_cubic_split_branch_derives_frobenius_ladder():
    F, w, z, y, P = cubic_setup()
    ch = Chain(F, "w", P, lump_sides=True)
    ch.append(IDX[1], w, V(3, 3), "derived")
    assert ch.effective_degree(P) == 1
    keys = ch.derive_keys()
    assert len(keys) == 1
    q2 = keys[0]
    diff = q2 - (w - Poly.const(F, "w", F.mul(F.pow(z, 3), F.pow(y, 3))))
    assert diff.is_zero
    assert ch.candidate_betas(q2) == [V(3, 9)]
    ch.append(IDX[2], q2, V(3, 9), "derived")
    assert ch.effective_degree(P) == 1
    q3 = ch.derive_keys()[0]
    assert ch.candidate_betas(q3) == [V(3, 27)]


def test_cubic_lumped_branch_etale_layer():
    F, w, z, y, P = cubic_setup()
    ch = Chain(F, "w", P, lump_sides=True)
    ch.append(IDX[1], w, V(3, 0), "derived")
    e, j1, j2, rho, minv = ch.side_residual()
    assert (e, j1, j2) == (1, 1, 3)
    assert minv == V(9, 0)
    assert rho == [1, 0, 2]
    keys = ch.derive_keys()
    assert len(keys) == 1
    q2 = keys[0]
    assert q2.format() == "w^2 + 2*z^6"  # = w^2 - z^6 over GF(3)
    assert ch.candidate_betas(q2) == [V(6, 3)]
    ch.append(IDX[2], q2, V(6, 3), "derived")
    # the lumped quadratic installs the one allowed residue ring extension
    assert ch.entries[0].rule == ("ext", (2, 0, 1))
    assert ch.ext_level == 1
    e, j1, j2, rho, _ = ch.side_residual()
    assert (e, j1, j2) == (1, 0, 1)
    assert rho == [(1,), (0, 1)]  # 1 and the adjoined class of T
    with pytest.raises(UnsupportedStructure):
        ch.derive_keys()
    # the terminal key is scenario input; the engine validates it
    u = F.add(F.add(F.pow(y, 3), F.pow(y, 9)), F.pow(y, 27))
    a = F.mul(F.pow(z, 3), u)
    c = lambda e: Poly.const(F, "w", e)
    q3 = q2 + c(a) * Poly.variable(F, "w") + c(F.mul(a, a))
    ch.append(IDX[3], q3, INF, "scripted")
    assert ch.entries[1].rule == ("const", (0, 2))  # minus the adjoined class
    assert [ent.f_step for ent in ch.entries] == [1, 2, 1]
    assert [ent.e_step for ent in ch.entries] == [1, 1, 1]


def test_cubic_terminal_rejected_at_higher_precision():
    # the same scripted terminal key fails once the box sees y^81
    F, w, z, y, P = cubic_setup(precision={"y": 100})
    ch = Chain(F, "w", P, lump_sides=True)
    ch.append(IDX[1], w, V(3, 0), "derived")
    q2 = ch.derive_keys()[0]
    ch.append(IDX[2], q2, V(6, 3), "derived")
    u = F.add(F.add(F.pow(y, 3), F.pow(y, 9)), F.pow(y, 27))
    a = F.mul(F.pow(z, 3), u)
    c = lambda e: Poly.const(F, "w", e)
    q3 = q2 + c(a) * Poly.variable(F, "w") + c(F.mul(a, a))
    with pytest.raises(ChainError):
        ch.append(IDX[3], q3, INF, "scripted")


def test_canonical_monomials_rank_two():
    F, w, z, y, P = cubic_setup()
    ch = Chain(F, "w", P, lump_sides=True)
    ch.append(IDX[1], w, V(3, 0), "derived")
    mono = ch.canonical_monomial(V(6, 3), 1)
    assert mono.v0 == V(6, 3) and mono.exps == {}
    assert F.format_element(mono.materialize(ch).constant_term()) == "z^6*y^3"
    with pytest.raises(ChainError):
        ch.canonical_monomial(V(0, "1/2"), 1)


def test_scripted_replay_roundtrip():
    F, x, Q, P = quartic_setup()
    script = [(IDX[1], x, V("3/2")), (IDX[2], Q, V("9/2"))]
    ch = replay(F, "x", P, script)
    assert ch.depth() == 2
    assert ch.entries[1].origin == "scripted"
    chains, skipped = explore(F, "x", P, depth=4,
                              scripted={V("3/2"): script}, scripted_only=True)
    assert len(chains) == 1 and chains[0].depth() == 2
    assert skipped == []


# ---------------------------------------------------------------------------
# the quintic over the coordinate tower: two limit stages, trivial e and f


def tower_setup(max_depth=26):
    F = CoordinateTower(2, 1, max_depth=max_depth)
    u, v = F.atom("u"), F.atom("v")
    one = F.one
    v2u = F.add(F.mul(v, v), u)
    P = Poly(F, "y", [v2u, F.mul(v, v), F.zero, F.zero, one, one])
    qw = Poly(F, "y", [v, F.zero, one])
    qw2 = Poly(F, "y", [v2u, F.zero, F.zero, F.zero, one])
    return F, P, qw, qw2


def tower_script(F, qw, qw2, depth=12):
    """Scripted chain for the quintic.  Inside a block consecutive keys
    differ by the digit monomial of the stage value, so the correction
    tails are cumulative products of every other tower atom."""
    u, v = F.atom("u"), F.atom("v")
    y = Poly.variable(F, "y")
    c = lambda e: Poly.const(F, "y", e)
    one = F.one
    script = []
    tail, prod = F.zero, one
    for l in range(1, depth + 1):
        script.append((OrdinalIndex(0, l), y + c(tail),
                       V(Fraction(4 ** l - 1, 3 * 4 ** l))))
        prod = F.mul(prod, F.atom("v%d" % (2 * l)))
        tail = F.add(tail, prod)
    script.append((OrdinalIndex(1, 0), qw, V(Fraction(3, 8))))
    script.append((OrdinalIndex(1, 1), qw, V(Fraction(1, 2))))
    tail, prod = F.zero, one
    for k in range(2, depth + 1):
        beta = (1 + sum(Fraction(2, 2 ** (2 * j + 1)) for j in range(1, k - 1))
                + Fraction(1, 2 ** (2 * k - 2))) / 2
        script.append((OrdinalIndex(1, k),
                       Poly(F, "y", [F.mul(v, tail), F.zero, one]), V(beta)))
        prod = F.mul(prod, F.atom("v%d" % (2 * k - 1)))
        tail = F.add(tail, prod)
    script.append((OrdinalIndex(2, 0), qw2, V(Fraction(3, 4))))
    tail, prod = F.zero, one
    for n in range(1, depth + 1):
        q = Poly(F, "y", [F.add(u, F.mul(F.mul(v, v), F.add(one, tail))),
                          F.zero, F.zero, F.zero, one])
        script.append((OrdinalIndex(2, n), q,
                       V(1 + Fraction(4 ** n - 1, 3 * 4 ** n))))
        prod = F.mul(prod, F.atom("v%d" % (2 * n)))
        tail = F.add(tail, prod)
    return script


_TOWER = {}


def tower_chain():
    if not _TOWER:
        F, P, qw, qw2 = tower_setup()
        script = tower_script(F, qw, qw2)
        _TOWER["data"] = (F, P, qw, qw2, script,
                          replay(F, "y", P, script))
    return _TOWER["data"]


def test_tower_scripted_chain_replays():
    F, P, qw, qw2, script, ch = tower_chain()
    assert ch.depth() == 38
    assert all(ent.e_step == 1 and ent.f_step == 1 for ent in ch.entries)
    assert ch.entry(13).alpha == 2 and ch.entry(26).alpha == 2
    assert ch.entry(13).index.is_limit and ch.entry(26).index.is_limit


def test_tower_effective_degree_blocks():
    F, P, qw, qw2, script, ch = tower_chain()
    assert ch.effective_degree(P, 1) == 4
    assert [ch.effective_degree(qw, k) for k in range(1, 13)] == [2] * 12
    assert [ch.effective_degree(qw2, k) for k in range(14, 26)] == [2] * 12
    assert [ch.effective_degree(P, k) for k in range(26, 39)] == [1] * 13


def test_tower_limit_appends_balance_on_even_support():
    F, P, qw, qw2, script, ch = tower_chain()
    minv, S = ch.argmin_data(qw, 12)
    assert sorted(m for m, _ in S) == [0, 2]
    assert minv == V(2 * Fraction(4 ** 12 - 1, 3 * 4 ** 12))
    minv2, S2 = ch.argmin_data(qw2, 25)
    assert sorted(m for m, _ in S2) == [0, 2]
    assert minv2 == ch.entry(25).beta.scale(2)


def test_tower_rules_frozen():
    F, P, qw, qw2, script, ch = tower_chain()
    rules = [ch.entry(k).rule for k in range(1, 38)]
    bump = [("const", 0)]
    assert rules == [("const", 1)] * 12 + bump + [("const", 1)] * 12 + bump \
        + [("const", 1)] * 11


def test_tower_deep_block_rederived_by_engine():
    F, P, qw, qw2, script, ch = tower_chain()
    pre = replay(F, "y", P, script[:26])
    assert pre.candidate_betas(qw2) == [V(Fraction(5, 4))]
    pre.append(OrdinalIndex(2, 1), qw2, V(Fraction(5, 4)), "scripted")
    keys = pre.derive_keys()
    assert len(keys) == 1
    diff = keys[0] + script[27][1]
    assert diff.is_zero
    assert pre.candidate_betas(keys[0]) == [V(Fraction(21, 16))]
