"""Scenario files: a line-oriented description of one chain computation.

Sections in square brackets, keys as `name = value`, comments with `#`.

[field]      kind = rational_functions | lex_series | coordinate_tower
             rational_functions: char (0 or a prime), generator
             lex_series: p, generators (space separated), precision (var:N ...)
             coordinate_tower: p, gamma, depth
[valuation]  rank = 1 | 2 (must match the field kind)
[target]     var, poly (infix expression, ^ for powers)
[chain]      optional script, one entry per line: index ; expr ; value
             index tokens as printed by chain listings: 3, w, w+1, w2+5
[oracle]     optional samples: expr ; value [; value per branch]
[params]     depth, window, lump_sides, branches = all | scripted

Rationals are written a/b, rank 2 values as (a1, a2), infinity as inf.
"""

import os
import re

from .fields import (CoordinateTower, LexMonomialSeries, PrimeField, QQ,
                     RationalFunctions)
from .polyring import Poly
from .values import INF, OrdinalIndex, format_value, parse_value

__all__ = ["Scenario", "ScenarioError", "parse_scenario", "format_scenario",
           "parse_expression", "parse_index", "load_scenario",
           "scenario_search_paths"]

ENV_PATH = "VALFORGE_SCENARIO_PATH"


class ScenarioError(Exception):
    pass


# ---------------------------------------------------------------------------
# expressions

_TOKENS = re.compile(r"\d+|[A-Za-z_][A-Za-z0-9_]*|\^|[()+\-*/]|\S")


def _tokenize(text):
    out = []
    for m in _TOKENS.finditer(text):
        tok = m.group(0)
        if tok not in "()+-*/^" and not tok.isdigit() \
                and not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise ScenarioError("stray character %r" % tok)
        out.append(tok)
    return out


class _ExprParser:
    """Infix expressions over the scenario field: the chain variable, the
    field's named atoms, integers, + - * / ^ and parentheses.  Division
    only by constants; exponents are literal nonnegative integers."""

    def __init__(self, field, var, text):
        self.field = field
        self.var = var
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self):
        out = self.expr()
        if self.peek() is not None:
            raise ScenarioError("unexpected %r" % self.peek())
        return out

    def expr(self):
        out = self.term()
        while self.peek() in ("+", "-"):
            if self.take() == "+":
                out = out + self.term()
            else:
                out = out - self.term()
        return out

    def term(self):
        out = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            if op == "*":
                out = out * rhs
            else:
                if rhs.degree != 0 or rhs.is_zero:
                    raise ScenarioError("division only by nonzero constants")
                F = self.field
                out = out.scale(F.div(F.one, rhs.constant_term()))
        return out

    def factor(self):
        if self.peek() == "-":
            self.take()
            return -self.factor()
        out = self.atom()
        while self.peek() == "^":
            self.take()
            tok = self.take()
            if tok is None or not tok.isdigit():
                raise ScenarioError("exponent must be a literal integer")
            out = out.pow(int(tok))
        return out

    def atom(self):
        tok = self.take()
        if tok is None:
            raise ScenarioError("expression ended early")
        if tok == "(":
            out = self.expr()
            if self.take() != ")":
                raise ScenarioError("missing closing parenthesis")
            return out
        if tok.isdigit():
            return Poly.const(self.field, self.var, self.field.from_int(int(tok)))
        if tok == self.var:
            return Poly.variable(self.field, self.var)
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            try:
                elem = self.field.atom(tok)
            except (KeyError, ValueError) as exc:
                raise ScenarioError("unknown name %r (%s)" % (tok, exc))
            return Poly.const(self.field, self.var, elem)
        raise ScenarioError("unexpected %r" % tok)


def parse_expression(field, var, text):
    return _ExprParser(field, var, text).parse()


def parse_index(tok):
    tok = tok.strip()
    m = re.fullmatch(r"(\d+)|w(\d*)(?:\+(\d+))?", tok)
    if m is None:
        raise ScenarioError("bad chain index %r" % tok)
    if m.group(1) is not None:
        return OrdinalIndex(0, int(m.group(1)))
    limit = int(m.group(2)) if m.group(2) else 1
    return OrdinalIndex(limit, int(m.group(3) or 0))


# ---------------------------------------------------------------------------
# the scenario itself

_SECTIONS = ("field", "valuation", "target", "chain", "oracle", "params")

_BOOL = {"true": True, "false": False}


class Scenario:
    __slots__ = ("name", "field", "rank", "var", "target", "script", "oracle",
                 "depth", "window", "lump_sides", "branches_mode")

    def __init__(self, name, field, rank, var, target, script, oracle,
                 depth, window, lump_sides, branches_mode):
        self.name = name
        self.field = field
        self.rank = rank
        self.var = var
        self.target = target
        self.script = script
        self.oracle = oracle
        self.depth = depth
        self.window = window
        self.lump_sides = lump_sides
        self.branches_mode = branches_mode

    def scripted_map(self):
        if not self.script:
            return {}
        return {self.script[0][2]: list(self.script)}

    def oracle_samples(self, branch_pos):
        """(poly, value) pairs for the branch at the given 0-based spot in
        the branch listing; a single oracle value covers every branch."""
        out = []
        for poly, values in self.oracle:
            if len(values) == 1:
                out.append((poly, values[0]))
            elif branch_pos < len(values):
                out.append((poly, values[branch_pos]))
            else:
                raise ScenarioError(
                    "oracle row with %d values cannot cover branch %d"
                    % (len(values), branch_pos + 1))
        return out


def _split_sections(text):
    sections = {}
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError("line %d: unterminated section header" % n)
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ScenarioError("line %d: unknown section %r" % (n, name))
            if name in sections:
                raise ScenarioError("line %d: duplicate section %r" % (n, name))
            current = sections.setdefault(name, [])
            continue
        if current is None:
            raise ScenarioError("line %d: content before any section" % n)
        current.append((n, line))
    if not sections:
        raise ScenarioError("empty scenario")
    return sections


def _keyvals(rows, section):
    out = {}
    for n, line in rows:
        if "=" not in line:
            raise ScenarioError("line %d: expected key = value in [%s]"
                                % (n, section))
        key, val = line.split("=", 1)
        key, val = key.strip(), val.strip()
        if key in out:
            raise ScenarioError("line %d: duplicate key %r" % (n, key))
        out[key] = (n, val)
    return out


def _want(kv, key, section):
    if key not in kv:
        raise ScenarioError("[%s] is missing %r" % (section, key))
    return kv.pop(key)[1]

def _reject_extra(kv, section):
    if kv:
        n, _ = next(iter(kv.values()))
        raise ScenarioError("line %d: unknown key %r in [%s]"
                            % (n, next(iter(kv)), section))


def _build_field(kv, precision_override):
    kind = _want(kv, "kind", "field")
    if kind == "rational_functions":
        char = int(_want(kv, "char", "field"))
        gen = _want(kv, "generator", "field")
        _reject_extra(kv, "field")
        if precision_override:
            raise ScenarioError("rational function fields are exact; "
                                "no precision to override")
        scalars = QQ if char == 0 else PrimeField(char)
        return RationalFunctions(scalars, gen)
    if kind == "lex_series":
        p = int(_want(kv, "p", "field"))
        gens = tuple(_want(kv, "generators", "field").split())
        precision = {}
        if "precision" in kv:
            for part in kv.pop("precision")[1].split():
                var, _, num = part.partition(":")
                if not num.isdigit():
                    raise ScenarioError("bad precision %r" % part)
                precision[var] = int(num)
        _reject_extra(kv, "field")
        for var, num in (precision_override or {}).items():
            if var is None:
                if not precision:
                    raise ScenarioError("bare precision override needs a "
                                        "declared cutoff to replace")
                for known in list(precision):
                    precision[known] = num
            elif var not in gens:
                raise ScenarioError("precision override for unknown "
                                    "variable %r" % var)
            else:
                precision[var] = num
        return LexMonomialSeries(PrimeField(p), gens, precision or None)
    if kind == "coordinate_tower":
        p = int(_want(kv, "p", "field"))
        parts = _want(kv, "gamma", "field").split()
        gamma = int(parts[0]) if len(parts) == 1 else [int(g) for g in parts]
        depth = int(_want(kv, "depth", "field"))
        _reject_extra(kv, "field")
        for var, num in (precision_override or {}).items():
            if var is not None:
                raise ScenarioError("tower precision is its depth; use a "
                                    "bare number")
            depth = num
        return CoordinateTower(p, gamma, max_depth=depth)
    raise ScenarioError("unknown field kind %r" % kind)


def parse_scenario(text, name="scenario", precision_override=None):
    sections = _split_sections(text)
    for needed in ("field", "target"):
        if needed not in sections:
            raise ScenarioError("missing [%s] section" % needed)

    field = _build_field(_keyvals(sections["field"], "field"),
                         precision_override)

    rank = field.rank
    if "valuation" in sections:
        kv = _keyvals(sections["valuation"], "valuation")
        rank = int(_want(kv, "rank", "valuation"))
        _reject_extra(kv, "valuation")
        if rank != field.rank:
            raise ScenarioError("declared rank %d but the field has rank %d"
                                % (rank, field.rank))

    kv = _keyvals(sections["target"], "target")
    var = _want(kv, "var", "target")
    poly_text = _want(kv, "poly", "target")
    _reject_extra(kv, "target")
    try:
        target = parse_expression(field, var, poly_text)
    except ScenarioError as exc:
        raise ScenarioError("target polynomial: %s" % exc)
    if not target.is_monic:
        raise ScenarioError("target polynomial is not monic")

    script = []
    for n, line in sections.get("chain", []):
        parts = [p.strip() for p in line.split(";")]
        if len(parts) != 3:
            raise ScenarioError("line %d: chain entries are "
                                "index ; expr ; value" % n)
        try:
            index = parse_index(parts[0])
            poly = parse_expression(field, var, parts[1])
            beta = parse_value(parts[2], rank)
        except (ScenarioError, ValueError) as exc:
            raise ScenarioError("line %d: %s" % (n, exc))
        script.append((index, poly, beta))
    for (i1, _, b1), (i2, _, b2) in zip(script, script[1:]):
        if not i1 < i2:
            raise ScenarioError("chain indices must increase (%s before %s)"
                                % (i1, i2))
        if b1 is INF:
            raise ScenarioError("only the last chain entry may be terminal")
        if b2 is not INF and not b1 < b2:
            raise ScenarioError("chain values must increase (%s before %s)"
                                % (b1, b2))

    oracle = []
    for n, line in sections.get("oracle", []):
        parts = [p.strip() for p in line.split(";")]
        if len(parts) < 2:
            raise ScenarioError("line %d: oracle rows are "
                                "expr ; value [; value ...]" % n)
        try:
            poly = parse_expression(field, var, parts[0])
            values = [parse_value(p, rank) for p in parts[1:]]
        except (ScenarioError, ValueError) as exc:
            raise ScenarioError("line %d: %s" % (n, exc))
        oracle.append((poly, values))

    depth, window = 8, 4
    lump_sides, branches_mode = False, "all"
    if "params" in sections:
        kv = _keyvals(sections["params"], "params")
        if "depth" in kv:
            depth = int(kv.pop("depth")[1])
        if "window" in kv:
            window = int(kv.pop("window")[1])
        if "lump_sides" in kv:
            n, val = kv.pop("lump_sides")
            if val not in _BOOL:
                raise ScenarioError("line %d: lump_sides is true or false" % n)
            lump_sides = _BOOL[val]
        if "branches" in kv:
            n, val = kv.pop("branches")
            if val not in ("all", "scripted"):
                raise ScenarioError("line %d: branches is all or scripted" % n)
            branches_mode = val
        _reject_extra(kv, "params")
    if branches_mode == "scripted" and not script:
        raise ScenarioError("branches = scripted needs a [chain] section")

    return Scenario(name, field, rank, var, target, script, oracle,
                    depth, window, lump_sides, branches_mode)


# ---------------------------------------------------------------------------
# printing


def _field_lines(F):
    if isinstance(F, RationalFunctions):
        return ["kind = rational_functions", "char = %d" % F.char,
                "generator = %s" % F.var]
    if isinstance(F, LexMonomialSeries):
        out = ["kind = lex_series", "p = %d" % F.char,
               "generators = %s" % " ".join(F.varnames)]
        if F.precision:
            out.append("precision = " + " ".join(
                "%s:%d" % (v, F.precision[v]) for v in F.varnames
                if v in F.precision))
        return out
    if isinstance(F, CoordinateTower):
        gammas = F._gammas
        gamma = (str(gammas[0]) if len(set(gammas)) == 1
                 else " ".join(str(g) for g in gammas))
        return ["kind = coordinate_tower", "p = %d" % F.p,
                "gamma = %s" % gamma, "depth = %d" % F.max_depth]
    raise ScenarioError("cannot print field %r" % F)


def format_scenario(sc):
    lines = ["[field]"] + _field_lines(sc.field)
    lines += ["", "[valuation]", "rank = %d" % sc.rank]
    lines += ["", "[target]", "var = %s" % sc.var,
              "poly = %s" % sc.target.format()]
    if sc.script:
        lines += ["", "[chain]"]
        for index, poly, beta in sc.script:
            lines.append("%s ; %s ; %s"
                         % (index, poly.format(), format_value(beta)))
    if sc.oracle:
        lines += ["", "[oracle]"]
        for poly, values in sc.oracle:
            lines.append(" ; ".join([poly.format()]
                                    + [format_value(v) for v in values]))
    lines += ["", "[params]",
              "depth = %d" % sc.depth,
              "window = %d" % sc.window,
              "lump_sides = %s" % ("true" if sc.lump_sides else "false"),
              "branches = %s" % sc.branches_mode]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# locating scenario files


def scenario_search_paths():
    paths = []
    env = os.environ.get(ENV_PATH, "")
    for part in env.split(os.pathsep):
        if part:
            paths.append(part)
    paths.append(os.getcwd())
    return paths


def _packaged_text(fname):
    from importlib import resources
    ref = resources.files(__package__) / "scenarios" / fname
    if ref.is_file():
        return ref.read_text(encoding="ascii")
    return None


def load_scenario(name, precision_override=None):
    """Scenario text by file path or bare name; bare names search the env
    path, the working directory, then the packaged scenarios."""
    fname = name if name.endswith(".scn") else name + ".scn"
    if os.sep in fname or os.path.isfile(fname):
        candidates = [fname]
    else:
        candidates = [os.path.join(d, fname) for d in scenario_search_paths()]
    for cand in candidates:
        if os.path.isfile(cand):
            with open(cand, "r", encoding="ascii") as fh:
                text = fh.read()
            return parse_scenario(text, os.path.basename(fname)[:-4],
                                  precision_override)
    text = _packaged_text(fname)
    if text is not None:
        return parse_scenario(text, fname[:-4], precision_override)
    raise ScenarioError("no scenario named %r on the search path" % name)
