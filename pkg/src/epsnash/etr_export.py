"""Polynomial systems whose solutions are stationary equilibria with a given support.

Variables are ``p[v,w]`` (edge probabilities), ``r[i,v]`` (payoff of
player i from v) and ``g[v,w]`` (inverse of a support probability).
Constraints are tagged 1..10 in the order below, plus ``"threshold"``
for the payoff bounds at the initial vertex:

 1. p > 0 on support edges             6. r = reward at terminals
 2. p <= 1 on support edges            7. r = 0 where no terminal is reachable
 3. p = 0 off the support              8. r_v = sum_w p_vw r_w elsewhere
 4. rows of controlled vertices sum to 1   9. r_v >= r_w for an owner's edges
 5. p equals the chance probability   10. g p = 1 on support edges
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .evaluate import chain_values
from .model import (
    CHANCE,
    TERMINAL,
    Game,
    StationaryProfile,
    backward_closure,
    format_fraction,
    transition_rows,
)

Monomial = tuple[str, ...]
Poly = dict[Monomial, Fraction]

OPS = ("=", ">", ">=", "<=", "<")


def pvar(v, w):
    return f"p[{v},{w}]"


def rvar(i, v):
    return f"r[{i},{v}]"


def gvar(v, w):
    return f"g[{v},{w}]"


def poly(*terms) -> Poly:
    """Build a polynomial from (coefficient, var, var, ...) tuples."""
    out: Poly = {}
    for coef, *names in terms:
        key = tuple(sorted(names))
        out[key] = out.get(key, Fraction(0)) + Fraction(coef)
    return {k: c for k, c in out.items() if c}


def poly_sub(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, Fraction(0)) - c
    return {k: c for k, c in out.items() if c}


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            key = tuple(sorted(ka + kb))
            out[key] = out.get(key, Fraction(0)) + ca * cb
    return {k: c for k, c in out.items() if c}


def poly_eval(p: Poly, assignment: Mapping[str, Fraction]) -> Fraction:
    total = Fraction(0)
    for mono, coef in p.items():
        term = coef
        for name in mono:
            term *= assignment[name]
        total += term
    return total


def degree(p: Poly) -> int:
    return max((len(m) for m in p), default=0)


@dataclass(frozen=True)
class Constraint:
    tag: object  # int 1..10 or "threshold"
    lhs: Poly
    op: str
    rhs: Poly
    label: str = ""

    def holds(self, assignment) -> bool:
        d = poly_eval(self.lhs, assignment) - poly_eval(self.rhs, assignment)
        return {
            "=": d == 0, ">": d > 0, ">=": d >= 0, "<=": d <= 0, "<": d < 0,
        }[self.op]

    def variables(self) -> set[str]:
        return {x for p in (self.lhs, self.rhs) for m in p for x in m}


@dataclass
class EtrSystem:
    variables: list[str] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)

    def census(self) -> dict:
        counts: dict = {}
        for c in self.constraints:
            counts[c.tag] = counts.get(c.tag, 0) + 1
        return {"variables": len(self.variables), "constraints": counts}


class MissingVariableError(KeyError):
    pass


def support_of(g: Game, sigma: StationaryProfile, *, override_chance: bool = False) -> set[tuple[str, str]]:
    """Edges with positive probability under ``sigma``, chance edges included."""
    rows = transition_rows(g, sigma, override_chance=override_chance)
    return {(v, w) for v, row in rows.items() for w, p in row.items() if p > 0}


def build_etr(g: Game, xs=None, ys=None, support: Iterable[tuple[str, str]] = ()) -> EtrSystem:
    """Constraints 1-10 for the support ``support`` and optional payoff bounds.

    Positive chance edges are added to the support automatically.
    """
    edges = set(g.edges)
    S = set(support)
    bad = S - edges
    if bad:
        raise ValueError(f"support contains non-edges {sorted(bad)}")
    for (v, w), p in g.chance.items():
        if p > 0:
            S.add((v, w))
    for v in g.controlled:
        if not any((v, w) in S for w in g.successors[v]):
            raise ValueError(f"support leaves controlled vertex {v!r} without an edge")

    rows = {}
    for v, owner in g.vertices:
        if owner != TERMINAL:
            rows[v] = {w: Fraction(1) for w in g.successors[v] if (v, w) in S}
    vs = backward_closure(g.terminals, rows)

    sys = EtrSystem()
    sys.variables += [pvar(v, w) for v, w in g.edges]
    sys.variables += [rvar(i, v) for i in g.players for v in g.vertex_ids]
    s_order = [e for e in g.edges if e in S]
    sys.variables += [gvar(v, w) for v, w in s_order]
    add = sys.constraints.append
    one = poly((1,))
    zero: Poly = {}

    for v, w in s_order:
        add(Constraint(1, poly((1, pvar(v, w))), ">", zero, f"{v}->{w}"))
    for v, w in s_order:
        add(Constraint(2, poly((1, pvar(v, w))), "<=", one, f"{v}->{w}"))
    for v, w in g.edges:
        if (v, w) not in S:
            add(Constraint(3, poly((1, pvar(v, w))), "=", zero, f"{v}->{w}"))
    for v in g.controlled:
        add(Constraint(4, poly(*[(1, pvar(v, w)) for w in g.successors[v]]), "=", one, v))
    for v, owner in g.vertices:
        if owner == CHANCE:
            for w in g.successors[v]:
                add(Constraint(5, poly((1, pvar(v, w))), "=", poly((g.chance[(v, w)],)), f"{v}->{w}"))
    for i in g.players:
        for t in g.terminals:
            add(Constraint(6, poly((1, rvar(i, t))), "=", poly((g.rewards[t][i],)), f"{i}@{t}"))
    for i in g.players:
        for v in g.vertex_ids:
            if v not in vs:
                add(Constraint(7, poly((1, rvar(i, v))), "=", zero, f"{i}@{v}"))
    for i in g.players:
        for v in g.vertex_ids:
            if v in vs and g.owner[v] != TERMINAL:
                rhs = poly(*[(1, pvar(v, w), rvar(i, w)) for w in g.successors[v]])
                add(Constraint(8, poly((1, rvar(i, v))), "=", rhs, f"{i}@{v}"))
    for v, owner in g.vertices:
        if owner in g.players:
            for w in g.successors[v]:
                add(Constraint(9, poly((1, rvar(owner, v))), ">=", poly((1, rvar(owner, w))), f"{owner}@{v}->{w}"))
    for v, w in s_order:
        add(Constraint(10, poly((1, gvar(v, w), pvar(v, w))), "=", one, f"{v}->{w}"))
    if xs is not None or ys is not None:
        for i in g.players:
            if xs is not None:
                add(Constraint("threshold", poly((1, rvar(i, g.initial))), ">=", poly((xs[i],)), f"{i} lower"))
            if ys is not None:
                add(Constraint("threshold", poly((1, rvar(i, g.initial))), "<=", poly((ys[i],)), f"{i} upper"))
    return sys


def etr_assignment(g: Game, sigma: StationaryProfile, *, override_chance: bool = True) -> dict[str, Fraction]:
    """Values of all variables induced by ``sigma``.

    Rows given for chance vertices replace the game's probabilities, so a
    mismatch surfaces as a violated constraint 5.
    """
    rows = transition_rows(g, sigma, override_chance=override_chance)
    tables = chain_values(g, rows, g.players)
    a: dict[str, Fraction] = {}
    for v, w in g.edges:
        p = rows.get(v, {}).get(w, Fraction(0))
        a[pvar(v, w)] = p
        # g has no sensible value at p = 0; 0 makes constraint 10 fail there
        a[gvar(v, w)] = 1 / p if p > 0 else Fraction(0)
    for i in g.players:
        for v in g.vertex_ids:
            a[rvar(i, v)] = tables[i][v]
    return a


def check_assignment(sys: EtrSystem, assignment: Mapping[str, Fraction]) -> list[Constraint]:
    """Constraints violated by ``assignment``; raises on a missing variable."""
    missing = [x for x in sys.variables if x not in assignment]
    if missing:
        raise MissingVariableError(f"no value for {missing[0]}" + (f" and {len(missing) - 1} more" if len(missing) > 1 else ""))
    vals = {k: Fraction(v) for k, v in assignment.items()}
    return [c for c in sys.constraints if not c.holds(vals)]


# -- SMT-LIB2 ----------------------------------------------------------------

def _symbol(name: str) -> str:
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def _number(x: Fraction) -> str:
    x = Fraction(x)
    mag = abs(x)
    text = str(mag.numerator) if mag.denominator == 1 else f"(/ {mag.numerator} {mag.denominator})"
    return f"(- {text})" if x < 0 else text


def _term(p: Poly) -> str:
    parts = []
    for mono in sorted(p, key=lambda m: (len(m), m)):
        coef = p[mono]
        factors = [_symbol(x) for x in mono]
        if not factors:
            parts.append(_number(coef))
        elif coef == 1:
            parts.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
        else:
            parts.append(f"(* {_number(coef)} {' '.join(factors)})")
    if not parts:
        return "0"
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def emit_smtlib(sys: EtrSystem) -> str:
    lines = ["(set-logic QF_NRA)"]
    for x in sys.variables:
        lines.append(f"(declare-fun {_symbol(x)} () Real)")
    for c in sys.constraints:
        lines.append(f"; paper-constraint {c.tag}" + (f" {c.label}" if c.label else ""))
        lines.append(f"(assert ({c.op} {_term(c.lhs)} {_term(c.rhs)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|(\|[^|]*\|)|([^\s()|;]+))")


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ValueError(f"cannot tokenize at offset {pos}")
            return
        pos = m.end()
        comment, lp, rp, quoted, atom = m.groups()
        if comment:
            yield ("comment", comment)
        elif lp:
            yield ("(", lp)
        elif rp:
            yield (")", rp)
        elif quoted:
            yield ("sym", quoted[1:-1])
        elif atom:
            yield ("atom", atom)


def _read(tokens):
    """Top-level s-expressions, each preceded by its most recent comment."""
    stack: list[list] = []
    comment = None
    for kind, text in tokens:
        if kind == "comment":
            if not stack:
                comment = text
            continue
        if kind == "(":
            stack.append([])
        elif kind == ")":
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                yield comment, done
                comment = None
        else:
            item = ("sym", text) if kind == "sym" else text
            if stack:
                stack[-1].append(item)
            else:
                yield comment, item


def _to_poly(expr) -> Poly:
    if isinstance(expr, tuple):
        return poly((1, expr[1]))
    if isinstance(expr, str):
        return poly((Fraction(expr),)) if Fraction(expr) else {}
    head, *args = expr
    if head == "+":
        out: Poly = {}
        for a in args:
            for k, c in _to_poly(a).items():
                out[k] = out.get(k, Fraction(0)) + c
        return {k: c for k, c in out.items() if c}
    if head == "-":
        if len(args) == 1:
            return poly_sub({}, _to_poly(args[0]))
        out = _to_poly(args[0])
        for a in args[1:]:
            out = poly_sub(out, _to_poly(a))
        return out
    if head == "*":
        out = poly((1,))
        for a in args:
            out = poly_mul(out, _to_poly(a))
        return out
    if head == "/":
        num, den = _to_poly(args[0]), _to_poly(args[1])
        if set(den) != {()}:
            raise ValueError("division by a non-constant")
        d = den[()]
        return {k: c / d for k, c in num.items()}
    raise ValueError(f"unsupported operator {head!r}")


def parse_smtlib(text: str) -> EtrSystem:
    """Read back a document produced by ``emit_smtlib``."""
    sys = EtrSystem()
    for comment, expr in _read(_tokens(text)):
        if not isinstance(expr, list) or not expr:
            raise ValueError(f"unexpected top-level item {expr!r}")
        head = expr[0]
        if head == "declare-fun":
            sys.variables.append(expr[1][1] if isinstance(expr[1], tuple) else expr[1])
        elif head == "assert":
            op, lhs, rhs = expr[1]
            tag, label = None, ""
            if comment:
                m = re.match(r";\s*paper-constraint\s+(\S+)\s*(.*)", comment)
                if m:
                    tag = int(m.group(1)) if m.group(1).isdigit() else m.group(1)
                    label = m.group(2)
            sys.constraints.append(Constraint(tag, _to_poly(lhs), op, _to_poly(rhs), label))
        elif head in ("set-logic", "check-sat", "set-info", "set-option", "exit"):
            continue
        else:
            raise ValueError(f"unsupported command {head!r}")
    return sys


def describe(c: Constraint) -> str:
    def show(p):
        if not p:
            return "0"
        return " + ".join(
            ("*".join([format_fraction(k)] * (not m or k != 1) + list(m))) for m, k in sorted(p.items())
        )
    return f"[{c.tag}] {show(c.lhs)} {c.op} {show(c.rhs)}"
