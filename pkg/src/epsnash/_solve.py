"""Exact absorption values of finite Markov chains.

Unknown values satisfy x_v = sum_w p_vw x_w.  The system is split into
strongly connected components and solved bottom-up, so acyclic chains
reduce to back-substitution and each cyclic block is a small dense
Gaussian elimination over Fractions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

import networkx as nx


class SingularSystemError(ArithmeticError):
    pass


def _gauss(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    """Solve A X = B in place; B has one column per right-hand side."""
    n = len(a)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise SingularSystemError("singular block")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        row_a, row_b = a[col], b[col]
        for r in range(n):
            if r == col:
                continue
            f = a[r][col]
            if f == 0:
                continue
            f *= inv
            ar = a[r]
            for c in range(col, n):
                if row_a[c]:
                    ar[c] -= f * row_a[c]
            br = b[r]
            for k in range(len(br)):
                if row_b[k]:
                    br[k] -= f * row_b[k]
    return [[x / a[i][i] for x in b[i]] for i in range(n)]


def solve_absorption(
    rows: Mapping[str, Mapping[str, Fraction]],
    unknowns: Sequence[str],
    known: Mapping[str, Sequence[Fraction]],
    width: int,
) -> dict[str, list[Fraction]]:
    """Values of ``unknowns`` given fixed vectors at ``known`` vertices.

    Successors that are neither unknown nor known contribute 0.  ``width``
    is the number of value columns solved together.
    """
    unknown_set = set(unknowns)
    graph = nx.DiGraph()
    graph.add_nodes_from(unknowns)
    for v in unknowns:
        for w, p in rows[v].items():
            if p and w in unknown_set:
                graph.add_edge(v, w)
    cond = nx.condensation(graph)
    order = list(nx.topological_sort(cond))
    members = cond.graph["mapping"]
    blocks: dict[int, list[str]] = {}
    for v in unknowns:
        blocks.setdefault(members[v], []).append(v)

    zero = [Fraction(0)] * width
    values: dict[str, list[Fraction]] = {}

    def lookup(w):
        if w in values:
            return values[w]
        return known.get(w, zero)

    for c in reversed(order):
        block = blocks[c]
        if len(block) == 1:
            v = block[0]
            acc = [Fraction(0)] * width
            stay = Fraction(0)
            for w, p in rows[v].items():
                if not p:
                    continue
                if w == v:
                    stay += p
                    continue
                vec = lookup(w)
                for k in range(width):
                    if vec[k]:
                        acc[k] += p * vec[k]
            if stay:
                if stay == 1:
                    raise SingularSystemError(f"vertex {v!r} loops with probability 1")
                acc = [x / (1 - stay) for x in acc]
            values[v] = acc
            continue
        pos = {v: k for k, v in enumerate(block)}
        n = len(block)
        a = [[Fraction(0)] * n for _ in range(n)]
        b = [[Fraction(0)] * width for _ in range(n)]
        for i, v in enumerate(block):
            a[i][i] += 1
            for w, p in rows[v].items():
                if not p:
                    continue
                j = pos.get(w)
                if j is not None:
                    a[i][j] -= p
                else:
                    vec = lookup(w)
                    for k in range(width):
                        if vec[k]:
                            b[i][k] += p * vec[k]
        for v, vec in zip(block, _gauss(a, b)):
            values[v] = vec
    return values
