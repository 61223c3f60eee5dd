"""Payoffs of Markov chains and best responses in the induced MDPs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import networkx as nx

from ._solve import solve_absorption
from .fpnum import truncate
from .model import (
    TERMINAL,
    Game,
    StationaryProfile,
    backward_closure,
    transition_rows,
)


@dataclass(frozen=True)
class ValueVector:
    payoffs: dict[str, Fraction]
    table: Optional[dict[str, dict[str, Fraction]]] = None

    def __getitem__(self, player: str) -> Fraction:
        return self.payoffs[player]


@dataclass(frozen=True)
class BestResponse:
    value: Fraction
    strategy: dict[str, str]
    values: dict[str, Fraction] = field(default_factory=dict, compare=False)

    def as_profile(self) -> StationaryProfile:
        return StationaryProfile.pure(self.strategy)


def chain_values(
    g: Game, rows: Mapping[str, Mapping[str, Fraction]], players
) -> dict[str, dict[str, Fraction]]:
    """Per-player value of every vertex of the chain given by ``rows``."""
    players = list(players)
    support = backward_closure(g.terminals, rows)
    unknowns = [v for v in g.vertex_ids if v in support and g.owner[v] != TERMINAL]
    known = {t: [g.rewards[t][p] for p in players] for t in g.terminals}
    solved = solve_absorption(rows, unknowns, known, len(players))
    tables = {}
    for k, p in enumerate(players):
        table = {}
        for v in g.vertex_ids:
            if g.owner[v] == TERMINAL:
                table[v] = g.rewards[v][p]
            elif v in solved:
                table[v] = solved[v][k]
            else:
                table[v] = Fraction(0)
        tables[p] = table
    return tables


def mc_value(g: Game, sigma: StationaryProfile, i: str) -> ValueVector:
    """Expected payoff of player ``i`` under a full profile, with the per-vertex table."""
    tables = chain_values(g, transition_rows(g, sigma), [i])
    return ValueVector({i: tables[i][g.initial]}, tables)


def expected_payoffs(g: Game, sigma: StationaryProfile) -> ValueVector:
    tables = chain_values(g, transition_rows(g, sigma), g.players)
    return ValueVector({p: tables[p][g.initial] for p in g.players}, tables)


# -- best responses -------------------------------------------------------------

def _end_components(g: Game, rows, mine: set[str]):
    """Maximal end components of the MDP in which ``mine`` are the choice vertices.

    Returns the components (vertex lists in game order) and, for each choice
    vertex inside one, the successors that stay in its component.
    """
    cand = {v for v in g.vertex_ids if g.owner[v] != TERMINAL}
    allowed = {v: list(g.successors[v]) for v in mine}
    while True:
        graph = nx.DiGraph()
        graph.add_nodes_from(cand)
        for v in cand:
            if v in mine:
                targets = allowed[v]
            else:
                targets = [w for w, p in rows[v].items() if p > 0]
            graph.add_edges_from((v, w) for w in targets if w in cand)
        comp = {}
        for k, scc in enumerate(nx.strongly_connected_components(graph)):
            for v in scc:
                comp[v] = k
        changed = False
        for v in sorted(cand, key=g.index.get):
            if v in mine:
                keep = [w for w in allowed[v] if w in cand and comp.get(w) == comp[v]]
                if len(keep) != len(allowed[v]):
                    allowed[v] = keep
                    changed = True
                if not keep:
                    cand.discard(v)
            elif any(p > 0 and comp.get(w) != comp[v] for w, p in rows[v].items()):
                cand.discard(v)
                changed = True
        if not changed:
            break
    groups: dict[int, list[str]] = {}
    for v in sorted(cand, key=g.index.get):
        groups.setdefault(comp[v], []).append(v)
    comps = sorted(groups.values(), key=lambda c: g.index[c[0]])
    return comps, {v: allowed[v] for v in cand if v in mine}


_STAY = None


def mdp_best_response(g: Game, sigma_minus_i: StationaryProfile, i: str) -> BestResponse:
    """Optimal pure stationary strategy of ``i`` against the fixed others.

    End components of the MDP are collapsed first, each offering its exits
    and the option to stay forever (payoff 0).  Policy iteration with exact
    evaluation then runs on the collapsed MDP, where every policy reaches an
    absorbing node almost surely.
    """
    mine = set(g.owned_by(i))
    rows = transition_rows(g, sigma_minus_i, free=mine)
    comps, inner = _end_components(g, rows, mine)

    node_of = {v: v for v in g.vertex_ids}
    for k, comp in enumerate(comps):
        for v in comp:
            node_of[v] = f"\x00ec{k}"
    # actions: list of (vertex, successor) pairs, or _STAY
    actions: dict[str, list] = {}
    random_rows: dict[str, dict[str, Fraction]] = {}
    for v in g.vertex_ids:
        if g.owner[v] == TERMINAL or node_of[v] != v:
            continue
        if v in mine:
            actions[v] = [(v, w) for w in g.successors[v]]
        else:
            agg: dict[str, Fraction] = {}
            for w, p in rows[v].items():
                if p:
                    agg[node_of[w]] = agg.get(node_of[w], Fraction(0)) + p
            random_rows[v] = agg
    for k, comp in enumerate(comps):
        members = set(comp)
        exits = [(s, w) for s in comp if s in mine for w in g.successors[s] if w not in members]
        actions[f"\x00ec{k}"] = exits + [_STAY]

    def target(a):
        return None if a is _STAY else node_of[a[1]]

    def evaluate(policy):
        qrows = dict(random_rows)
        for node, acts in actions.items():
            t = target(acts[policy[node]])
            qrows[node] = {} if t is None else {t: Fraction(1)}
        unknowns = [n for n in qrows]
        known = {t: [g.rewards[t][i]] for t in g.terminals}
        solved = solve_absorption(qrows, unknowns, known, 1)
        vals = {n: vec[0] for n, vec in solved.items()}
        for t in g.terminals:
            vals[t] = g.rewards[t][i]
        return vals

    def q(vals, a):
        t = target(a)
        return Fraction(0) if t is None else vals[t]

    policy = {node: len(acts) - 1 if acts[-1] is _STAY else 0 for node, acts in actions.items()}
    vals = evaluate(policy)
    while True:
        switched = False
        for node, acts in actions.items():
            best = max(q(vals, a) for a in acts)
            if best > q(vals, acts[policy[node]]):
                policy[node] = next(k for k, a in enumerate(acts) if q(vals, a) == best)
                switched = True
        if not switched:
            break
        vals = evaluate(policy)
    # deterministic tie-break: lowest successor index, staying last
    def rank(a):
        return (len(g.vertices), 0) if a is _STAY else (g.index[a[1]], g.index[a[0]])

    for node, acts in actions.items():
        policy[node] = min((k for k, a in enumerate(acts) if q(vals, a) == vals[node]), key=lambda k: rank(acts[k]))

    strategy: dict[str, str] = {}
    for v in mine:
        if node_of[v] == v:
            strategy[v] = actions[v][policy[v]][1]
    for k, comp in enumerate(comps):
        act = actions[f"\x00ec{k}"][policy[f"\x00ec{k}"]]
        choosers = [v for v in comp if v in mine]
        if act is _STAY:
            for v in choosers:
                strategy[v] = inner[v][0]
            continue
        exit_vertex, exit_to = act
        strategy[exit_vertex] = exit_to
        dist = _distances_inside(comp, exit_vertex, rows, inner, mine)
        for v in choosers:
            if v != exit_vertex:
                strategy[v] = next(w for w in inner[v] if dist.get(w) == dist[v] - 1)

    full = sigma_minus_i.without(mine).updated(
        {v: {w: Fraction(1)} for v, w in strategy.items()}
    )
    table = chain_values(g, transition_rows(g, full), [i])[i]
    expected = vals[node_of[g.initial]] if g.owner[g.initial] != TERMINAL else vals[g.initial]
    if table[g.initial] != expected:
        raise RuntimeError("best-response expansion disagrees with the collapsed MDP")
    for v in mine:
        if any(table[w] > table[v] for w in g.successors[v]):
            raise RuntimeError(f"best response not locally optimal at {v!r}")
    return BestResponse(table[g.initial], dict(sorted(strategy.items(), key=lambda kv: g.index[kv[0]])), table)


def _distances_inside(comp, goal, rows, inner, mine):
    """Steps to ``goal`` along edges that stay inside the end component."""
    members = set(comp)
    pred: dict[str, list[str]] = {}
    for v in comp:
        succ = inner[v] if v in mine else [w for w, p in rows[v].items() if p > 0]
        for w in succ:
            if w in members:
                pred.setdefault(w, []).append(v)
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        w = queue.popleft()
        for v in pred.get(w, ()):
            if v not in dist:
                dist[v] = dist[w] + 1
                queue.append(v)
    return dist


# -- approximate evaluation -----------------------------------------------------

def approx_mc_value(
    g: Game, sigma: StationaryProfile, i: str, tol: Fraction, *, ell: int | None = None,
    max_steps: int = 100_000,
) -> tuple[Fraction, Fraction]:
    """Approximate payoff of ``i`` by forward propagation with truncated masses.

    Probability mass is pushed forward step by step; after each step every
    mass is truncated to ``ell`` bits.  The returned error bound accounts for
    the mass still in flight and all mass lost to truncation, and is at
    most ``tol``.
    """
    tol = Fraction(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    rows = transition_rows(g, sigma)
    scale = max((abs(g.rewards[t][i]) for t in g.terminals), default=Fraction(0))
    if g.owner[g.initial] == TERMINAL:
        return g.rewards[g.initial][i], Fraction(0)
    support = backward_closure(g.terminals, rows)
    if scale == 0 or g.initial not in support:
        return Fraction(0), Fraction(0)
    if ell is None:
        ell = max(8, (scale / tol).numerator.bit_length() + 8)
    while True:
        acc = Fraction(0)
        lost = Fraction(0)
        mass = {g.initial: Fraction(1)}
        for _ in range(max_steps):
            nxt: dict[str, Fraction] = {}
            for v, m in mass.items():
                for w, p in rows[v].items():
                    if not p:
                        continue
                    amt = m * p
                    if g.owner[w] == TERMINAL:
                        acc += amt * g.rewards[w][i]
                    elif w in support:
                        nxt[w] = nxt.get(w, Fraction(0)) + amt
            mass = {}
            for w, m in nxt.items():
                t = truncate(m, ell).value
                lost += m - t
                mass[w] = t
            if scale * lost > tol / 2:
                break
            bound = scale * (sum(mass.values(), Fraction(0)) + lost)
            if bound <= tol:
                return acc, bound
        else:
            raise RuntimeError("approximate evaluation did not converge")
        ell *= 2


def approx_mdp_decision(
    g: Game, sigma_minus_i: StationaryProfile, i: str, alpha, eps, *, method: str = "exact"
) -> str:
    """Promise threshold test on the best-response value of ``i``.

    Answers ``"no"`` when alpha <= val - eps and ``"yes"`` when
    alpha >= val + eps; anything in between may go either way.
    """
    alpha, eps = Fraction(alpha), Fraction(eps)
    if eps <= 0 or eps.denominator & (eps.denominator - 1):
        raise ValueError("eps must be a positive dyadic rational")
    br = mdp_best_response(g, sigma_minus_i, i)
    if method == "exact":
        estimate = br.value
    elif method == "iterative":
        profile = sigma_minus_i.without(g.owned_by(i)).updated(
            {v: {w: Fraction(1)} for v, w in br.strategy.items()}
        )
        estimate, _ = approx_mc_value(g, profile, i, eps / 2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return "no" if alpha <= estimate else "yes"
