"""Finding constrained approximate equilibria by guessing and checking.

Every candidate, whatever produced it, is accepted only after exact
verification, so a returned profile is always correct; failing to find
one proves nothing.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from ._solve import SingularSystemError, _gauss
from .evaluate import chain_values, mdp_best_response
from .generators import random_profile
from .model import Game, StationaryProfile, forward_closure, transition_rows
from .verify import VerificationReport, verify_constrained

MODES = ("candidate-file", "pure-enumeration", "support-newton", "random-restart")


@dataclass(frozen=True)
class SearchConfig:
    mode: str = "pure-enumeration"
    budget: int = 10_000
    epsilon: Fraction = Fraction(1, 8)
    seed: int = 0
    candidates: Sequence[StationaryProfile] = field(default=(), compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if Fraction(self.epsilon) <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class SearchResult:
    found: bool
    profile: Optional[StationaryProfile]
    report: Optional[VerificationReport]
    tried: int
    best_margin: Optional[Fraction]


class _Tracker:
    """Counts candidates and remembers the smallest margin bound seen."""

    def __init__(self, budget):
        self.budget = budget
        self.tried = 0
        self.best: Optional[Fraction] = None

    def exhausted(self):
        return self.tried >= self.budget

    def note(self, margin):
        if margin is not None and (self.best is None or margin < self.best):
            self.best = margin


def _check(g, sigma, xs, ys, eps, tracker):
    tracker.tried += 1
    rep = verify_constrained(g, sigma, xs, ys, eps)
    tracker.note(rep.max_margin)
    return rep


def search_constrained_ne(g: Game, xs: Mapping, ys: Mapping, eps=None, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    eps = Fraction(cfg.epsilon if eps is None else eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    xs = {i: Fraction(xs[i]) for i in g.players}
    ys = {i: Fraction(ys[i]) for i in g.players}
    tracker = _Tracker(cfg.budget)
    if cfg.mode == "candidate-file":
        hit = _from_candidates(g, xs, ys, eps, cfg.candidates, tracker)
    elif cfg.mode == "pure-enumeration":
        hit = _pure_enumeration(g, xs, ys, eps, tracker)
    elif cfg.mode == "support-newton":
        hit = _support_search(g, xs, ys, eps, tracker)
    else:
        hit = _random_restart(g, xs, ys, eps, tracker, random.Random(cfg.seed))
    if hit is None:
        return SearchResult(False, None, None, tracker.tried, tracker.best)
    sigma, rep = hit
    return SearchResult(True, sigma, rep, tracker.tried, tracker.best)


def _from_candidates(g, xs, ys, eps, candidates, tracker):
    for sigma in candidates:
        if tracker.exhausted():
            break
        rep = _check(g, sigma, xs, ys, eps, tracker)
        if rep.ok:
            return sigma, rep
    return None


def _pure_enumeration(g, xs, ys, eps, tracker):
    vs = list(g.controlled)
    payoff_cache: dict = {}
    for combo in itertools.product(*(g.successors[v] for v in vs)):
        if tracker.exhausted():
            return None
        tracker.tried += 1
        choice = dict(zip(vs, combo))
        sigma = StationaryProfile.pure(choice)
        rows = transition_rows(g, sigma)
        reached = forward_closure(g.initial, rows)
        key = tuple((v, choice[v]) for v in vs if v in reached)
        pay = payoff_cache.get(key)
        if pay is None:
            tables = chain_values(g, rows, g.players)
            pay = {i: tables[i][g.initial] for i in g.players}
            payoff_cache[key] = pay
        if any(not (xs[i] - eps <= pay[i] <= ys[i] + eps) for i in g.players):
            continue
        worst = Fraction(0)
        for i in g.players:
            margin = mdp_best_response(g, sigma, i).value - pay[i]
            worst = max(worst, margin)
            if margin > eps:
                break
        tracker.note(worst)
        if worst <= eps:
            rep = verify_constrained(g, sigma, xs, ys, eps)
            if rep.ok:
                return sigma, rep
    return None


def supports(g: Game):
    """Support choices per controlled vertex, smallest total size first."""
    vs = list(g.controlled)
    options = []
    for v in vs:
        succ = g.successors[v]
        subsets = [c for k in range(1, len(succ) + 1) for c in itertools.combinations(succ, k)]
        options.append(subsets)
    max_total = sum(len(g.successors[v]) for v in vs)
    for total in range(len(vs), max_total + 1):
        yield from _supports_of_size(vs, options, total)


def _supports_of_size(vs, options, total):
    def rec(k, remaining):
        if k == len(vs):
            if remaining == 0:
                yield ()
            return
        rest_min = len(vs) - k - 1
        for subset in options[k]:
            if len(subset) > remaining - rest_min:
                continue
            for tail in rec(k + 1, remaining - len(subset)):
                yield ((vs[k], subset),) + tail

    for combo in rec(0, total):
        yield dict(combo)


def _support_search(g, xs, ys, eps, tracker):
    for S in supports(g):
        if tracker.exhausted():
            return None
        tracker.tried += 1
        sigma = support_newton(g, xs, ys, S, eps / 8, 60, eps=eps)
        if sigma is not None:
            rep = verify_constrained(g, sigma, xs, ys, eps)
            tracker.note(rep.max_margin)
            return sigma, rep
    return None


def _random_restart(g, xs, ys, eps, tracker, rng):
    while not tracker.exhausted():
        sigma = random_profile(rng, g)
        for _ in range(2 * len(g.players) + 1):
            if tracker.exhausted():
                return None
            rep = _check(g, sigma, xs, ys, eps, tracker)
            if rep.ok:
                return sigma, rep
            # move the player with the largest margin to a best response
            worst = max(g.players, key=lambda i: rep.players[i].margin)
            br = rep.players[worst].best_response
            sigma = sigma.updated({v: {w: Fraction(1)} for v, w in br.items()})
    return None


# -- numeric solving for a fixed support ------------------------------------------

_SCALE = 1 << 128
_H = Fraction(1, 1 << 64)
_FLOOR = Fraction(1, 1 << 100)


def _dyadic(x: Fraction) -> Fraction:
    return Fraction(round(x * _SCALE), _SCALE)


def support_newton(
    g: Game, xs: Mapping, ys: Mapping, S: Mapping[str, Sequence[str]], tol, iters: int = 60, *, eps=None,
) -> Optional[StationaryProfile]:
    """Try to solve the equilibrium conditions on support ``S`` numerically.

    The free parameters are the probabilities of all but the last support
    edge at each mixed vertex.  Residuals are the owner's indifference
    between support edges, the excess of any off-support edge over the
    vertex value, and the violation of payoff bounds.  A damped
    Gauss-Newton (Levenberg-Marquardt) iteration drives them to zero;
    iterates are rounded to 128-bit dyadics.  The result is returned only
    if it verifies exactly at ``eps`` (default ``tol``), after first trying
    a small-denominator snap of the parameters.
    """
    tol = Fraction(tol)
    eps = tol if eps is None else Fraction(eps)
    xs = {i: Fraction(xs[i]) for i in g.players}
    ys = {i: Fraction(ys[i]) for i in g.players}
    for v in g.controlled:
        sup = tuple(S.get(v, ()))
        if not sup or any(w not in g.successors[v] for w in sup):
            raise ValueError(f"support at {v!r} must be a nonempty set of successors")
    S = {v: tuple(S[v]) for v in g.controlled}
    slots = [(v, k) for v in g.controlled for k in range(len(S[v]) - 1)]

    def profile(x):
        rows = {}
        pos = 0
        for v in g.controlled:
            sup = S[v]
            vals = list(x[pos:pos + len(sup) - 1])
            pos += len(sup) - 1
            rows[v] = dict(zip(sup, vals + [1 - sum(vals, Fraction(0))]))
        return StationaryProfile(rows)

    def residuals(x):
        sigma = profile(x)
        tables = chain_values(g, transition_rows(g, sigma), g.players)
        out = []
        for v in g.controlled:
            r = tables[g.owner[v]]
            sup = S[v]
            for w in sup[1:]:
                out.append(r[w] - r[sup[0]])
            for w in g.successors[v]:
                if w not in sup:
                    out.append(max(Fraction(0), r[w] - r[v]))
        for i in g.players:
            val = tables[i][g.initial]
            out.append(max(Fraction(0), xs[i] - val))
            out.append(max(Fraction(0), val - ys[i]))
        return out

    def project(x):
        x = list(x)
        pos = 0
        for v in g.controlled:
            k = len(S[v]) - 1
            seg = [max(_FLOOR, t) for t in x[pos:pos + k]]
            total = sum(seg, Fraction(0))
            if total > 1 - _FLOOR:
                seg = [t * (1 - _FLOOR) / total for t in seg]
            x[pos:pos + k] = [_dyadic(t) for t in seg]
            pos += k
        return x

    def norm2(res):
        return sum((r * r for r in res), Fraction(0))

    x = []
    for v in g.controlled:
        x += [Fraction(1, len(S[v]))] * (len(S[v]) - 1)
    x = project(x)
    res = residuals(x)
    lam = Fraction(1, 1024)
    for _ in range(iters):
        if max((abs(r) for r in res), default=Fraction(0)) <= tol:
            break
        if not slots:
            break
        cols = []
        for k in range(len(slots)):
            bumped = list(x)
            bumped[k] += _H
            cols.append([(a - b) / _H for a, b in zip(residuals(bumped), res)])
        n = len(slots)
        jtj = [[sum(cols[a][r] * cols[b][r] for r in range(len(res))) for b in range(n)] for a in range(n)]
        grad = [sum(cols[a][r] * res[r] for r in range(len(res))) for a in range(n)]
        if all(gk == 0 for gk in grad):
            break
        accepted = False
        for _ in range(12):
            a = [[jtj[p][q] + (lam if p == q else 0) for q in range(n)] for p in range(n)]
            try:
                step = [row[0] for row in _gauss(a, [[-gk] for gk in grad])]
            except SingularSystemError:
                lam *= 4
                continue
            cand = project([t + s for t, s in zip(x, step)])
            cres = residuals(cand)
            if norm2(cres) < norm2(res):
                x, res = cand, cres
                lam = max(lam / 4, Fraction(1, 1 << 40))
                accepted = True
                break
            lam *= 4
        if not accepted:
            break

    for guess in ([t.limit_denominator(1 << 20) for t in x], x):
        try:
            sigma = profile(guess)
            if any(p <= 0 for row in sigma.choices.values() for p in row.values()):
                continue
            if verify_constrained(g, sigma, xs, ys, eps).ok:
                return sigma
        except (ValueError, ArithmeticError):
            continue
    return None
