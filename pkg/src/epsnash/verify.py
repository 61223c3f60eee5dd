"""Checking (approximate, constrained) Nash equilibria of stationary profiles."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Optional

from .etr_export import build_etr, check_assignment, etr_assignment, support_of
from .evaluate import approx_mc_value, approx_mdp_decision, expected_payoffs, mdp_best_response
from .model import CHANCE, GameError, Game, StationaryProfile, format_fraction, validate_profile


@dataclass(frozen=True)
class PlayerReport:
    payoff: Fraction
    best_response_value: Optional[Fraction]
    margin: Optional[Fraction]
    constraint_ok: bool = True
    deviation_ok: bool = True
    best_response: Optional[dict] = field(default=None, compare=False)


@dataclass(frozen=True)
class VerificationReport:
    players: dict[str, PlayerReport]
    epsilon: Fraction
    mode: str = "exact"

    @property
    def is_ne(self) -> bool:
        return all(r.deviation_ok for r in self.players.values())

    @property
    def ok(self) -> bool:
        """Equilibrium and every payoff within its bounds."""
        return self.is_ne and all(r.constraint_ok for r in self.players.values())

    def is_ne_at(self, eps) -> bool:
        """Re-threshold exact margins at another epsilon."""
        if self.mode != "exact":
            raise ValueError("margins are only known exactly in exact mode")
        return all(r.margin <= Fraction(eps) for r in self.players.values())

    @property
    def max_margin(self) -> Optional[Fraction]:
        ms = [r.margin for r in self.players.values() if r.margin is not None]
        return max(ms) if ms else None

    def to_json(self) -> dict:
        def num(x):
            return None if x is None else format_fraction(x)

        return {
            "players": {
                p: {
                    "payoff": num(r.payoff),
                    "best_response": num(r.best_response_value),
                    "margin": num(r.margin),
                    "constraint_ok": r.constraint_ok,
                }
                for p, r in self.players.items()
            },
            "is_ne": self.is_ne,
            "ok": self.ok,
            "epsilon": format_fraction(self.epsilon),
            "mode": self.mode,
        }


def _check_full(g: Game, sigma: StationaryProfile):
    problems = validate_profile(g, sigma)
    if problems:
        raise GameError("; ".join(problems))


def dyadic_floor(x: Fraction) -> Fraction:
    """Largest 2^-k (k >= 0) not above x, for 0 < x."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("need a positive value")
    k = 0
    while Fraction(1, 1 << k) > x:
        k += 1
    return Fraction(1, 1 << k)


def verify_epsilon_ne(
    g: Game, sigma: StationaryProfile, eps=0, *, mode: str = "exact",
    xs: Optional[Mapping] = None, ys: Optional[Mapping] = None,
) -> VerificationReport:
    """Per-player payoff, best-response value and margin.

    ``mode="promise"`` replaces the exact comparison by the thresholded
    test: estimate the payoff to eps/8, then ask whether the best response
    clears estimate + 3eps/4 with tolerance eps/8.
    """
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    _check_full(g, sigma)
    reports = {}
    if mode == "exact":
        pay = expected_payoffs(g, sigma).payoffs
        for i in g.players:
            br = mdp_best_response(g, sigma, i)
            margin = br.value - pay[i]
            ok = True
            if xs is not None or ys is not None:
                ok = (xs is None or xs[i] - eps <= pay[i]) and (ys is None or pay[i] <= ys[i] + eps)
            reports[i] = PlayerReport(pay[i], br.value, margin, ok, margin <= eps, br.strategy)
    elif mode == "promise":
        if eps <= 0:
            raise ValueError("promise mode needs a positive epsilon")
        tol = dyadic_floor(eps / 8)
        for i in g.players:
            est, _ = approx_mc_value(g, sigma, i, tol)
            answer = approx_mdp_decision(g, sigma, i, est + 3 * eps / 4, tol)
            ok = True
            if xs is not None or ys is not None:
                ok = (xs is None or xs[i] - eps / 2 <= est) and (ys is None or est <= ys[i] + eps / 2)
            reports[i] = PlayerReport(est, None, None, ok, answer == "yes")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return VerificationReport(reports, eps, mode)


def verify_constrained(
    g: Game, sigma: StationaryProfile, xs: Mapping, ys: Mapping, eps=0, *, mode: str = "exact"
) -> VerificationReport:
    missing = [i for i in g.players if i not in xs or i not in ys]
    if missing:
        raise GameError(f"missing threshold for player {missing[0]!r}")
    xs = {i: Fraction(xs[i]) for i in g.players}
    ys = {i: Fraction(ys[i]) for i in g.players}
    return verify_epsilon_ne(g, sigma, eps, mode=mode, xs=xs, ys=ys)


class EtrViolation(NamedTuple):
    constraint: object
    detail: str


def check_etr_constraints(g: Game, sigma: StationaryProfile, xs=None, ys=None) -> list[EtrViolation]:
    """Evaluate constraints 1-9 (and payoff bounds) at the values ``sigma`` induces.

    The support is read off ``sigma``.  A row given for a chance vertex is
    used as that vertex's probabilities, so it is caught by constraint 5
    when it differs from the game.
    """
    chance_rows = [v for v in sigma.choices if g.owner.get(v) == CHANCE]
    problems = validate_profile(g, sigma.without(chance_rows))
    if problems:
        return [EtrViolation(4, p) for p in problems]
    for v in chance_rows:
        extra = [w for w in sigma.row(v) if w not in g.successors[v]]
        if extra:
            return [EtrViolation(3, f"row {v!r} puts weight on non-successors {extra}")]
    try:
        system = build_etr(g, xs, ys, support_of(g, sigma, override_chance=True))
    except ValueError as exc:
        return [EtrViolation(1, str(exc))]
    values = etr_assignment(g, sigma)
    out = []
    for c in check_assignment(system, values):
        if c.tag == 10:
            continue
        out.append(EtrViolation(c.tag, c.label))
    return out


def deviation_free_everywhere(g: Game, sigma: StationaryProfile) -> bool:
    """No player gains by deviating, whatever vertex the play starts from."""
    _check_full(g, sigma)
    table = expected_payoffs(g, sigma).table
    for i in g.players:
        br = mdp_best_response(g, sigma, i)
        if any(br.values[v] != table[i][v] for v in g.vertex_ids):
            return False
    return True
