import random
from fractions import Fraction

import pytest

from epsnash.generators import (
    CIRCLE,
    GN_PLAYERS,
    SOLVER,
    CnfFormula,
    build_gn,
    build_sat_game,
    gn_exact_ne,
    random_game,
    sat_epsilon,
)
from epsnash.model import Game, StationaryProfile
from epsnash.search import SearchConfig, search_constrained_ne, support_newton, supports
from epsnash.verify import verify_constrained


def _sat_bounds(g):
    xs = {p: 0 for p in g.players}
    ys = {p: 1 for p in g.players}
    xs[SOLVER] = 1
    return xs, ys


def _gn_bounds(n):
    xs = {p: 0 for p in GN_PLAYERS}
    ys = {p: max(n, 2) for p in GN_PLAYERS}
    xs[CIRCLE] = ys[CIRCLE] = 1
    return xs, ys


def test_pure_enumeration_on_sat_game():
    phi = CnfFormula.of(3, [[1, 2, -3], [-1, 2, 3]])
    g = build_sat_game(phi)
    xs, ys = _sat_bounds(g)
    eps = sat_epsilon(phi)
    res = search_constrained_ne(g, xs, ys, eps, SearchConfig(mode="pure-enumeration", epsilon=eps))
    assert res.found
    assert res.report.players[SOLVER].payoff == 1
    assert all(len(row) == 1 for row in res.profile.choices.values())
    assert verify_constrained(g, res.profile, xs, ys, eps).ok


def test_candidate_file_mode():
    g = build_gn(3)
    xs, ys = _gn_bounds(3)
    cfg = SearchConfig(mode="candidate-file", candidates=[gn_exact_ne(3)])
    res = search_constrained_ne(g, xs, ys, Fraction(1, 1024), cfg)
    assert res.found and res.tried == 1


def test_exhausted_with_margin():
    g = build_gn(1)
    xs, ys = _gn_bounds(1)
    wrong = gn_exact_ne(1).updated({"r_1": {"t_1'": Fraction(1)}})
    cfg = SearchConfig(mode="candidate-file", budget=1, candidates=[wrong, gn_exact_ne(1)])
    res = search_constrained_ne(g, xs, ys, Fraction(1, 64), cfg)
    assert not res.found and res.tried == 1
    assert res.best_margin > Fraction(1, 64)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(mode="guess")
    with pytest.raises(ValueError):
        SearchConfig(budget=0)
    with pytest.raises(ValueError):
        SearchConfig(epsilon=Fraction(0))


def test_newton_recovers_g1():
    g = build_gn(1)
    xs, ys = _gn_bounds(1)
    S = {v: tuple(gn_exact_ne(1).row(v)) for v in g.controlled}
    tol = Fraction(1, 2**40)
    sigma = support_newton(g, xs, ys, S, tol)
    assert sigma is not None
    assert sigma.row("r_1")["t_1"] == Fraction(1, 4)
    assert sigma.row("c_1")["d_1"] == Fraction(1, 2)
    assert verify_constrained(g, sigma, xs, ys, tol).ok


def test_newton_pure_support_is_direct():
    g = Game.build(["A"], [("s", "A"), ("z", "terminal"), ("o", "terminal")], [("s", "z"), ("s", "o")], {},
                   {"o": {"A": 1}}, "s")
    assert support_newton(g, {"A": 0}, {"A": 1}, {"s": ("o",)}, Fraction(1, 8)) == StationaryProfile.pure({"s": "o"})
    assert support_newton(g, {"A": 0}, {"A": 1}, {"s": ("z",)}, Fraction(1, 8)) is None


def test_newton_rejects_bad_support():
    g = build_gn(1)
    xs, ys = _gn_bounds(1)
    with pytest.raises(ValueError, match="nonempty"):
        support_newton(g, xs, ys, {}, Fraction(1, 8))


def test_support_order():
    g = build_gn(1)
    first = next(supports(g))
    assert all(len(s) == 1 for s in first.values())
    sizes = []
    for k, S in enumerate(supports(g)):
        sizes.append(sum(map(len, S.values())))
        if k > 200:
            break
    assert sizes == sorted(sizes)


def _random_small(rng):
    return random_game(rng, n_vertices=4, n_players=2, max_out=2)


@pytest.mark.parametrize("mode", ["pure-enumeration", "support-newton", "random-restart"])
def test_found_profiles_verify_and_mutation_flips(mode):
    rng = random.Random(5)
    eps = Fraction(1, 16)
    hits = 0
    for _ in range(25):
        g = _random_small(rng)
        xs = {p: -10 for p in g.players}
        ys = {p: 10 for p in g.players}
        res = search_constrained_ne(g, xs, ys, eps, SearchConfig(mode=mode, budget=60, epsilon=eps))
        if not res.found:
            continue
        hits += 1
        assert verify_constrained(g, res.profile, xs, ys, eps).ok
        # squeezing the bounds around the found payoff must flip the verdict
        p = g.players[0]
        val = res.report.players[p].payoff
        tight = dict(xs, **{p: val + 2 * eps})
        assert not verify_constrained(g, res.profile, tight, ys, eps).ok
    assert hits


def test_infeasible_support_never_false_positive():
    # whatever newton returns on a fixed support must be an equilibrium
    rng = random.Random(8)
    eps = Fraction(1, 16)
    for _ in range(20):
        g = _random_small(rng)
        xs = {p: -10 for p in g.players}
        ys = {p: 10 for p in g.players}
        for k, S in enumerate(supports(g)):
            if k >= 6:
                break
            sigma = support_newton(g, xs, ys, S, eps / 8, 20, eps=eps)
            if sigma is not None:
                assert verify_constrained(g, sigma, xs, ys, eps).is_ne


def test_search_is_deterministic():
    rng = random.Random(3)
    g = random_game(rng, n_vertices=5, n_players=2)
    xs = {p: 0 for p in g.players}
    ys = {p: 4 for p in g.players}
    cfg = SearchConfig(mode="random-restart", budget=30, seed=42)
    a = search_constrained_ne(g, xs, ys, None, cfg)
    b = search_constrained_ne(g, xs, ys, None, cfg)
    assert (a.found, a.tried, a.best_margin, a.profile) == (b.found, b.tried, b.best_margin, b.profile)


def test_pure_supports_agree_with_enumeration():
    rng = random.Random(19)
    eps = Fraction(1, 16)
    for _ in range(20):
        g = _random_small(rng)
        xs = {p: -10 for p in g.players}
        ys = {p: 10 for p in g.players}
        for S in supports(g):
            if any(len(s) > 1 for s in S.values()):
                break
            pure = StationaryProfile.pure({v: s[0] for v, s in S.items()})
            expected = verify_constrained(g, pure, xs, ys, eps).ok
            assert (support_newton(g, xs, ys, S, eps / 8, eps=eps) is not None) == expected
