import random
from fractions import Fraction

import pytest

from epsnash.evaluate import (
    approx_mc_value,
    approx_mdp_decision,
    expected_payoffs,
    mc_value,
    mdp_best_response,
)
from epsnash.fpnum import rel, round_distribution
from epsnash.generators import (
    CIRCLE,
    DIAMOND,
    SOLVER,
    CnfFormula,
    build_gn,
    build_sat_game,
    gn_exact_ne,
    random_game,
    random_profile,
    sat_ne_from_valuation,
    var_player,
)
from epsnash.model import Game, IncompleteProfileError, StationaryProfile, normalize_rewards

import oracles


def _chain():
    return Game.build(["A"], [("s", "A"), ("t", "terminal")], [("s", "t")], {}, {"t": {"A": 1}}, "s")


def _one_clause():
    phi = CnfFormula.of(3, [[1, 2, -3]])
    return phi, build_sat_game(phi)


def test_chain_value_one():
    g = _chain()
    assert mc_value(g, StationaryProfile.pure({"s": "t"}), "A")["A"] == 1


def test_sat_fragment_third():
    phi, g = _one_clause()
    sigma = sat_ne_from_valuation(phi, {1: True, 2: False, 3: False})
    pay = expected_payoffs(g, sigma)
    assert pay[SOLVER] == 1
    assert pay[var_player(1)] == Fraction(1, 3)
    assert pay[var_player(2)] == 1 and pay[var_player(3)] == 1
    # same number from the dense oracle
    rows = oracles.rows_of(g, oracles.profile_choices(sigma))
    assert oracles.chain_value(g, rows, var_player(1))[g.initial] == Fraction(1, 3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gn_circle_gets_one(n):
    assert expected_payoffs(build_gn(n), gn_exact_ne(n))[CIRCLE] == 1


def test_no_terminal_reached_pays_zero():
    g = Game.build(
        ["A", "B"],
        [("u", "A"), ("w", "B"), ("t", "terminal")],
        [("u", "w"), ("u", "t"), ("w", "u")],
        {},
        {"t": {"A": 3, "B": 2}},
        "u",
    )
    pay = expected_payoffs(g, StationaryProfile.pure({"u": "w", "w": "u"}))
    assert pay.payoffs == {"A": 0, "B": 0}


def test_incomplete_profile_rejected():
    with pytest.raises(IncompleteProfileError):
        mc_value(build_gn(1), StationaryProfile(), CIRCLE)


def test_trivial_best_response():
    g = Game.build(
        ["A"], [("s", "A"), ("z", "terminal"), ("o", "terminal")], [("s", "z"), ("s", "o")], {},
        {"o": {"A": 1}}, "s",
    )
    br = mdp_best_response(g, StationaryProfile(), "A")
    assert br.value == 1 and br.strategy == {"s": "o"}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_diamond_has_no_gain(n):
    g = build_gn(n)
    sigma = gn_exact_ne(n)
    br = mdp_best_response(g, sigma, DIAMOND)
    assert br.value == expected_payoffs(g, sigma)[DIAMOND]
    if n == 1:
        assert br.value == oracles.brute_best_response(g, oracles.profile_choices(sigma), DIAMOND)


def test_sat_variable_best_response_matches_enumeration():
    phi, g = _one_clause()
    sigma = sat_ne_from_valuation(phi, {1: True, 2: True, 3: False})
    for v in (1, 2, 3):
        p = var_player(v)
        br = mdp_best_response(g, sigma, p)
        assert br.value == oracles.brute_best_response(g, oracles.profile_choices(sigma), p)
        assert br.value == expected_payoffs(g, sigma)[p]


def test_best_response_is_realised():
    rng = random.Random(3)
    for _ in range(60):
        g = random_game(rng, n_vertices=rng.randint(2, 6), n_players=2, negative=True)
        sigma = random_profile(rng, g)
        br = mdp_best_response(g, sigma, "P0")
        full = sigma.without(g.owned_by("P0")).updated({v: {w: 1} for v, w in br.strategy.items()})
        assert mc_value(g, full, "P0")["P0"] == br.value


def test_tie_break_deterministic():
    # two equally good exits: the lower-index successor wins, every time
    g = Game.build(
        ["A"], [("s", "A"), ("a", "terminal"), ("b", "terminal")], [("s", "b"), ("s", "a")], {},
        {"a": {"A": 1}, "b": {"A": 1}}, "s",
    )
    picks = {mdp_best_response(g, StationaryProfile(), "A").strategy["s"] for _ in range(5)}
    assert picks == {"a"}


def test_loop_with_only_negative_exit_stays():
    # staying in the cycle forever (payoff 0) beats a -1 exit
    g = Game.build(
        ["A"], [("s", "A"), ("z", "terminal")], [("s", "s"), ("s", "z")], {}, {"z": {"A": -1}}, "s",
    )
    br = mdp_best_response(g, StationaryProfile(), "A")
    assert br.value == 0 and br.strategy == {"s": "s"}


def _random_mdp(rng, negative):
    g = random_game(rng, n_vertices=rng.randint(2, 8), n_players=2, n_terminals=rng.randint(1, 3),
                    max_out=3, negative=negative)
    return g, random_profile(rng, g)


def test_policy_iteration_equals_enumeration():
    rng = random.Random(11)
    checked = 0
    while checked < 150:
        g, sigma = _random_mdp(rng, negative=checked % 3 == 0)
        if len(g.owned_by("P0")) > 6:
            continue
        checked += 1
        got = mdp_best_response(g, sigma, "P0").value
        assert got == oracles.brute_best_response(g, oracles.profile_choices(sigma), "P0")


def test_rewards_are_linear():
    rng = random.Random(5)
    for _ in range(40):
        g = random_game(rng, n_vertices=5, n_players=2, negative=True)
        sigma = random_profile(rng, g)
        a, b = Fraction(3, 2), Fraction(-2, 3)
        mixed = {t: {"P0": a * g.rewards[t]["P0"] + b * g.rewards[t]["P1"], "P1": 0} for t in g.terminals}
        h = Game.build(g.players, g.vertices, g.edges, g.chance, mixed, g.initial)
        pay = expected_payoffs(g, sigma)
        assert mc_value(h, sigma, "P0")["P0"] == a * pay["P0"] + b * pay["P1"]


def test_decision_promise_examples():
    g = _chain()
    sigma = StationaryProfile()
    q = Fraction(1, 4)
    assert approx_mdp_decision(g, sigma, "A", 0, q) == "no"
    zero = Game.build(["A"], [("s", "A"), ("t", "terminal")], [("s", "t")], {}, {}, "s")
    assert approx_mdp_decision(zero, sigma, "A", 1, q) == "yes"
    for method in ("exact", "iterative"):
        assert approx_mdp_decision(g, sigma, "A", Fraction(1, 2), q, method=method) in ("yes", "no")


def test_decision_requires_dyadic_eps():
    with pytest.raises(ValueError):
        approx_mdp_decision(_chain(), StationaryProfile(), "A", 0, Fraction(1, 3))


def test_decision_respects_promise_on_random_mdps():
    rng = random.Random(21)
    for k in range(60):
        g, sigma = _random_mdp(rng, negative=False)
        val = mdp_best_response(g, sigma, "P0").value
        eps = Fraction(1, 2 ** rng.randint(2, 6))
        method = "iterative" if k % 2 else "exact"
        assert approx_mdp_decision(g, sigma, "P0", val - eps, eps, method=method) == "no"
        assert approx_mdp_decision(g, sigma, "P0", val + eps, eps, method=method) == "yes"


def test_approx_value_within_bound():
    rng = random.Random(8)
    for _ in range(40):
        g = random_game(rng, n_vertices=rng.randint(2, 6), n_players=1)
        sigma = random_profile(rng, g)
        tol = Fraction(1, 2 ** rng.randint(3, 12))
        est, bound = approx_mc_value(g, sigma, "P0", tol)
        assert bound <= tol
        assert abs(est - mc_value(g, sigma, "P0")["P0"]) <= bound


def _rounded(g, sigma, ell):
    rows, eta = {}, Fraction(0)
    for v in g.controlled:
        row = sigma.row(v)
        ws = list(row)
        d = round_distribution([row[w] for w in ws], ell)
        rows[v] = dict(zip(ws, d.probabilities))
        eta = max([eta] + [rel(row[w], rows[v][w]) for w in ws])
    return StationaryProfile(rows), eta


def test_perturbation_within_4n_eta():
    # one terminal is the target, everything else pays 0
    rng = random.Random(13)
    for _ in range(120):
        g = random_game(rng, n_vertices=rng.randint(2, 8), n_players=1, n_terminals=2)
        sigma = random_profile(rng, g, pure_share=0.2)
        tilde, eta = _rounded(g, sigma, rng.randint(2, 10))
        n = len(g.vertices)
        for t in g.terminals:
            target = Game.build(g.players, g.vertices, g.edges, g.chance, {t: {"P0": 1}}, g.initial)
            diff = mc_value(target, sigma, "P0")["P0"] - mc_value(target, tilde, "P0")["P0"]
            assert abs(diff) <= 4 * n * eta


def test_rounded_profile_drift_at_huge_precision():
    rng = random.Random(17)
    for _ in range(10):
        g = normalize_rewards(random_game(rng, n_vertices=2, n_players=3, n_terminals=1, chance_share=0.0))
        n = len(g.vertices)
        ell = 1000 * n * n
        sigma = random_profile(rng, g, pure_share=0.0)
        tilde, _ = _rounded(g, sigma, ell)
        a, b = expected_payoffs(g, sigma), expected_payoffs(g, tilde)
        for p in g.players:
            assert abs(a[p] - b[p]) <= 16 * n * n * Fraction(1, 2**ell)
