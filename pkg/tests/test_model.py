import json
import random
from fractions import Fraction

import pytest

from epsnash.generators import build_gn, gn_exact_ne, random_game, random_profile
from epsnash.model import (
    Game,
    GameError,
    IncompleteProfileError,
    StationaryProfile,
    bit_size,
    normalize_rewards,
    parse_fraction,
    parse_game,
    parse_profile,
    reachable_support,
    serialize_game,
    serialize_profile,
    validate_game,
    validate_profile,
)
from epsnash.fpnum import FloatL

import oracles

COIN = {
    "players": ["A"],
    "vertices": [
        {"id": "s", "owner": "chance"},
        {"id": "h", "owner": "terminal"},
        {"id": "t", "owner": "terminal"},
    ],
    "edges": [
        {"from": "s", "to": "h", "prob": "1/2"},
        {"from": "s", "to": "t", "prob": "1/2"},
    ],
    "rewards": {"h": {"A": "1"}},
    "initial": "s",
}


def test_parse_minimal_chain():
    g = parse_game(json.dumps(COIN))
    assert len(g.vertices) == 3
    assert g.chance_row("s") == {"h": Fraction(1, 2), "t": Fraction(1, 2)}
    # omitted rewards default to zero
    assert g.rewards["t"] == {"A": 0}


def test_round_trip_gn1():
    g = build_gn(1)
    assert parse_game(serialize_game(g)) == g


def test_chance_row_sum_reported():
    doc = json.loads(json.dumps(COIN))
    doc["edges"][0]["prob"] = "1/3"
    doc["edges"][1]["prob"] = "1/3"
    with pytest.raises(GameError, match="chance row 's' sums to 2/3"):
        parse_game(json.dumps(doc))


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d["vertices"].append({"id": "s", "owner": "A"}), "duplicate vertex id"),
        (lambda d: d["edges"].append({"from": "s", "to": "nowhere", "prob": "0"}), "edges[2]: unknown vertex"),
        (lambda d: d["edges"][0].update(prob="0.5"), "edges[0].prob"),
        (lambda d: d["edges"][0].pop("prob"), "'prob' must be given iff"),
        (lambda d: d.pop("initial"), "missing field 'initial'"),
    ],
)
def test_parse_errors_name_the_field(mutate, fragment):
    doc = json.loads(json.dumps(COIN))
    mutate(doc)
    with pytest.raises(GameError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        parse_game(json.dumps(doc))


def test_syntax_error_has_line():
    with pytest.raises(GameError, match="line 2"):
        parse_game('{\n "players": [,]}')


def test_validate_generator_output():
    assert validate_game(build_gn(2)) == []


def test_terminal_with_edge():
    g = Game.build(["A"], [("t", "terminal"), ("u", "terminal")], [("t", "u")], {}, {}, "t")
    assert validate_game(g) == ["terminal 't' has out-degree 1"]


def test_sink_without_reward_gives_two_violations():
    g = Game.build(["A"], [("v", "A"), ("t", "terminal"), ("x", "A")], [("v", "t")], {}, {}, "v")
    problems = validate_game(g)
    assert len(problems) == 2
    assert "out-degree 0" in problems[0]
    assert "instead of being a terminal" in problems[1]


def test_reserved_player_name():
    g = Game.build(["chance"], [("t", "terminal")], [], {}, {}, "t")
    assert any("reserved" in p for p in validate_game(g))


def test_parse_fraction_rejects_decimals():
    assert parse_fraction("3/6") == Fraction(1, 2)
    assert parse_fraction(-2) == -2
    for bad in ("0.5", "1e3", True, 1.0, "", "1/0"):
        with pytest.raises(GameError):
            parse_fraction(bad)


def test_bit_size_and_normalisation():
    g = build_gn(2)
    assert bit_size(g) > 0
    h = normalize_rewards(g)
    assert max(abs(x) for row in h.rewards.values() for x in row.values()) == 1
    # off by default: the generator keeps raw rewards
    assert max(x for row in g.rewards.values() for x in row.values()) == 2


def _loop_game():
    # v -> w -> v with an unused exit from v
    return Game.build(
        ["A"],
        [("v", "A"), ("w", "chance"), ("t", "terminal")],
        [("v", "w"), ("v", "t"), ("w", "v")],
        {("w", "v"): 1},
        {"t": {"A": 1}},
        "v",
    )


def test_closed_cycle_excluded():
    g = _loop_game()
    sigma = StationaryProfile.pure({"v": "w"})
    assert reachable_support(g, sigma) == {"t"}


def test_support_gn1_everything():
    g = build_gn(1)
    sigma = gn_exact_ne(1)
    got = reachable_support(g, sigma)
    assert got == set(g.vertex_ids)
    assert got == oracles.can_reach_terminal(g, oracles.rows_of(g, oracles.profile_choices(sigma)))


def test_single_edge_support():
    g = Game.build(["A"], [("v", "A"), ("t", "terminal")], [("v", "t")], {}, {}, "v")
    assert reachable_support(g, StationaryProfile.pure({"v": "t"})) == {"v", "t"}


def test_incomplete_profile():
    with pytest.raises(IncompleteProfileError):
        reachable_support(build_gn(1), StationaryProfile())


def test_support_monotone_under_enlargement():
    rng = random.Random(7)
    for _ in range(100):
        g = random_game(rng, n_vertices=rng.randint(2, 7), n_players=2)
        sigma = random_profile(rng, g, pure_share=0.8)
        base = reachable_support(g, sigma)
        v = rng.choice(g.controlled) if g.controlled else None
        if v is None:
            continue
        succ = g.successors[v]
        wider = sigma.updated({v: {w: Fraction(1, len(succ)) for w in succ}})
        assert base <= reachable_support(g, wider)


def test_full_support_gn_reaches_everything():
    for n in (1, 2, 3):
        g = build_gn(n)
        sigma = StationaryProfile({v: {w: Fraction(1, 2) for w in g.successors[v]} for v in g.controlled})
        assert reachable_support(g, sigma) == set(g.vertex_ids)


def test_profile_round_trip_with_floats():
    sigma = StationaryProfile({"r_1": {"t_1": FloatL(2, -3, 2), "t_1'": FloatL(3, -2, 2)}})
    back = parse_profile(serialize_profile(sigma))
    assert back == sigma
    assert back.row("r_1") == {"t_1": Fraction(1, 4), "t_1'": Fraction(3, 4)}


def test_validate_profile_messages():
    g = build_gn(1)
    sigma = gn_exact_ne(1)
    assert validate_profile(g, sigma) == []
    bad = sigma.updated({"r_1": {"t_1": Fraction(1, 2)}})
    assert any("sums to 1/2" in p for p in validate_profile(g, bad))
    bad = sigma.updated({"r_1": {"a_1": Fraction(1)}})
    assert any("non-successors" in p for p in validate_profile(g, bad))
    assert any("no row" in p for p in validate_profile(g, sigma.without(["r_1"])))
