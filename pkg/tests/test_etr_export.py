from fractions import Fraction
from pathlib import Path

import pytest

from epsnash.etr_export import (
    EtrSystem,
    MissingVariableError,
    build_etr,
    check_assignment,
    degree,
    describe,
    emit_smtlib,
    etr_assignment,
    gvar,
    parse_smtlib,
    pvar,
    rvar,
    support_of,
)
from epsnash.generators import CIRCLE, GN_PLAYERS, build_gn, gn_exact_ne
from epsnash.model import Game, StationaryProfile

import oracles

GOLDEN = Path(__file__).parent / "data" / "g1_etr.smt2"


def _g1():
    g = build_gn(1)
    sigma = gn_exact_ne(1)
    return g, sigma, build_etr(g, support=support_of(g, sigma))


def test_g1_satisfied_by_known_values():
    g, sigma, sys = _g1()
    a = etr_assignment(g, sigma)
    assert a[pvar("r_1", "t_1")] == Fraction(1, 4)
    assert check_assignment(sys, a) == []


def test_degree_at_most_two():
    _, _, sys = _g1()
    assert max(max(degree(c.lhs), degree(c.rhs)) for c in sys.constraints) <= 2


@pytest.mark.parametrize("n", [1, 2])
def test_census_matches_counting_oracle(n):
    g = build_gn(n)
    S = support_of(g, gn_exact_ne(n))
    census = build_etr(g, support=S).census()
    variables, counts = oracles.etr_census(g, S)
    assert census["variables"] == variables
    assert census["constraints"] == counts
    # O(m |players|)
    assert variables <= (len(g.players) + 2) * (len(g.edges) + len(g.vertices))


def test_g1_census_numbers():
    _, _, sys = _g1()
    assert sys.census() == {
        "variables": 180,
        "constraints": {1: 21, 2: 21, 3: 8, 4: 13, 5: 3, 6: 55, 8: 75, 9: 26, 10: 21},
    }


def test_contradictory_thresholds():
    g = build_gn(1)
    xs = {p: 0 for p in GN_PLAYERS}
    ys = {p: 2 for p in GN_PLAYERS}
    xs[CIRCLE], ys[CIRCLE] = Fraction(3, 4), Fraction(1, 2)
    sys = build_etr(g, xs, ys, support_of(g, gn_exact_ne(1)))
    bounds = [c for c in sys.constraints if c.tag == "threshold" and CIRCLE in c.label]
    assert [c.op for c in bounds] == [">=", "<="]
    assert bounds[0].rhs[()] > bounds[1].rhs[()]


def test_empty_support_rejected():
    g = build_gn(1)
    S = support_of(g, gn_exact_ne(1))
    S = {e for e in S if e[0] != "r_1"}
    with pytest.raises(ValueError, match="'r_1'"):
        build_etr(g, support=S)
    with pytest.raises(ValueError, match="non-edges"):
        build_etr(g, support={("s0", "r_1")})


def test_violation_examples():
    g, sigma, sys = _g1()
    a = etr_assignment(g, sigma)
    zeroed = dict(a, **{pvar("r_1", "t_1"): Fraction(0)})
    assert 1 in {c.tag for c in check_assignment(sys, zeroed)}
    skewed = dict(a, **{gvar("r_1", "t_1"): Fraction(3)})
    assert [c.tag for c in check_assignment(sys, skewed)] == [10]


def test_missing_variable():
    _, _, sys = _g1()
    with pytest.raises(MissingVariableError, match="no value for"):
        check_assignment(sys, {})


def test_empty_system_document():
    assert emit_smtlib(EtrSystem()) == "(set-logic QF_NRA)\n(check-sat)\n"


def test_emission_matches_golden():
    _, _, sys = _g1()
    assert emit_smtlib(sys) == GOLDEN.read_text()
    assert emit_smtlib(sys) == emit_smtlib(sys)


def test_round_trip_agrees():
    g, sigma, sys = _g1()
    back = parse_smtlib(emit_smtlib(sys))
    assert back.variables == sys.variables
    assert [(c.tag, c.lhs, c.op, c.rhs, c.label) for c in back.constraints] == [
        (c.tag, c.lhs, c.op, c.rhs, c.label) for c in sys.constraints
    ]
    a = etr_assignment(g, sigma)
    bad = dict(a, **{pvar("c_1", "d_1"): Fraction(1, 3), pvar("c_1", "g_1"): Fraction(2, 3)})
    assert [describe(c) for c in check_assignment(back, bad)] == [describe(c) for c in check_assignment(sys, bad)]


def test_negative_coefficients_round_trip():
    g = Game.build(["A"], [("s", "A"), ("z", "terminal")], [("s", "z")], {}, {"z": {"A": Fraction(-3, 2)}}, "s")
    sys = build_etr(g, {"A": Fraction(-2)}, {"A": 0}, support={("s", "z")})
    text = emit_smtlib(sys)
    assert "(- (/ 3 2))" in text
    a = etr_assignment(g, StationaryProfile.pure({"s": "z"}))
    assert a[rvar("A", "s")] == Fraction(-3, 2)
    assert check_assignment(parse_smtlib(text), a) == []


def test_golden_parses_externally():
    z3 = pytest.importorskip("z3")
    solver = z3.Solver()
    solver.from_string(GOLDEN.read_text())
    assert len(solver.assertions()) == len(_g1()[2].constraints)


def test_external_model_checks_out():
    z3 = pytest.importorskip("z3")
    g, _, sys = _g1()
    solver = z3.Solver()
    solver.set("timeout", 60000)
    solver.from_string(emit_smtlib(sys))
    if solver.check() != z3.sat:
        pytest.skip("solver gave no model")
    model = solver.model()
    a = {}
    for d in model.decls():
        if d.arity():
            continue  # the solver's own interpretation of division
        v = model[d]
        if not z3.is_rational_value(v):
            pytest.skip("solver model is irrational")
        a[d.name()] = Fraction(v.numerator_as_long(), v.denominator_as_long())
    assert check_assignment(sys, a) == []
    # inverses come back exact
    for v, w in g.edges:
        if gvar(v, w) in a:
            assert a[gvar(v, w)] * a[pvar(v, w)] == 1
