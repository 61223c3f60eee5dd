"""From a 3-CNF formula to a game where Solver wins iff the formula is satisfiable."""
from fractions import Fraction

from epsnash import SearchConfig, search_constrained_ne, verify_epsilon_ne
from epsnash.evaluate import mc_value
from epsnash.generators import (
    SOLVER, build_sat_game, minimal_profit_instance, parse_dimacs, sat_epsilon, sat_ne_from_valuation, var_player,
)

phi = parse_dimacs("""c two clauses
p cnf 3 2
1 -2 3 0
-1 2 3 0
""")
g = build_sat_game(phi)
print(f"{len(phi.clauses)} clauses -> {len(g.vertices)} vertices, players {', '.join(g.players)}")

# A satisfying valuation gives a pure equilibrium where Solver never loses.
sigma = sat_ne_from_valuation(phi, {1: True, 2: True, 3: False})
rep = verify_epsilon_ne(g, sigma, 0)
print("equilibrium:", rep.is_ne, " Solver payoff:", rep.players[SOLVER].payoff)

# Pure enumeration finds one too, without being told the valuation.
xs = {p: 0 for p in g.players}
ys = {p: 1 for p in g.players}
xs[SOLVER] = 1
eps = sat_epsilon(phi)
res = search_constrained_ne(g, xs, ys, eps, SearchConfig(mode="pure-enumeration", epsilon=eps))
print(f"search found a profile after {res.tried} candidates:", res.found)

# How much does a variable player gain by sending play to t_Solver, in
# the least favourable case allowed by Solver's payoff bound?
print("\n m   gain            2^-3m")
for m in range(1, 6):
    qmax = Fraction(3 * 2**m - 2, 2 * 2 ** (3 * m) - 1)
    g_m, base, dev = minimal_profit_instance(m, qmax)
    x1 = var_player(1)
    gain = mc_value(g_m, dev, x1)[x1] - mc_value(g_m, base, x1)[x1]
    print(f" {m}   {float(gain):.6e}    {2.0 ** (-3 * m):.6e}")
