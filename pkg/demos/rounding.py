"""Rounding a profile to short floats barely moves anybody's payoff."""
import random
from fractions import Fraction

from epsnash import expected_payoffs, round_distribution
from epsnash.fpnum import rel
from epsnash.generators import random_game, random_profile
from epsnash.model import StationaryProfile

rng = random.Random(6)
g = random_game(rng, n_vertices=6, n_players=3, n_terminals=3)
sigma = random_profile(rng, g, pure_share=0.0)
exact = expected_payoffs(g, sigma)
n = len(g.vertices)

print(" ell   max rel dist     max payoff change   4n * rel * max|r|")
for ell in (4, 8, 16, 32, 64):
    rows, eta = {}, Fraction(0)
    for v in g.controlled:
        row = sigma.row(v)
        keys = list(row)
        d = round_distribution([row[w] for w in keys], ell)
        rows[v] = dict(zip(keys, d.probabilities))
        eta = max([eta] + [rel(row[w], rows[v][w]) for w in keys])
    rounded = expected_payoffs(g, StationaryProfile(rows))
    drift = max(abs(exact[p] - rounded[p]) for p in g.players)
    scale = max(abs(x) for r in g.rewards.values() for x in r.values())
    print(f" {ell:3d}   {float(eta):.3e}        {float(drift):.3e}           {float(4 * n * eta * scale):.3e}")
