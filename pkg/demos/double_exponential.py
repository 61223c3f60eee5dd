"""Tiny probabilities in G^n: an equilibrium whose patience doubles exponentially.

Run with ``python demos/double_exponential.py``.
"""
from fractions import Fraction

from epsnash import build_gn, gn_exact_ne, gn_epsilon_ne, verify_epsilon_ne
from epsnash.generators import CIRCLE, gn_cutoff

# Build the family and look at the probability circle puts on t_n.
for n in range(1, 5):
    g = build_gn(n)
    sigma = gn_exact_ne(n)
    alpha = sigma.row(f"r_{n}")[f"t_{n}"]
    rep = verify_epsilon_ne(g, sigma, 0)
    print(f"n={n}: {len(g.vertices):3d} vertices, alpha_n = {alpha}, "
          f"largest margin {rep.max_margin}, circle gets {rep.players[CIRCLE].payoff}")

# Allowing a little slack lets the tail of the chain be switched off.
n, eps = 3, Fraction(1, 2**10)
sigma = gn_epsilon_ne(n, eps)
rep = verify_epsilon_ne(build_gn(n), sigma, eps)
print(f"\ncutoff I = {gn_cutoff(n, eps)} for eps = {eps}")
for p, r in rep.players.items():
    print(f"  {p:<9} payoff {str(r.payoff):>12}  margin {r.margin}")
print("is an eps-equilibrium:", rep.is_ne)

# The smallest probability in the slack profile has far fewer bits.
smallest = min(Fraction(p) for row in sigma.choices.values() for p in row.values() if p)
print("smallest positive probability:", smallest)
