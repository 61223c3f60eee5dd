"""Game families with known equilibria, plus random instances for testing.

Two explicit families are built here:

* ``build_gn(n)``: five players chained through n multiplication gadgets,
  whose only stationary equilibria with ◯ getting 1 use probabilities
  1/2^(2^n).
* ``build_sat_game(phi)``: a Solver player and one player per variable of
  a 3-CNF formula; Solver can secure payoff 1 in an equilibrium iff the
  formula is satisfiable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import CHANCE, TERMINAL, Game, StationaryProfile

CIRCLE, SQUARE, TRIANGLE, DIAMOND, PENTAGON = "circle", "square", "triangle", "diamond", "pentagon"
GN_PLAYERS = (CIRCLE, SQUARE, TRIANGLE, DIAMOND, PENTAGON)

HALF = Fraction(1, 2)


# -- the G^n family -------------------------------------------------------------

def _r(i):
    return f"r_{i}"


def _t(i):
    return f"t_{i}"


def _tp(i):
    return f"t_{i}'"


def build_gn(n: int) -> Game:
    if not isinstance(n, int) or n < 1:
        raise ValueError("n must be a positive integer")
    vertices = [("s0", CHANCE)]
    edges = []
    chance = {}
    rewards: dict[str, dict[str, Fraction]] = {}

    for i in range(1, n + 1):
        edges.append(("s0", f"a_{i}"))
        chance[("s0", f"a_{i}")] = Fraction(1, n)

    for i in range(1, n + 1):
        own = {
            "a": TRIANGLE, "b": PENTAGON, "c": DIAMOND, "d": SQUARE, "e": TRIANGLE,
            "f": CIRCLE, "g": SQUARE, "h": TRIANGLE, "j": CIRCLE, "k": DIAMOND,
            "l": PENTAGON, "m": CIRCLE,
        }
        for name, owner in own.items():
            vertices.append((f"{name}_{i}", owner))
        t = [f"t_{i}_{k}" for k in range(7)]
        vertices.extend((x, TERMINAL) for x in t)
        wiring = [
            ("a", f"b_{i}", t[0]),
            ("b", f"c_{i}", t[1]),
            ("c", f"d_{i}", f"g_{i}"),
            ("d", _r(i), f"e_{i}"),
            ("e", _r(i), f"f_{i}"),
            ("f", t[2], t[3]),
            ("g", f"h_{i}", _r(i - 1)),
            ("h", f"j_{i}", _r(i - 1)),
            ("j", f"k_{i}", t[6]),
            ("k", f"l_{i}", _r(i - 1)),
            ("l", f"m_{i}", _r(i - 1)),
            ("m", t[4], t[5]),
        ]
        for name, x, y in wiring:
            edges.append((f"{name}_{i}", x))
            edges.append((f"{name}_{i}", y))
        k = n - i
        rewards[t[0]] = {TRIANGLE: k + Fraction(1, 8)}
        rewards[t[1]] = {PENTAGON: Fraction(11, 8)}
        rewards[t[2]] = {CIRCLE: 1, SQUARE: 1, TRIANGLE: k - 1, DIAMOND: 1, PENTAGON: 2}
        rewards[t[3]] = {CIRCLE: 1, TRIANGLE: k, PENTAGON: 2}
        rewards[t[4]] = {CIRCLE: 1, SQUARE: 1, TRIANGLE: k, DIAMOND: 1}
        rewards[t[5]] = {CIRCLE: 1, SQUARE: 1, TRIANGLE: k, PENTAGON: 1}
        rewards[t[6]] = {CIRCLE: 1, TRIANGLE: k + 1, PENTAGON: 1}

    for i in range(n + 1):
        vertices.append((_r(i), CHANCE if i == 0 else CIRCLE))
        vertices.append((_t(i), TERMINAL))
        vertices.append((_tp(i), TERMINAL))
        edges.append((_r(i), _t(i)))
        edges.append((_r(i), _tp(i)))
        if i == 0:
            chance[(_r(0), _t(0))] = HALF
            chance[(_r(0), _tp(0))] = HALF
        rewards[_t(i)] = {SQUARE: 1, TRIANGLE: n - i - 1, DIAMOND: 1}
        rewards[_tp(i)] = {TRIANGLE: n - i, PENTAGON: 1}

    return Game.build(GN_PLAYERS, vertices, edges, chance, rewards, "s0")


def gn_alpha(i: int) -> Fraction:
    """1/2^(2^i)."""
    return Fraction(1, 1 << (1 << i))


def _split(v, first, second, p):
    p = Fraction(p)
    if p == 0:
        return {v: {second: Fraction(1)}}
    if p == 1:
        return {v: {first: Fraction(1)}}
    return {v: {first: p, second: 1 - p}}


def _gn_profile(n: int, theta) -> StationaryProfile:
    rows: dict[str, dict[str, Fraction]] = {}
    one = Fraction(1)
    for i in range(1, n + 1):
        rows.update(_split(_r(i), _t(i), _tp(i), theta(i)))
        rows[f"a_{i}"] = {f"b_{i}": one}
        rows[f"b_{i}"] = {f"c_{i}": one}
        rows[f"c_{i}"] = {f"d_{i}": HALF, f"g_{i}": HALF}
        rows[f"d_{i}"] = {f"e_{i}": one}
        rows[f"e_{i}"] = {f"f_{i}": one}
        rows.update(_split(f"f_{i}", f"t_{i}_2", f"t_{i}_3", theta(i)))
        rows[f"g_{i}"] = {f"h_{i}": one}
        rows[f"h_{i}"] = {f"j_{i}": one}
        rows.update(_split(f"j_{i}", f"k_{i}", f"t_{i}_6", theta(i - 1)))
        rows[f"k_{i}"] = {f"l_{i}": one}
        rows[f"l_{i}"] = {f"m_{i}": one}
        rows.update(_split(f"m_{i}", f"t_{i}_4", f"t_{i}_5", theta(i - 1)))
    return StationaryProfile(rows)


def gn_exact_ne(n: int) -> StationaryProfile:
    """The stationary equilibrium with alpha_i = 1/2^(2^i) and beta_i = 1/2."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return _gn_profile(n, gn_alpha)


def gn_cutoff(n: int, eps) -> int:
    """Smallest I with 1/(2^(2^I + 1) n) <= eps."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    big = 0
    while Fraction(1, (1 << ((1 << big) + 1)) * n) > eps:
        big += 1
    return big


def gn_theta(n: int, eps):
    """theta_i = 1/2^(2^i) below the cutoff and 0 from the cutoff on."""
    cut = gn_cutoff(n, eps)
    return lambda i: gn_alpha(i) if i < cut else Fraction(0)


def gn_epsilon_ne(n: int, eps) -> StationaryProfile:
    """An eps-equilibrium of G^n whose probabilities have few bits."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return _gn_profile(n, gn_theta(n, eps))


# -- 3-CNF formulas and the SAT game ----------------------------------------

@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[tuple[int, bool], ...], ...]

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("variable count must be nonnegative")
        for k, clause in enumerate(self.clauses, 1):
            if len(clause) != 3:
                raise ValueError(f"clause {k} has {len(clause)} literals, expected 3")
            for var, _ in clause:
                if not 1 <= var <= self.num_vars:
                    raise ValueError(f"clause {k}: variable {var} out of range 1..{self.num_vars}")

    @classmethod
    def of(cls, num_vars: int, clauses: Sequence[Sequence[int]]) -> "CnfFormula":
        """From DIMACS-style signed integers, e.g. ``[[1, 2, -3]]``."""
        return cls(num_vars, tuple(tuple((abs(x), x > 0) for x in c) for c in clauses))

    def satisfied_by(self, nu: Mapping[int, bool]) -> bool:
        return all(any(nu.get(v, False) == s for v, s in c) for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for c in self.clauses:
            lines.append(" ".join(str(v if s else -v) for v, s in c) + " 0")
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    header = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {lineno}: malformed header {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ValueError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            x = int(tok)
            if x == 0:
                clauses.append(current)
                current = []
            else:
                current.append(x)
    if current:
        clauses.append(current)
    if header is None:
        raise ValueError("missing 'p cnf' header")
    nvars, ncl = header
    for k, c in enumerate(clauses, 1):
        if len(c) != 3:
            raise ValueError(f"clause {k} ({' '.join(map(str, c))}) has {len(c)} literals, expected 3")
        for x in c:
            if abs(x) > nvars:
                raise ValueError(f"clause {k}: variable {abs(x)} exceeds declared count {nvars}")
    if len(clauses) != ncl:
        raise ValueError(f"header declares {ncl} clauses but clause {len(clauses)} is the last one found")
    return CnfFormula.of(nvars, clauses)


SOLVER = "Solver"
T_SOLVER = "t_Solver"
T_ALL = "t"


def var_player(v: int) -> str:
    return f"x{v}"


def literal_vertex(i: int, j: int, var: int, sign: bool) -> str:
    """Vertex for position j of clause i (both 1-based)."""
    return f"C{i}[{j}]:{'' if sign else '~'}x{var}"


def build_sat_game(phi: CnfFormula) -> Game:
    m = len(phi.clauses)
    if m == 0:
        raise ValueError("formula has no clauses")
    players = (SOLVER,) + tuple(var_player(v) for v in range(1, phi.num_vars + 1))
    vertices = []
    edges = []
    chance = {}

    def nxt(i):
        return f"C{i + 1}" if i < m else "s"

    for i in range(1, m + 1):
        vertices.append((f"C{i}", SOLVER))
    for i, clause in enumerate(phi.clauses, 1):
        for j, (var, sign) in enumerate(clause, 1):
            lv = literal_vertex(i, j, var, sign)
            edges.append((f"C{i}", lv))
            if sign:
                vertices.append((lv, CHANCE))
                edges += [(lv, f"t_x{var}"), (lv, nxt(i))]
                chance[(lv, f"t_x{var}")] = HALF
                chance[(lv, nxt(i))] = HALF
            else:
                vertices.append((lv, var_player(var)))
                edges += [(lv, T_SOLVER), (lv, nxt(i))]
    vertices.append(("s", CHANCE))
    edges += [("s", "C1"), ("s", T_ALL)]
    chance[("s", "C1")] = HALF
    chance[("s", T_ALL)] = HALF

    positive = sorted({v for c in phi.clauses for v, s in c if s})
    rewards = {}
    for v in positive:
        vertices.append((f"t_x{v}", TERMINAL))
        rewards[f"t_x{v}"] = {p: Fraction(p != var_player(v)) for p in players}
    vertices.append((T_SOLVER, TERMINAL))
    rewards[T_SOLVER] = {p: Fraction(p != SOLVER) for p in players}
    vertices.append((T_ALL, TERMINAL))
    rewards[T_ALL] = {p: Fraction(1) for p in players}
    return Game.build(players, vertices, edges, chance, rewards, "C1")


def sat_ne_from_valuation(phi: CnfFormula, nu: Mapping[int, bool]) -> StationaryProfile:
    """Pure equilibrium where Solver always picks a satisfied literal."""
    if not phi.satisfied_by(nu):
        raise ValueError("valuation does not satisfy the formula")
    m = len(phi.clauses)
    choice = {}
    for i, clause in enumerate(phi.clauses, 1):
        j, (var, sign) = next((j, lit) for j, lit in enumerate(clause, 1) if nu.get(lit[0], False) == lit[1])
        choice[f"C{i}"] = literal_vertex(i, j, var, sign)
        for j, (var, sign) in enumerate(clause, 1):
            if not sign:
                choice[literal_vertex(i, j, var, sign)] = f"C{i + 1}" if i < m else "s"
    return StationaryProfile.pure(choice)


def sat_epsilon(phi: CnfFormula) -> Fraction:
    return Fraction(1, 1 << (3 * len(phi.clauses)))


def _chain_formula(m: int, last: tuple[int, int, int]) -> CnfFormula:
    # clauses 1..m-1 only offer the positive literal x2, so Solver passes
    # through them by coin flips
    return CnfFormula.of(3, [[2, 2, 2]] * (m - 1) + [list(last)])


def _chain_solver_rows(m: int, phi: CnfFormula) -> dict:
    rows = {}
    for i in range(1, m):
        rows[f"C{i}"] = {literal_vertex(i, 1, 2, True): Fraction(1)}
    third = Fraction(1, 3)
    rows[f"C{m}"] = {literal_vertex(m, j, v, s): third for j, (v, s) in enumerate(phi.clauses[-1], 1)}
    return rows


def solver_loss_instance(m: int, q) -> tuple[Game, StationaryProfile, str]:
    """Game and profile minimising Solver's loss for a given q.

    Solver walks through m - 1 coin-flip clauses and then picks each
    literal of (~x1, x2, x3) with probability 1/3; player x1 moves from
    the negative literal to t_Solver with probability q.  Returns the
    game, the profile and the vertex where q is played.
    """
    q = Fraction(q)
    phi = _chain_formula(m, (-1, 2, 3))
    g = build_sat_game(phi)
    rows = _chain_solver_rows(m, phi)
    neg = literal_vertex(m, 1, 1, False)
    rows.update(_split(neg, T_SOLVER, "s", q))
    return g, StationaryProfile(rows), neg


def minimal_profit_instance(m: int, q) -> tuple[Game, StationaryProfile, StationaryProfile]:
    """Profile where x1's switch to t_Solver gains least, and the switched profile.

    The last clause is (x1, ~x1, x2) with Solver choosing each literal
    with probability 1/3.
    """
    q = Fraction(q)
    phi = _chain_formula(m, (1, -1, 2))
    g = build_sat_game(phi)
    rows = _chain_solver_rows(m, phi)
    neg = literal_vertex(m, 2, 1, False)
    base = StationaryProfile({**rows, **_split(neg, T_SOLVER, "s", q)})
    deviated = base.updated({neg: {T_SOLVER: Fraction(1)}})
    return g, base, deviated


# -- random instances -------------------------------------------------------------

def random_probabilities(rng: random.Random, k: int, denom: int = 12) -> list[Fraction]:
    """k positive rationals summing to 1."""
    cuts = sorted(rng.sample(range(1, denom * k), k - 1))
    bounds = [0] + cuts + [denom * k]
    return [Fraction(b - a, denom * k) for a, b in zip(bounds, bounds[1:])]


def random_game(
    rng: random.Random,
    *,
    n_vertices: int = 6,
    n_players: int = 2,
    n_terminals: int = 2,
    max_out: int = 3,
    chance_share: float = 0.3,
    negative: bool = False,
) -> Game:
    """Random arena with ``n_vertices`` non-terminal vertices."""
    players = tuple(f"P{k}" for k in range(n_players))
    inner = [f"v{k}" for k in range(n_vertices)]
    terms = [f"z{k}" for k in range(n_terminals)]
    vertices = []
    for v in inner:
        owner = CHANCE if rng.random() < chance_share else rng.choice(players)
        vertices.append((v, owner))
    vertices += [(t, TERMINAL) for t in terms]
    everything = inner + terms
    edges = []
    chance = {}
    for v, owner in vertices[:n_vertices]:
        k = rng.randint(1, min(max_out, len(everything)))
        succ = rng.sample(everything, k)
        edges += [(v, w) for w in succ]
        if owner == CHANCE:
            for w, p in zip(succ, random_probabilities(rng, k)):
                chance[(v, w)] = p
    lo = -4 if negative else 0
    rewards = {
        t: {p: Fraction(rng.randint(lo, 4), rng.choice((1, 2, 4))) for p in players}
        for t in terms
    }
    return Game.build(players, vertices, edges, chance, rewards, inner[0])


def random_profile(rng: random.Random, g: Game, *, pure_share: float = 0.3) -> StationaryProfile:
    rows = {}
    for v in g.controlled:
        succ = list(g.successors[v])
        if len(succ) == 1 or rng.random() < pure_share:
            rows[v] = {rng.choice(succ): Fraction(1)}
        else:
            k = rng.randint(2, len(succ))
            chosen = rng.sample(succ, k)
            rows[v] = dict(zip(chosen, random_probabilities(rng, k)))
    return StationaryProfile(rows)


def pure_profiles(g: Game, vertices: Sequence[str] | None = None):
    """Every pure choice over ``vertices`` (default: all controlled), in lexicographic order."""
    from itertools import product

    vs = list(g.controlled if vertices is None else vertices)
    for combo in product(*(g.successors[v] for v in vs)):
        yield dict(zip(vs, combo))


__all__ = [
    "GN_PLAYERS", "CIRCLE", "SQUARE", "TRIANGLE", "DIAMOND", "PENTAGON",
    "build_gn", "gn_alpha", "gn_exact_ne", "gn_cutoff", "gn_theta", "gn_epsilon_ne",
    "CnfFormula", "parse_dimacs", "build_sat_game", "sat_ne_from_valuation", "sat_epsilon",
    "SOLVER", "T_SOLVER", "var_player", "literal_vertex",
    "solver_loss_instance", "minimal_profit_instance",
    "random_probabilities", "random_game", "random_profile", "pure_profiles",
]
