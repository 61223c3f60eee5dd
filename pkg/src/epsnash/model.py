"""Game arenas, stationary profiles and their JSON file formats.

A game is a finite directed graph whose vertices are owned by a player, by
chance, or are terminal.  Terminal vertices carry one exact rational reward
per player; plays that never reach a terminal pay 0 to everybody.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Union

from .fpnum import FloatL

CHANCE = "chance"
TERMINAL = "terminal"
RESERVED_OWNERS = (CHANCE, TERMINAL)

Prob = Union[Fraction, FloatL]


class GameError(ValueError):
    """Malformed game document or invalid game."""


class IncompleteProfileError(ValueError):
    """A controlled vertex that needs a row has none."""


def parse_fraction(text) -> Fraction:
    """Parse an exact rational written as ``"p/q"`` or an integer.

    Decimal notation is rejected so that no value is silently rounded.
    """
    if isinstance(text, bool):
        raise GameError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise GameError(f"not a rational: {text!r}")
    s = text.strip()
    if not s or any(c in s for c in ".eE"):
        raise GameError(f"not an exact rational 'p/q': {text!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise GameError(f"not an exact rational 'p/q': {text!r}") from exc


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def bit(x) -> int:
    """Bits needed to write an integer, or p and q of a reduced rational plus one."""
    if isinstance(x, Fraction):
        return abs(x.numerator).bit_length() + x.denominator.bit_length() + 1
    return abs(int(x)).bit_length()


@dataclass(frozen=True, eq=True)
class Game:
    players: tuple[str, ...]
    vertices: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...]
    chance: Mapping[tuple[str, str], Fraction]
    rewards: Mapping[str, Mapping[str, Fraction]]
    initial: str

    @classmethod
    def build(cls, players, vertices, edges, chance, rewards, initial) -> "Game":
        """Assemble a game, filling omitted terminal rewards with 0."""
        players = tuple(players)
        vertices = tuple((v, o) for v, o in vertices)
        full = {}
        for v, owner in vertices:
            if owner == TERMINAL:
                given = rewards.get(v, {})
                full[v] = {p: Fraction(given.get(p, 0)) for p in players}
        for v in rewards:
            if v not in full:
                full[v] = {p: Fraction(x) for p, x in rewards[v].items()}
        return cls(
            players=players,
            vertices=vertices,
            edges=tuple((u, w) for u, w in edges),
            chance={e: Fraction(p) for e, p in chance.items()},
            rewards=full,
            initial=initial,
        )

    @cached_property
    def owner(self) -> dict[str, str]:
        return dict(self.vertices)

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: k for k, (v, _) in enumerate(self.vertices)}

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {v: [] for v, _ in self.vertices}
        for u, w in self.edges:
            out.setdefault(u, []).append(w)
        return {v: tuple(ws) for v, ws in out.items()}

    @property
    def vertex_ids(self) -> list[str]:
        return [v for v, _ in self.vertices]

    @cached_property
    def terminals(self) -> tuple[str, ...]:
        return tuple(v for v, o in self.vertices if o == TERMINAL)

    @cached_property
    def controlled(self) -> tuple[str, ...]:
        return tuple(v for v, o in self.vertices if o not in RESERVED_OWNERS)

    def owned_by(self, player: str) -> tuple[str, ...]:
        return tuple(v for v, o in self.vertices if o == player)

    def chance_row(self, v: str) -> dict[str, Fraction]:
        return {w: self.chance[(v, w)] for w in self.successors[v]}

    def edge_count(self) -> int:
        return len(self.edges)


def bit_size(g: Game) -> int:
    """Total bits of the chance probabilities."""
    return sum(bit(p) for p in g.chance.values())


def normalize_rewards(g: Game) -> Game:
    """Divide all rewards by the largest absolute reward."""
    top = max((abs(x) for row in g.rewards.values() for x in row.values()), default=0)
    if top == 0:
        return g
    rewards = {t: {p: x / top for p, x in row.items()} for t, row in g.rewards.items()}
    return Game(g.players, g.vertices, g.edges, dict(g.chance), rewards, g.initial)


def validate_game(g: Game) -> list[str]:
    """Every violated game invariant, as human-readable strings."""
    problems: list[str] = []
    seen: set[str] = set()
    players = set(g.players)
    for p in g.players:
        if not p:
            problems.append("empty player name")
        if p in RESERVED_OWNERS:
            problems.append(f"player name {p!r} is reserved")
    if len(players) != len(g.players):
        problems.append("duplicate player name")
    for v, owner in g.vertices:
        if v in seen:
            problems.append(f"duplicate vertex {v!r}")
        seen.add(v)
        if owner not in RESERVED_OWNERS and owner not in players:
            problems.append(f"vertex {v!r} has unknown owner {owner!r}")
    edge_set = set()
    for u, w in g.edges:
        if u not in seen:
            problems.append(f"edge from unknown vertex {u!r}")
        if w not in seen:
            problems.append(f"edge to unknown vertex {w!r}")
        if (u, w) in edge_set:
            problems.append(f"duplicate edge {u!r} -> {w!r}")
        edge_set.add((u, w))
    succ = g.successors
    for v, owner in g.vertices:
        deg = len(succ.get(v, ()))
        if owner == TERMINAL:
            if deg:
                problems.append(f"terminal {v!r} has out-degree {deg}")
        elif deg == 0:
            problems.append(f"non-terminal {v!r} has out-degree 0")
            if v not in g.rewards:
                problems.append(f"sink {v!r} is owned by {owner!r} instead of being a terminal")
    for (u, w), p in g.chance.items():
        if (u, w) not in edge_set:
            problems.append(f"probability on missing edge {u!r} -> {w!r}")
        elif g.owner.get(u) != CHANCE:
            problems.append(f"probability on edge {u!r} -> {w!r} from non-chance vertex")
        if not 0 <= p <= 1:
            problems.append(f"probability {p} on {u!r} -> {w!r} outside [0, 1]")
    for v, owner in g.vertices:
        if owner != CHANCE:
            continue
        missing = [w for w in succ.get(v, ()) if (v, w) not in g.chance]
        if missing:
            problems.append(f"chance vertex {v!r} lacks probabilities on edges to {missing}")
            continue
        total = sum((g.chance[(v, w)] for w in succ.get(v, ())), Fraction(0))
        if succ.get(v) and total != 1:
            problems.append(f"chance row {v!r} sums to {total}")
    for v, row in g.rewards.items():
        if g.owner.get(v) != TERMINAL:
            problems.append(f"reward on non-terminal {v!r}")
            continue
        for p in row:
            if p not in players:
                problems.append(f"reward for unknown player {p!r} at {v!r}")
        for p in g.players:
            if p not in row:
                problems.append(f"terminal {v!r} lacks a reward for {p!r}")
    for t in g.terminals:
        if t not in g.rewards:
            problems.append(f"terminal {t!r} has no reward entry")
    if g.initial not in seen:
        problems.append(f"initial vertex {g.initial!r} does not exist")
    return problems


# -- game files ---------------------------------------------------------------

def parse_game(text: str) -> Game:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameError(f"line {exc.lineno}: {exc.msg}") from exc
    return game_from_dict(doc)


def game_from_dict(doc) -> Game:
    if not isinstance(doc, dict):
        raise GameError("game document must be a JSON object")
    for key in ("players", "vertices", "edges", "initial"):
        if key not in doc:
            raise GameError(f"missing field {key!r}")
    players = doc["players"]
    if not isinstance(players, list) or not all(isinstance(p, str) for p in players):
        raise GameError("players: expected an array of strings")
    vertices = []
    owners = {}
    for k, item in enumerate(doc["vertices"]):
        try:
            v, owner = item["id"], item["owner"]
        except (TypeError, KeyError) as exc:
            raise GameError(f"vertices[{k}]: needs 'id' and 'owner'") from exc
        if not isinstance(v, str) or not isinstance(owner, str):
            raise GameError(f"vertices[{k}]: 'id' and 'owner' must be strings")
        if v in owners:
            raise GameError(f"vertices[{k}]: duplicate vertex id {v!r}")
        owners[v] = owner
        vertices.append((v, owner))
    edges = []
    chance = {}
    for k, item in enumerate(doc["edges"]):
        try:
            u, w = item["from"], item["to"]
        except (TypeError, KeyError) as exc:
            raise GameError(f"edges[{k}]: needs 'from' and 'to'") from exc
        for end in (u, w):
            if end not in owners:
                raise GameError(f"edges[{k}]: unknown vertex {end!r}")
        has_prob = "prob" in item
        if has_prob != (owners[u] == CHANCE):
            raise GameError(f"edges[{k}]: 'prob' must be given iff {u!r} is a chance vertex")
        if has_prob:
            try:
                chance[(u, w)] = parse_fraction(item["prob"])
            except GameError as exc:
                raise GameError(f"edges[{k}].prob: {exc}") from exc
        edges.append((u, w))
    rewards = {}
    for t, row in (doc.get("rewards") or {}).items():
        if t not in owners:
            raise GameError(f"rewards: unknown vertex {t!r}")
        if not isinstance(row, dict):
            raise GameError(f"rewards.{t}: expected an object")
        try:
            rewards[t] = {p: parse_fraction(x) for p, x in row.items()}
        except GameError as exc:
            raise GameError(f"rewards.{t}: {exc}") from exc
    g = Game.build(players, vertices, edges, chance, rewards, doc["initial"])
    problems = validate_game(g)
    if problems:
        raise GameError("; ".join(problems))
    return g


def game_to_dict(g: Game) -> dict:
    edges = []
    for u, w in g.edges:
        item = {"from": u, "to": w}
        if g.owner[u] == CHANCE:
            item["prob"] = format_fraction(g.chance[(u, w)])
        edges.append(item)
    return {
        "players": list(g.players),
        "vertices": [{"id": v, "owner": o} for v, o in g.vertices],
        "edges": edges,
        "rewards": {
            t: {p: format_fraction(x) for p, x in g.rewards[t].items()}
            for t in g.terminals
        },
        "initial": g.initial,
    }


def serialize_game(g: Game) -> str:
    return json.dumps(game_to_dict(g), indent=1, ensure_ascii=False) + "\n"


# -- stationary profiles --------------------------------------------------------

@dataclass(frozen=True)
class StationaryProfile:
    """One distribution over successors per controlled vertex.

    A row holds either exact rationals summing to 1, or ``FloatL`` weights
    whose normalisation gives the probabilities.  Zero entries are allowed
    but never part of the support.
    """

    choices: Mapping[str, Mapping[str, Prob]] = field(default_factory=dict)

    def __contains__(self, v: str) -> bool:
        return v in self.choices

    def row(self, v: str) -> dict[str, Fraction]:
        """Exact probabilities of the row at ``v``."""
        raw = self.choices[v]
        if any(isinstance(x, FloatL) for x in raw.values()):
            total = sum((x.value for x in raw.values()), Fraction(0))
            return {w: x.value / total for w, x in raw.items()}
        return {w: Fraction(x) for w, x in raw.items()}

    def support(self, v: str) -> tuple[str, ...]:
        return tuple(w for w, p in self.row(v).items() if p > 0)

    def exact(self) -> "StationaryProfile":
        return StationaryProfile({v: self.row(v) for v in self.choices})

    def updated(self, rows: Mapping[str, Mapping[str, Prob]]) -> "StationaryProfile":
        merged = dict(self.choices)
        merged.update(rows)
        return StationaryProfile(merged)

    def without(self, vertices: Iterable[str]) -> "StationaryProfile":
        drop = set(vertices)
        return StationaryProfile({v: r for v, r in self.choices.items() if v not in drop})

    @classmethod
    def pure(cls, choice: Mapping[str, str]) -> "StationaryProfile":
        return cls({v: {w: Fraction(1)} for v, w in choice.items()})


def validate_profile(g: Game, sigma: StationaryProfile, *, full: bool = True) -> list[str]:
    from .fpnum import FloatDist, is_dl_member

    problems = []
    for v, raw in sigma.choices.items():
        owner = g.owner.get(v)
        if owner is None:
            problems.append(f"row for unknown vertex {v!r}")
            continue
        if owner in RESERVED_OWNERS:
            problems.append(f"row for {owner} vertex {v!r}")
            continue
        succ = set(g.successors[v])
        extra = [w for w in raw if w not in succ]
        if extra:
            problems.append(f"row {v!r} puts weight on non-successors {extra}")
        floats = [x for x in raw.values() if isinstance(x, FloatL)]
        if floats:
            if len(floats) != len(raw):
                problems.append(f"row {v!r} mixes exact and floating-point entries")
            elif not is_dl_member(FloatDist(tuple(floats))):
                problems.append(f"row {v!r} is not a floating-point distribution")
        else:
            vals = [Fraction(x) for x in raw.values()]
            if any(x < 0 for x in vals):
                problems.append(f"row {v!r} has a negative entry")
            if sum(vals, Fraction(0)) != 1:
                problems.append(f"row {v!r} sums to {sum(vals, Fraction(0))}")
    if full:
        for v in g.controlled:
            if v not in sigma.choices:
                problems.append(f"no row for controlled vertex {v!r}")
    return problems


def profile_to_dict(sigma: StationaryProfile) -> dict:
    out = {}
    for v, raw in sigma.choices.items():
        out[v] = {
            w: x.to_json() if isinstance(x, FloatL) else format_fraction(Fraction(x))
            for w, x in raw.items()
        }
    return {"choices": out}


def profile_from_dict(doc) -> StationaryProfile:
    if not isinstance(doc, dict) or not isinstance(doc.get("choices"), dict):
        raise GameError("profile document must be an object with a 'choices' object")
    rows = {}
    for v, raw in doc["choices"].items():
        if not isinstance(raw, dict):
            raise GameError(f"choices.{v}: expected an object")
        row = {}
        for w, x in raw.items():
            try:
                row[w] = FloatL.from_json(x) if isinstance(x, dict) else parse_fraction(x)
            except (GameError, ValueError, KeyError, TypeError) as exc:
                raise GameError(f"choices.{v}.{w}: {exc}") from exc
        rows[v] = row
    return StationaryProfile(rows)


def parse_profile(text: str) -> StationaryProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameError(f"line {exc.lineno}: {exc.msg}") from exc
    return profile_from_dict(doc)


def serialize_profile(sigma: StationaryProfile) -> str:
    return json.dumps(profile_to_dict(sigma), indent=1, ensure_ascii=False) + "\n"


# -- structure under a profile --------------------------------------------------

def transition_rows(
    g: Game, sigma: StationaryProfile, *, free: Iterable[str] = (), override_chance: bool = False
) -> dict[str, dict[str, Fraction]]:
    """Exact outgoing distribution of every non-terminal vertex.

    Vertices listed in ``free`` are left out (they belong to the player
    being optimised).  With ``override_chance`` a profile row given for a
    chance vertex replaces the game's probabilities.
    """
    skip = set(free)
    rows = {}
    for v, owner in g.vertices:
        if owner == TERMINAL or v in skip:
            continue
        if owner == CHANCE:
            if override_chance and v in sigma.choices:
                rows[v] = sigma.row(v)
            else:
                rows[v] = g.chance_row(v)
        else:
            if v not in sigma.choices:
                raise IncompleteProfileError(f"no row for controlled vertex {v!r}")
            rows[v] = sigma.row(v)
    return rows


def backward_closure(targets: Iterable[str], rows: Mapping[str, Mapping[str, Fraction]]) -> set[str]:
    """Vertices with a positive-probability path into ``targets``."""
    pred: dict[str, list[str]] = {}
    for v, row in rows.items():
        for w, p in row.items():
            if p > 0:
                pred.setdefault(w, []).append(v)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        w = queue.popleft()
        for v in pred.get(w, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def forward_closure(start: str, rows: Mapping[str, Mapping[str, Fraction]]) -> set[str]:
    """Vertices visited with positive probability from ``start``."""
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w, p in rows.get(v, {}).items():
            if p > 0 and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def reachable_support(g: Game, sigma: StationaryProfile) -> set[str]:
    """Vertices from which some terminal is reached with positive probability."""
    return backward_closure(g.terminals, transition_rows(g, sigma))
