"""Command-line front end.

Exit status: 0 for success or a positive verdict, 1 for a negative
verdict or an exhausted search, 2 for usage and input errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from decimal import Context, Decimal
from fractions import Fraction

from . import etr_export, evaluate, fpnum, generators, model, search, verify

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_rational(text: str) -> Fraction:
    """Exact rational from "p/q", an integer, or "2^-k"."""
    text = text.strip()
    m = re.fullmatch(r"2\^(-?\d+)", text)
    if m:
        return Fraction(2) ** int(m.group(1))
    try:
        return model.parse_fraction(text)
    except (ValueError, model.GameError) as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an exact rational (use p/q or 2^-k)") from exc


def decimal20(x: Fraction) -> str:
    ctx = Context(prec=20)
    return str(ctx.divide(Decimal(x.numerator), Decimal(x.denominator)))


def _num(x):
    return {"exact": model.format_fraction(x), "decimal": decimal20(x)}


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from exc


def _load_game(path):
    try:
        return model.parse_game(_read(path))
    except model.GameError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _load_profile(path, g=None):
    try:
        sigma = model.parse_profile(_read(path))
    except model.GameError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    if g is not None:
        problems = model.validate_profile(g, sigma)
        if problems:
            raise UsageError(f"{path}: {problems[0]}")
    return sigma


def _bounds(g, pairs, default):
    out = {i: default for i in g.players}
    for item in pairs or ():
        name, sep, value = item.partition("=")
        if not sep or name not in g.players:
            raise UsageError(f"bound {item!r}: expected PLAYER=p/q with a known player")
        try:
            out[name] = parse_rational(value)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"bound {item!r}: {exc}") from exc
    return out


def _reward_range(g):
    vals = [x for r in g.rewards.values() for x in r.values()] + [Fraction(0)]
    return min(vals), max(vals)


def _emit(args, doc, text):
    out = json.dumps(doc, indent=1, sort_keys=False) + "\n" if args.json else text
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _write_or_print(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_text(rep: verify.VerificationReport) -> str:
    lines = [f"{'player':<12} {'payoff':>26} {'best response':>26} {'margin':>26}  bounds"]
    for p, r in rep.players.items():
        def cell(x):
            return "-" if x is None else model.format_fraction(x)
        lines.append(f"{p:<12} {cell(r.payoff):>26} {cell(r.best_response_value):>26} {cell(r.margin):>26}  "
                     f"{'ok' if r.constraint_ok else 'VIOLATED'}")
    verdict = "equilibrium" if rep.is_ne else "not an equilibrium"
    lines.append(f"epsilon {model.format_fraction(rep.epsilon)} ({rep.mode}): {verdict}")
    return "\n".join(lines) + "\n"


def _report_doc(rep: verify.VerificationReport) -> dict:
    doc = rep.to_json()
    for p, r in rep.players.items():
        entry = doc["players"][p]
        for key, val in (("payoff", r.payoff), ("best_response", r.best_response_value), ("margin", r.margin)):
            if val is not None:
                entry[key + "_decimal"] = decimal20(val)
    return doc


# -- subcommands -----------------------------------------------------------------

def cmd_generate(args):
    if args.family == "gn":
        if args.n is None or args.n < 1:
            raise UsageError("--n: a positive integer is required")
        g = generators.build_gn(args.n)
    else:
        if not args.dimacs:
            raise UsageError("--dimacs: a DIMACS file is required")
        try:
            g = generators.build_sat_game(generators.parse_dimacs(_read(args.dimacs)))
        except ValueError as exc:
            raise UsageError(f"{args.dimacs}: {exc}") from exc
    _write_or_print(args, model.serialize_game(g))
    return EXIT_OK


def _parse_valuation(text, nvars):
    nu = {}
    for tok in (text or "").replace(",", " ").split():
        try:
            x = int(tok)
        except ValueError as exc:
            raise UsageError(f"--valuation: {tok!r} is not a signed variable index") from exc
        if x == 0 or abs(x) > nvars:
            raise UsageError(f"--valuation: variable {abs(x)} out of range")
        nu[abs(x)] = x > 0
    return nu


def cmd_ne(args):
    if args.kind in ("gn-exact", "gn-eps"):
        if args.n is None or args.n < 1:
            raise UsageError("--n: a positive integer is required")
        if args.kind == "gn-exact":
            sigma = generators.gn_exact_ne(args.n)
        else:
            if args.epsilon is None or args.epsilon <= 0:
                raise UsageError("--epsilon: a positive rational is required")
            sigma = generators.gn_epsilon_ne(args.n, args.epsilon)
    else:
        if not args.dimacs:
            raise UsageError("--dimacs: a DIMACS file is required")
        try:
            phi = generators.parse_dimacs(_read(args.dimacs))
        except ValueError as exc:
            raise UsageError(f"{args.dimacs}: {exc}") from exc
        nu = _parse_valuation(args.valuation, phi.num_vars)
        try:
            sigma = generators.sat_ne_from_valuation(phi, nu)
        except ValueError as exc:
            raise UsageError(f"--valuation: {exc}") from exc
    _write_or_print(args, model.serialize_profile(sigma))
    return EXIT_OK


def cmd_evaluate(args):
    g = _load_game(args.game)
    sigma = _load_profile(args.profile, g)
    vals = evaluate.expected_payoffs(g, sigma).payoffs
    doc = {"payoffs": {p: _num(v) for p, v in vals.items()}}
    text = "".join(f"{p:<12} {model.format_fraction(v):>26}  {decimal20(v)}\n" for p, v in vals.items())
    _emit(args, doc, text)
    return EXIT_OK


def cmd_best_response(args):
    g = _load_game(args.game)
    if args.player not in g.players:
        raise UsageError(f"--player: unknown player {args.player!r}")
    sigma = _load_profile(args.profile)
    problems = model.validate_profile(g, sigma, full=False)
    missing = [v for v in g.controlled if g.owner[v] != args.player and v not in sigma]
    if problems or missing:
        raise UsageError(f"{args.profile}: " + (problems[0] if problems else f"no row for {missing[0]!r}"))
    br = evaluate.mdp_best_response(g, sigma, args.player)
    doc = {"player": args.player, "value": _num(br.value), "strategy": br.strategy}
    text = f"value {model.format_fraction(br.value)} ({decimal20(br.value)})\n" + "".join(
        f"  {v} -> {w}\n" for v, w in br.strategy.items()
    )
    _emit(args, doc, text)
    return EXIT_OK


def cmd_verify(args):
    g = _load_game(args.game)
    sigma = _load_profile(args.profile, g)
    eps = args.epsilon if args.epsilon is not None else Fraction(0)
    if args.mode == "promise" and eps <= 0:
        raise UsageError("--epsilon: promise mode needs a positive epsilon")
    if args.lower or args.upper:
        lo, hi = _reward_range(g)
        rep = verify.verify_constrained(
            g, sigma, _bounds(g, args.lower, lo), _bounds(g, args.upper, hi), eps, mode=args.mode
        )
    else:
        rep = verify.verify_epsilon_ne(g, sigma, eps, mode=args.mode)
    _emit(args, _report_doc(rep), _report_text(rep))
    return EXIT_OK if rep.ok else EXIT_NEGATIVE


def cmd_round(args):
    if args.ell < 2:
        raise UsageError("--ell: precision must be at least 2")
    sigma = _load_profile(args.profile)
    rows = {}
    for v in sigma.choices:
        row = sigma.row(v)
        keys = [w for w, p in row.items() if p > 0]
        dist = fpnum.round_distribution([row[w] for w in keys], args.ell)
        rows[v] = dict(zip(keys, dist.weights))
    out = model.StationaryProfile(rows)
    bad = [v for v in rows if not fpnum.is_dl_member(fpnum.FloatDist(tuple(rows[v].values())))]
    if bad:
        raise RuntimeError(f"rounded row {bad[0]!r} is not a floating-point distribution")
    _write_or_print(args, model.serialize_profile(out))
    return EXIT_OK


def _support_arg(g, args):
    if args.profile:
        return etr_export.support_of(g, _load_profile(args.profile, g))
    if args.support:
        try:
            doc = json.loads(_read(args.support))
            return {(v, w) for v, ws in doc.items() for w in ws}
        except (json.JSONDecodeError, AttributeError, TypeError) as exc:
            raise UsageError(f"{args.support}: expected an object vertex -> list of successors") from exc
    raise UsageError("one of --profile or --support is required")


def cmd_export_etr(args):
    g = _load_game(args.game)
    S = _support_arg(g, args)
    xs = _bounds(g, args.lower, None) if args.lower else None
    ys = _bounds(g, args.upper, None) if args.upper else None
    if xs and any(v is None for v in xs.values()):
        lo, _ = _reward_range(g)
        xs = {k: lo if v is None else v for k, v in xs.items()}
    if ys and any(v is None for v in ys.values()):
        _, hi = _reward_range(g)
        ys = {k: hi if v is None else v for k, v in ys.items()}
    try:
        system = etr_export.build_etr(g, xs, ys, S)
    except ValueError as exc:
        raise UsageError(f"support: {exc}") from exc
    _write_or_print(args, etr_export.emit_smtlib(system))
    return EXIT_OK


def cmd_check_etr(args):
    g = _load_game(args.game)
    sigma = _load_profile(args.profile, g)
    xs = _bounds(g, args.lower, _reward_range(g)[0]) if args.lower else None
    ys = _bounds(g, args.upper, _reward_range(g)[1]) if args.upper else None
    found = verify.check_etr_constraints(g, sigma, xs, ys)
    doc = {"violations": [{"constraint": c, "detail": d} for c, d in found], "satisfied": not found}
    text = "".join(f"constraint {c}: {d}\n" for c, d in found) or "all constraints hold\n"
    _emit(args, doc, text)
    return EXIT_OK if not found else EXIT_NEGATIVE


def cmd_search(args):
    g = _load_game(args.game)
    if args.epsilon is None:
        raise UsageError("--epsilon: required for search")
    cands = [_load_profile(p, g) for p in args.candidate or ()]
    if args.mode == "candidate-file" and not cands:
        raise UsageError("--candidate: candidate-file mode needs at least one file")
    try:
        cfg = search.SearchConfig(args.mode, args.budget, args.epsilon, args.seed, tuple(cands))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    lo, hi = _reward_range(g)
    res = search.search_constrained_ne(g, _bounds(g, args.lower, lo), _bounds(g, args.upper, hi), args.epsilon, cfg)
    doc = {
        "found": res.found,
        "tried": res.tried,
        "best_margin": None if res.best_margin is None else _num(res.best_margin),
        "profile": model.profile_to_dict(res.profile) if res.found else None,
        "report": _report_doc(res.report) if res.found else None,
    }
    if res.found:
        text = f"found after {res.tried} candidates\n" + _report_text(res.report) + model.serialize_profile(res.profile)
    else:
        best = "-" if res.best_margin is None else model.format_fraction(res.best_margin)
        text = f"exhausted after {res.tried} candidates; best margin {best}\n"
    _emit(args, doc, text)
    return EXIT_OK if res.found else EXIT_NEGATIVE


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write output to this file")

    bounds = argparse.ArgumentParser(add_help=False)
    bounds.add_argument("--lower", action="append", metavar="PLAYER=p/q", help="payoff lower bound")
    bounds.add_argument("--upper", action="append", metavar="PLAYER=p/q", help="payoff upper bound")

    parser = argparse.ArgumentParser(prog="epsnash", description="Stationary equilibria of stochastic games")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a game file")
    p.add_argument("family", choices=("gn", "sat"))
    p.add_argument("--n", type=int)
    p.add_argument("--dimacs")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ne", parents=[common], help="write a reference equilibrium profile")
    p.add_argument("kind", choices=("gn-exact", "gn-eps", "sat"))
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=parse_rational)
    p.add_argument("--dimacs")
    p.add_argument("--valuation", help="true/false variables as signed indices, e.g. '1,-2,3'")
    p.set_defaults(func=cmd_ne)

    p = sub.add_parser("evaluate", parents=[common], help="expected payoffs of a profile")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("best-response", parents=[common], help="optimal pure deviation of one player")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--player", required=True)
    p.set_defaults(func=cmd_best_response)

    p = sub.add_parser("verify", parents=[common, bounds], help="check an (epsilon-)equilibrium")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--epsilon", type=parse_rational)
    p.add_argument("--mode", choices=("exact", "promise"), default="exact")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("round", parents=[common], help="round a profile to ell-bit floats")
    p.add_argument("--profile", required=True)
    p.add_argument("--ell", type=int, required=True)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("export-etr", parents=[common, bounds], help="write the SMT-LIB2 system for a support")
    p.add_argument("--game", required=True)
    p.add_argument("--profile")
    p.add_argument("--support")
    p.set_defaults(func=cmd_export_etr)

    p = sub.add_parser("check-etr", parents=[common, bounds], help="evaluate the constraint system at a profile")
    p.add_argument("--game", required=True)
    p.add_argument("--profile", required=True)
    p.set_defaults(func=cmd_check_etr)

    p = sub.add_parser("search", parents=[common, bounds], help="look for a constrained epsilon-equilibrium")
    p.add_argument("--game", required=True)
    p.add_argument("--mode", choices=search.MODES, default="pure-enumeration")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--epsilon", type=parse_rational)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--candidate", action="append")
    p.set_defaults(func=cmd_search)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"epsnash {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (model.GameError, model.IncompleteProfileError) as exc:
        print(f"epsnash {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())
