"""Command-line frontend: parsing, analyses, oracles and reproducible
text outputs, with exit code 1 flagging negative boolean answers and 2
flagging input errors."""

from __future__ import annotations

import argparse
import os
import sys

from . import termination
from .cn import decreasing_expand, ocmdp_cn, solve_cn
from .model import (Config, ModelError, OcMdp, format_fraction, negate_rewards,
                    normalize_finals, parse_cmd_strategy, parse_mdp,
                    parse_ocmdp, parse_solvency, serialize_cmd_strategy,
                    serialize_md_strategy, serialize_mdp,
                    to_boundaryless_reward_mdp)
from .oracle import brute_force_cn_values, brute_force_qual_mp, simulate
from .qualmp import qual_mp
from .solvency import MODES, qual_bankruptcy
from .termination import (certify_st_strategy, nt_membership, nt_value_one,
                          parse_cregular, serialize_aautomaton,
                          serialize_cregular, serialize_rectangles,
                          st_optimal_strategy, st_optvalone)

_MODE_FLAGS = {"p>0": "positive", "p=1": "one", "p=0": "zero", "p<1": "below_one"}


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_ocmdp(path: str, normalize: bool = False) -> OcMdp:
    a = parse_ocmdp(_read(path))
    if normalize:
        a = normalize_finals(a)
    return a


def _parse_config(a: OcMdp, text: str) -> Config:
    state, _, counter = text.partition(":")
    if state not in a.states:
        raise ModelError("unknown state %r" % state)
    return Config(state, int(counter))


def cmd_validate(args) -> int:
    text = _read(args.file)
    if args.file.endswith(".mdp"):
        parse_mdp(text)
    elif args.file.endswith(".slv"):
        parse_solvency(text)
    else:
        parse_ocmdp(text)
    print("ok")
    return 0


def cmd_cn(args) -> int:
    a = _load_ocmdp(args.file, args.normalize_finals)
    values, selector = ocmdp_cn(a)
    for q in a.states:
        print("%s %s" % (q, format_fraction(values[q])))
    sys.stdout.write(serialize_cmd_strategy(selector, a))
    if args.certificate:
        os.makedirs(args.certificate, exist_ok=True)
        m = to_boundaryless_reward_mdp(a)
        with open(os.path.join(args.certificate, "reduced.mdp"), "w") as fh:
            fh.write(serialize_mdp(m))
        with open(os.path.join(args.certificate, "dprime.mdp"), "w") as fh:
            fh.write(serialize_mdp(decreasing_expand(m, reachable_only=True)))
    return 0


def cmd_mdp_cn(args) -> int:
    m = parse_mdp(_read(args.file))
    if args.negate_rewards:
        m = negate_rewards(m)
    vals, sigma = solve_cn(m)
    for v, name in enumerate(m.names):
        print("%s %s" % (name, format_fraction(vals[v])))
    sys.stdout.write(serialize_md_strategy(sigma, m))
    return 0


def cmd_mdp_qualmp(args) -> int:
    m = parse_mdp(_read(args.file))
    area, sigma = qual_mp(m)
    for v in sorted(area):
        print("A %s" % m.names[v])
    sys.stdout.write(serialize_md_strategy(sigma, m))
    return 0


def cmd_nt(args) -> int:
    a = _load_ocmdp(args.file, args.normalize_finals)
    ans = nt_value_one(a)
    for q in a.states:
        if q in ans.safe:
            print("safe %s" % q)
    for q in a.states:
        if q in ans.thresholds:
            print("threshold %s %d" % (q, ans.thresholds[q]))
    sys.stdout.write(serialize_cmd_strategy(ans.strategy, a))
    if args.config:
        cfg = _parse_config(a, args.config)
        member = nt_membership(ans, cfg.state, cfg.counter)
        print("member %s:%d %s" % (cfg.state, cfg.counter,
                                   "true" if member else "false"))
        return 0 if member else 1
    return 0


def cmd_st(args) -> int:
    a = _load_ocmdp(args.file, args.normalize_finals)
    rect, aut = st_optvalone(a, jobs=args.jobs)
    sys.stdout.write(serialize_rectangles(rect))
    sys.stdout.write(serialize_aautomaton(aut))
    strat = st_optimal_strategy(a, rect)
    sys.stdout.write(serialize_cregular(strat))
    if args.certificate:
        os.makedirs(args.certificate, exist_ok=True)
        with open(os.path.join(args.certificate, "rectangles.txt"), "w") as fh:
            fh.write(serialize_rectangles(rect))
        trace = []
        n_init = 2 ** len(a.states)
        for ell, boundary in termination._st_candidates(a, n_init):
            black = termination._evaluate_candidate(a, n_init, ell, boundary)
            row = "".join(boundary[q][0] for q in a.states)
            trace.append("candidate period=%d boundary=%s %s"
                         % (ell, row,
                            "rejected" if black is None else
                            "black=%d" % len(black)))
        with open(os.path.join(args.certificate, "coloring-trace.txt"), "w") as fh:
            fh.write("\n".join(trace) + "\n")
    return 0


def cmd_solvency(args) -> int:
    g = parse_solvency(_read(args.file))
    mode = _MODE_FLAGS.get(args.mode, args.mode)
    if mode not in MODES:
        raise ModelError("unknown mode %r" % args.mode)
    answer = qual_bankruptcy(g, mode)
    print("bankruptcy %s %s" % (args.mode, "yes" if answer else "no"))
    return 0 if answer else 1


def cmd_simulate(args) -> int:
    a = _load_ocmdp(args.file, args.normalize_finals)
    cfg = _parse_config(a, getattr(args, "from"))
    strategy = None
    if args.strategy:
        text = _read(args.strategy)
        head = next((l.strip() for l in text.splitlines() if l.strip()), "")
        if head.startswith("cregular"):
            strategy = parse_cregular(text, a)
        else:
            strategy = parse_cmd_strategy(text, a)
    elif args.nt_strategy:
        strategy = nt_value_one(a).strategy
    seed = args.seed if args.seed is not None \
        else int(os.environ.get("OCMDP_SEED", "0"))
    report = simulate(a, strategy, cfg, args.steps, args.runs, seed,
                      boundaryless=args.boundaryless)
    sys.stdout.write(report.lines())
    return 0


def cmd_oracle(args) -> int:
    if args.kind == "cn":
        a = _load_ocmdp(args.file)
        best = brute_force_cn_values(a, args.bound)
        for q in a.states:
            print("%s %s" % (q, format_fraction(best[q])))
        if args.check:
            values, _ = ocmdp_cn(a)
            if values != best:
                print("MISMATCH")
                return 1
            print("match")
        return 0
    m = parse_mdp(_read(args.file))
    area = brute_force_qual_mp(m, args.bound)
    for v in sorted(area):
        print("A %s" % m.names[v])
    if args.check:
        fast, _ = qual_mp(m)
        if fast != area:
            print("MISMATCH")
            return 1
        print("match")
    return 0


def cmd_certify(args) -> int:
    a = _load_ocmdp(args.file, args.normalize_finals)
    strat = parse_cregular(_read(args.strategy), a)
    cfg = _parse_config(a, getattr(args, "from"))
    ok = certify_st_strategy(a, strat, cfg)
    print("certified %s:%d %s" % (cfg.state, cfg.counter, "yes" if ok else "no"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ocmdp",
        description="Exact qualitative analyses for one-counter MDPs.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_common(sp, normalize=True, certificate=False):
        if normalize:
            sp.add_argument("--normalize-finals", action="store_true",
                            help="rewrite final-state zero rules to the "
                                 "mandatory self-loop before analysis")
        if certificate:
            sp.add_argument("--certificate", metavar="DIR",
                            help="dump intermediate artifacts for audit")

    sp = sub.add_parser("validate", help="parse and validate a model file")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("cn", help="cover-negative values of a one-counter MDP")
    sp.add_argument("file")
    with_common(sp, certificate=True)
    sp.set_defaults(func=cmd_cn)

    sp = sub.add_parser("mdp-cn", help="cover-negative values of a reward MDP")
    sp.add_argument("file")
    sp.add_argument("--negate-rewards", action="store_true",
                    help="analyse the mirrored objective (lim sup = +infinity)")
    sp.set_defaults(func=cmd_mdp_cn)

    sp = sub.add_parser("mdp-qualmp",
                        help="almost-sure non-positive mean payoff set")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_mdp_qualmp)

    sp = sub.add_parser("nt", help="qualitative non-selective termination")
    sp.add_argument("file")
    sp.add_argument("--config", metavar="q:i",
                    help="also decide membership of one configuration")
    with_common(sp)
    sp.set_defaults(func=cmd_nt)

    sp = sub.add_parser("st", help="optimal-value-one selective termination")
    sp.add_argument("file")
    sp.add_argument("--jobs", type=int, default=1,
                    help="parallel candidate evaluations")
    with_common(sp, certificate=True)
    sp.set_defaults(func=cmd_st)

    sp = sub.add_parser("solvency", help="qualitative bankruptcy decisions")
    sp.add_argument("file")
    sp.add_argument("--mode", required=True,
                    help="one of p>0, p=1, p=0, p<1")
    sp.set_defaults(func=cmd_solvency)

    sp = sub.add_parser("simulate", help="reproducible Monte-Carlo runs")
    sp.add_argument("file")
    sp.add_argument("--from", required=True, metavar="q:i")
    sp.add_argument("--runs", type=int, default=10000)
    sp.add_argument("--steps", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=None,
                    help="default from OCMDP_SEED, else 0")
    sp.add_argument("--strategy", metavar="FILE",
                    help="cmd or cregular strategy file")
    sp.add_argument("--nt-strategy", action="store_true",
                    help="use the synthesized termination strategy")
    sp.add_argument("--boundaryless", action="store_true")
    with_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("oracle", help="brute-force cross-checks")
    sp.add_argument("kind", choices=["cn", "qualmp"])
    sp.add_argument("file")
    sp.add_argument("--bound", type=int, default=10 ** 6)
    sp.add_argument("--check", action="store_true",
                    help="also run the fast procedure and compare")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("certify",
                        help="certify a counter-regular strategy terminates "
                             "in the finals almost surely")
    sp.add_argument("file")
    sp.add_argument("strategy")
    sp.add_argument("--from", required=True, metavar="q:i")
    with_common(sp)
    sp.set_defaults(func=cmd_certify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ModelError, OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except KeyError as exc:
        print("error: input references an unknown element: %s" % exc,
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
