"""Qualitative bankruptcy analysis for solvency games and their
reduction to one-counter MDPs."""

from __future__ import annotations

from fractions import Fraction

from .model import ModelError, OcMdp, Rule, SolvencyGame

MODES = ("positive", "one", "zero", "below_one")


def drift(action) -> Fraction:
    """Expected one-step wealth change of an action."""
    return sum((Fraction(delta) * p for delta, p in action), Fraction(0))


def _has_negative(action) -> bool:
    return any(delta < 0 for delta, _ in action)


def qual_bankruptcy(g: SolvencyGame, mode: str) -> bool:
    """The four qualitative bankruptcy decisions: can the gambler go
    bankrupt with probability >0, =1, =0, <1?  All are per-action
    support/drift conditions."""
    g.validate()
    if mode == "positive":
        return any(_has_negative(act) for act in g.actions)
    if mode == "one":
        return any(_has_negative(act) and drift(act) <= 0 for act in g.actions)
    if mode == "zero":
        return any(not _has_negative(act) for act in g.actions)
    if mode == "below_one":
        return any(not _has_negative(act) or drift(act) > 0 for act in g.actions)
    raise ModelError("unknown mode %r" % mode)


BASE_STATE = "base"


def solvency_to_ocmdp(g: SolvencyGame) -> OcMdp:
    """Encode a solvency game as a one-counter MDP: a controlled base
    state picks an action, a probabilistic fan-out picks the outcome,
    and unary chains apply the wealth change one step at a time.  No
    final states: bankruptcy is plain termination.  The encoding is
    pseudo-polynomial (deltas unfold in unary)."""
    g.validate()
    states = [BASE_STATE]
    controlled = {BASE_STATE}
    zero_rules: list[Rule] = [(BASE_STATE, 0, BASE_STATE)]
    zero_probs: dict[Rule, Fraction] = {}
    pos_rules: list[Rule] = []
    pos_probs: dict[Rule, Fraction] = {}

    def add_state(name: str, probabilistic: bool):
        states.append(name)
        zero_rules.append((name, 0, name))
        if probabilistic:
            zero_probs[(name, 0, name)] = Fraction(1)
        else:
            controlled.add(name)

    def add_pos(rule: Rule, p: Fraction):
        if rule in pos_probs:
            pos_probs[rule] += p
        else:
            pos_rules.append(rule)
            pos_probs[rule] = p

    for name, outcomes in zip(g.action_names, g.actions):
        act = "act_%s" % name
        add_state(act, probabilistic=True)
        pos_rules.append((BASE_STATE, 0, act))
        for oi, (delta, p) in enumerate(outcomes):
            if delta == 0:
                add_pos((act, 0, BASE_STATE), p)
                continue
            step = 1 if delta > 0 else -1
            prev = act
            for k in range(abs(delta)):
                last = k == abs(delta) - 1
                nxt = BASE_STATE if last else "%s_o%d_%d" % (act, oi, k)
                if not last:
                    add_state(nxt, probabilistic=True)
                add_pos((prev, step, nxt), p if prev == act else Fraction(1))
                prev = nxt
    return OcMdp(tuple(states), frozenset(controlled), tuple(zero_rules),
                 tuple(pos_rules), zero_probs, pos_probs, ()).validate()
