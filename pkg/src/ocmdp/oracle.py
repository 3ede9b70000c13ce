"""Independent verification machinery: reproducible Monte-Carlo
simulation of one-counter MDPs, exhaustive strategy enumeration oracles
and monotone truncated termination lower bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import chain as chain_mod
from .chain import bsccs, cn_holds_in_bscc, induced_chain, reach_probabilities
from .finmdp import max_reach
from .model import (CmdStrategy, Config, CounterRegularStrategy, FiniteMdp,
                    MdStrategy, ModelError, OcMdp, config_vertex_name,
                    to_boundaryless_reward_mdp, truncated_unfolding)

MASK64 = (1 << 64) - 1


class SplitMix64:
    """The standard 64-bit splitmix generator, used counter-style: the
    stream is a pure function of (seed, run, step), so every run owns an
    independent substream and results are identical across platforms."""

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int, run: int = 0):
        self.state = (seed ^ (run * 0xBF58476D1CE4E5B9 + 0x94D049BB133111EB)) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection; exact."""
        limit = (MASK64 + 1) - ((MASK64 + 1) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound


@dataclass
class SimReport:
    runs: int
    terminated: int
    terminated_in_f: int
    min_counter_seen: int
    step_cap_hits: int
    seed: int

    def lines(self) -> str:
        return ("runs=%d\nterminated=%d\nterminated_in_F=%d\n"
                "min_counter_seen=%d\nstep_cap_hits=%d\nseed=%d\n"
                % (self.runs, self.terminated, self.terminated_in_f,
                   self.min_counter_seen, self.step_cap_hits, self.seed))


Strategy = Union[CmdStrategy, CounterRegularStrategy]


def _sample(rng: SplitMix64, rules, probs, denom: int) -> tuple:
    x = rng.below(denom)
    acc = 0
    for r in rules:
        acc += probs[r].numerator * (denom // probs[r].denominator)
        if x < acc:
            return r
    raise AssertionError("distribution did not cover the draw")


def simulate(a: OcMdp, strategy: Optional[Strategy], start: Config, steps: int,
             runs: int, seed: int, boundaryless: bool = False) -> SimReport:
    """Monte-Carlo trajectories under a fixed strategy.  Bounded runs
    stop at the first visit to counter zero; boundaryless runs use the
    positive rules everywhere and only track the minimum counter.
    Deterministic for a given seed; rule draws are exact (uniform below
    the common denominator, by rejection)."""
    a.validate()
    finals = set(a.finals)
    denom = {q: math.lcm(*(p.denominator
                           for p in (a.positive_probs[r] for r in a.positive_out(q))))
             for q in a.states if q not in a.controlled}
    terminated = terminated_in_f = cap_hits = 0
    min_seen = start.counter
    for run in range(runs):
        rng = SplitMix64(seed, run + 1)
        q, c = start.state, start.counter
        done = False
        taken = 0
        while True:
            if c < min_seen:
                min_seen = c
            if not boundaryless and c == 0:
                terminated += 1
                if q in finals:
                    terminated_in_f += 1
                done = True
                break
            if taken == steps:
                break
            if q in a.controlled:
                if strategy is None:
                    raise ModelError("controlled state %r without a strategy" % q)
                if isinstance(strategy, CmdStrategy):
                    rule = strategy.selector[q]
                else:
                    rule = strategy.rule_at(q, max(c, 1))
            else:
                rule = _sample(rng, a.positive_out(q), a.positive_probs, denom[q])
            q, c = rule[2], c + rule[1]
            taken += 1
        if not done:
            cap_hits += 1
    return SimReport(runs, terminated, terminated_in_f, min_seen, cap_hits, seed)


# ---------------------------------------------------------------------------
# Exhaustive oracles


def enumerate_cmd(a: OcMdp, bound: int = 10 ** 6):
    """All counter-oblivious selectors, lexicographic in state order."""
    ctrl = [q for q in a.states if q in a.controlled]
    space = 1
    for q in ctrl:
        space *= len(a.positive_out(q))
    if space > bound:
        raise ModelError("selector space %d exceeds the bound %d" % (space, bound))
    for combo in itertools.product(*(a.positive_out(q) for q in ctrl)):
        yield CmdStrategy(dict(zip(ctrl, combo)))


def cmd_cn_values(a: OcMdp, s: CmdStrategy) -> dict[str, Fraction]:
    """Exact per-state probability, under a fixed selector, that the
    counter covers every negative value: the chance of reaching a
    cover-negative bottom component of the induced boundaryless chain."""
    m = to_boundaryless_reward_mdp(a)
    s.validate(a)
    n_states = len(a.states)
    choice = {}
    for v in m.controlled:
        if v < n_states:
            q = a.states[v]
            choice[v] = n_states + a.positive_rules.index(s.selector[q])
        else:
            choice[v] = m.succ[v][0]
    ch = induced_chain(m, MdStrategy(choice))
    good = []
    for b in bsccs(ch):
        if cn_holds_in_bscc(b):
            good.extend(b.members)
    if not good:
        return {q: Fraction(0) for q in a.states}
    vals = reach_probabilities(ch, good)
    return {q: vals[a.state_index(q)] for q in a.states}


def cmd_cn_value(a: OcMdp, s: CmdStrategy, p: str) -> Fraction:
    return cmd_cn_values(a, s)[p]


def truncated_termination_lower_bound(a: OcMdp, start: Config, cap: int) -> Fraction:
    """Optimal termination probability of the truncation that blocks
    counter increments above the cap: exact, nondecreasing in the cap,
    and a lower bound on the true optimal termination probability."""
    if cap < max(1, start.counter):
        raise ModelError("cap below the start counter")
    trunc = truncated_unfolding(a, cap, absorb_above=False)
    targets = [trunc.vertex_index(config_vertex_name(q, 0)) for q in a.states]
    _, vals = max_reach(trunc, targets)
    return vals[trunc.vertex_index(config_vertex_name(start.state, start.counter))]


def brute_force_qual_mp(m: FiniteMdp, bound: int = 10 ** 6) -> frozenset[int]:
    """Ground truth for the qualitative mean-payoff set: a vertex
    qualifies iff some enumerated memoryless strategy reaches only
    non-positive-mean bottom components from it."""
    ctrl = sorted(m.controlled)
    space = 1
    for v in ctrl:
        space *= len(m.succ[v])
    if space > bound:
        raise ModelError("strategy space %d exceeds the bound %d" % (space, bound))
    result: set[int] = set()
    for combo in itertools.product(*(m.succ[v] for v in ctrl)):
        ch = induced_chain(m, MdStrategy(dict(zip(ctrl, combo))))
        bad = set()
        for b in bsccs(ch):
            if chain_mod.mean_reward_of_bscc(b) > 0:
                bad.update(b.members)
        for v in range(len(m)):
            if v in result:
                continue
            seen = {v}
            work = [v]
            ok = True
            while work and ok:
                x = work.pop()
                if x in bad:
                    ok = False
                    break
                for y in ch.succ[x]:
                    if y not in seen:
                        seen.add(y)
                        work.append(y)
            if ok:
                result.add(v)
    return frozenset(result)


def brute_force_cn_values(a: OcMdp, bound: int = 10 ** 6) -> dict[str, Fraction]:
    """Per-state best cover-negative probability over all selectors."""
    best = {q: Fraction(0) for q in a.states}
    for s in enumerate_cmd(a, bound):
        vals = cmd_cn_values(a, s)
        for q in a.states:
            if vals[q] > best[q]:
                best[q] = vals[q]
    return best
