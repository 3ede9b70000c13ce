"""The qualitative non-positive mean payoff procedure: the set of
vertices from which some memoryless strategy keeps the limiting average
reward non-positive almost surely, plus one witnessing strategy."""

from __future__ import annotations

from . import chain as chain_mod
from .chain import bsccs, induced_chain
from .finmdp import _almost_sure_reach, min_mean_md
from .model import FiniteMdp, MdStrategy, ModelError


def md_from_edges(t, m: FiniteMdp) -> MdStrategy:
    """Assemble a memoryless strategy honoring the accumulated edge set;
    unconstrained controlled vertices get their lowest successor."""
    choice: dict[int, int] = {}
    for u, v in t:
        if u in choice and choice[u] != v:
            raise ModelError("conflicting edges for vertex %r" % m.names[u])
        choice[u] = v
    for u in m.controlled:
        if u not in choice:
            choice[u] = min(m.succ[u])
    return MdStrategy(choice).validate(m)


def qual_mp(m: FiniteMdp, _trace=None) -> tuple[frozenset[int], MdStrategy]:
    """Peel almost-surely non-positive regions: repeatedly pick a vertex,
    minimize the expected mean under the working reward, cut off a
    non-positive bottom component and absorb everything that reaches it
    with probability one."""
    n = len(m)
    pending = list(range(n))          # V?, kept sorted, lowest index pops
    area: set[int] = set()            # A
    edges: set[tuple[int, int]] = set()  # T
    hat = list(m.reward)              # working reward
    rounds = 0
    while pending:
        rounds += 1
        assert rounds <= 2 * n, "peeling loop exceeded its bound"
        s = pending.pop(0)
        if _trace is not None:
            _trace.append(s)
        work = FiniteMdp(m.names, m.controlled, m.succ, m.probs, tuple(hat))
        rho, value = min_mean_md(work, s)
        if value > 0:
            continue
        ch = induced_chain(work, rho)
        reach_s = _forward_reachable(ch, s)
        candidates = []
        for b in bsccs(ch):
            if b.members[0] in reach_s and not (set(b.members) & area):
                if chain_mod.mean_reward_of_bscc(b) <= 0:
                    candidates.append(b)
        assert candidates, "no witness component despite non-positive value"
        comp = min(candidates, key=lambda b: b.members[0])
        targets = set(comp.members) | area
        prob1, tau = _almost_sure_reach(m, targets)
        for u in m.controlled:
            if u in comp:
                edges.add((u, rho.choice[u]))
            elif u in prob1 and u not in targets:
                edges.add((u, tau[u]))
        area |= prob1
        for u in area:
            hat[u] = 0
        pending = [v for v in pending if v not in area]
        if s not in area:
            pending.append(s)
            pending.sort()
    return frozenset(area), md_from_edges(edges, m)


def _forward_reachable(ch, s: int) -> set[int]:
    seen = {s}
    work = [s]
    while work:
        v = work.pop()
        for w in ch.succ[v]:
            if w not in seen:
                seen.add(w)
                work.append(w)
    return seen
