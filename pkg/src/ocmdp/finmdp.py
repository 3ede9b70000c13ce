"""Optimal reachability and minimum mean payoff for finite MDPs: the two
subroutines the qualitative procedures are built on, plus maximal end
component decomposition used by the strategy synthesis."""

from __future__ import annotations

from fractions import Fraction

from . import chain as chain_mod
from .chain import MarkovChain, bsccs, induced_chain, reach_probabilities
from .linalg import solve_sparse
from .model import FiniteMdp, MdStrategy, ModelError

_MAX_PI_ROUNDS = 100000


def _predecessors(m: FiniteMdp) -> list[list[int]]:
    pred: list[list[int]] = [[] for _ in range(len(m))]
    for u in range(len(m)):
        for w in m.succ[u]:
            pred[w].append(u)
    return pred


def _graph_can_reach(m: FiniteMdp, targets) -> set[int]:
    pred = _predecessors(m)
    seen = set(targets)
    work = list(targets)
    while work:
        v = work.pop()
        for u in pred[v]:
            if u not in seen:
                seen.add(u)
                work.append(u)
    return seen


def _almost_sure_reach(m: FiniteMdp, targets) -> tuple[frozenset[int], dict[int, int]]:
    """Vertices from which some strategy reaches the target set with
    probability 1, plus a memoryless witness (attractor ranks give the
    choices).  Pure graph fixpoint, no arithmetic."""
    tset = frozenset(targets)
    region = set(range(len(m)))
    while True:
        # Least fixpoint inside the current candidate region.
        rank: dict[int, int] = {v: 0 for v in tset}
        frontier = set(tset)
        level = 0
        while frontier:
            level += 1
            new = set()
            for v in region:
                if v in rank:
                    continue
                if v in m.controlled:
                    if any(w in rank for w in m.succ[v]):
                        new.add(v)
                else:
                    if (all(w in region for w in m.succ[v])
                            and any(w in rank for w in m.succ[v])):
                        new.add(v)
            for v in new:
                rank[v] = level
            frontier = new
        reached = set(rank)
        if reached == region:
            break
        region = reached
    witness: dict[int, int] = {}
    for v in region:
        if v in m.controlled and v not in tset:
            witness[v] = min(w for w in m.succ[v] if w in rank and rank[w] < rank[v])
    return frozenset(region), witness


def almost_sure_reach_set(m: FiniteMdp, targets) -> frozenset[int]:
    return _almost_sure_reach(m, targets)[0]


def max_reach(m: FiniteMdp, targets) -> tuple[MdStrategy, list[Fraction]]:
    """Optimal reachability probabilities and a single memoryless
    deterministic strategy attaining them from every vertex.

    Qualitative preprocessing (probability-0 and probability-1 sets by
    graph fixpoints) pins the boundary; the rest is exact policy
    iteration whose evaluations are absorption probabilities."""
    tset = frozenset(targets)
    n = len(m)
    can = _graph_can_reach(m, tset)          # value > 0 exactly here
    sure, witness = _almost_sure_reach(m, tset)
    choice: dict[int, int] = {}
    for v in m.controlled:
        if v in witness:
            choice[v] = witness[v]
        elif v in can and v not in tset:
            # start from any choice that keeps the target reachable
            inside = [w for w in m.succ[v] if w in can]
            choice[v] = min(inside) if inside else min(m.succ[v])
        else:
            choice[v] = min(m.succ[v])
    frozen = sure | (set(range(n)) - can) | tset
    for _ in range(_MAX_PI_ROUNDS):
        vals = reach_probabilities(induced_chain(m, MdStrategy(choice)), tset)
        improved = False
        for v in sorted(m.controlled):
            if v in frozen:
                continue
            best_w = choice[v]
            best = vals[best_w]
            for w in m.succ[v]:
                if vals[w] > best:
                    best, best_w = vals[w], w
            if best > vals[choice[v]]:
                choice[v] = best_w
                improved = True
        if not improved:
            break
    else:
        raise ModelError("policy iteration failed to converge")
    for v in sure:
        assert vals[v] == 1
    return MdStrategy(choice), vals


# ---------------------------------------------------------------------------
# Minimum mean payoff


def _policy_gain_bias(m: FiniteMdp, ch: MarkovChain):
    """Gain and canonical bias of the chain of one policy.

    The gain is the BSCC mean where absorbed and its expectation over
    absorption elsewhere; the bias is pinned by a zero stationary
    average inside every BSCC."""
    n = len(ch)
    comps = bsccs(ch)
    gain: list[Fraction] = [Fraction(0)] * n
    in_bscc = [False] * n
    means = []
    for b in comps:
        mu = chain_mod.stationary_distribution(b)
        a = sum((mu[v] * ch.reward[v] for v in b.members), Fraction(0))
        means.append((b, mu, a))
        for v in b.members:
            gain[v] = a
            in_bscc[v] = True
    transient = [v for v in range(n) if not in_bscc[v]]
    pos = {v: i for i, v in enumerate(transient)}
    if transient:
        rows: list[dict[int, Fraction]] = [dict() for _ in transient]
        rhs = [Fraction(0)] * len(transient)
        for v in transient:
            i = pos[v]
            rows[i][i] = Fraction(1)
            for w in ch.succ[v]:
                p = ch.probs[(v, w)]
                if in_bscc[w]:
                    rhs[i] += p * gain[w]
                else:
                    rows[i][pos[w]] = rows[i].get(pos[w], Fraction(0)) - p
        sol = solve_sparse(rows, rhs, len(transient))
        for v in transient:
            gain[v] = sol[pos[v]]
    bias: list[Fraction] = [Fraction(0)] * n
    for b, mu, a in means:
        members = b.members
        bpos = {v: i for i, v in enumerate(members)}
        k = len(members)
        rows = [dict() for _ in range(k)]
        rhs = [Fraction(0)] * k
        # h(v) - sum P h = r(v) - a on the BSCC; one row replaced by
        # the canonical normalization mu . h = 0.
        for j, v in enumerate(members):
            if j == 0:
                for w in members:
                    rows[0][bpos[w]] = mu[w]
                rhs[0] = Fraction(0)
                continue
            rows[j][j] = rows[j].get(j, Fraction(0)) + 1
            rhs[j] = Fraction(ch.reward[v]) - a
            for w in ch.succ[v]:
                rows[j][bpos[w]] = rows[j].get(bpos[w], Fraction(0)) - ch.probs[(v, w)]
        sol = solve_sparse(rows, rhs, k)
        for v in members:
            bias[v] = sol[bpos[v]]
    if transient:
        rows = [dict() for _ in transient]
        rhs = [Fraction(0)] * len(transient)
        for v in transient:
            i = pos[v]
            rows[i][i] = Fraction(1)
            rhs[i] = Fraction(ch.reward[v]) - gain[v]
            for w in ch.succ[v]:
                p = ch.probs[(v, w)]
                if in_bscc[w]:
                    rhs[i] += p * bias[w]
                else:
                    rows[i][pos[w]] = rows[i].get(pos[w], Fraction(0)) - p
        sol = solve_sparse(rows, rhs, len(transient))
        for v in transient:
            bias[v] = sol[pos[v]]
    return gain, bias


def min_mean_full(m: FiniteMdp) -> tuple[MdStrategy, list[Fraction], list[Fraction]]:
    """Multichain policy iteration minimizing the expected limiting
    average reward, with exact gain/bias evaluation.  Returns the
    strategy (optimal from every vertex) together with the optimal gain
    vector and a dual-feasible bias vector."""
    choice = {v: min(m.succ[v]) for v in m.controlled}
    for _ in range(_MAX_PI_ROUNDS):
        gain, bias = _policy_gain_bias(m, induced_chain(m, MdStrategy(choice)))
        switched = False
        for v in sorted(m.controlled):
            best_w, best = choice[v], gain[choice[v]]
            for w in m.succ[v]:
                if gain[w] < best:
                    best, best_w = gain[w], w
            if best < gain[choice[v]]:
                choice[v] = best_w
                switched = True
        if switched:
            continue
        for v in sorted(m.controlled):
            cur = bias[v]
            best_w, best = choice[v], cur
            for w in m.succ[v]:
                if gain[w] == gain[v]:
                    cand = Fraction(m.reward[v]) - gain[v] + bias[w]
                    if cand < best:
                        best, best_w = cand, w
            if best < cur:
                choice[v] = best_w
                switched = True
        if not switched:
            return MdStrategy(choice), gain, bias
    raise ModelError("policy iteration failed to converge")


def min_mean_md(m: FiniteMdp, start: int) -> tuple[MdStrategy, Fraction]:
    """A memoryless deterministic strategy minimizing the expected
    limiting average reward from `start`, plus that minimum."""
    sigma, gain, _ = min_mean_full(m)
    return sigma, gain[start]


def expected_mean(m: FiniteMdp, s: MdStrategy, start: int) -> Fraction:
    """Exact expected limiting average reward of a fixed strategy:
    BSCC means weighted by the absorption probabilities."""
    ch = induced_chain(m, s)
    total = Fraction(0)
    absorbed = Fraction(0)
    for b in bsccs(ch):
        p = reach_probabilities(ch, b.members)[start]
        if p:
            total += p * chain_mod.mean_reward_of_bscc(b)
            absorbed += p
    assert absorbed == 1
    return total


# ---------------------------------------------------------------------------
# Maximal end components


def maximal_end_components(m: FiniteMdp) -> list[frozenset[int]]:
    """Maximal end components, ordered by smallest member.  Probabilistic
    vertices keep their whole distribution inside; controlled vertices
    need at least one internal edge."""
    alive = set(range(len(m)))
    while True:
        # Probabilistic vertices need every successor alive.
        dead = {v for v in alive
                if (v not in m.controlled and any(w not in alive for w in m.succ[v]))
                or all(w not in alive for w in m.succ[v])}
        if dead:
            alive -= dead
            continue
        order = sorted(alive)
        pos = {v: i for i, v in enumerate(order)}
        adj = [[pos[w] for w in m.succ[v] if w in alive] for v in order]
        comps = chain_mod.strongly_connected_components(len(order), adj)
        scc_of = {}
        for ci, comp in enumerate(comps):
            for i in comp:
                scc_of[order[i]] = ci
        dead = set()
        for v in alive:
            inside = [w for w in m.succ[v] if w in alive and scc_of[w] == scc_of[v]]
            if v not in m.controlled:
                if any(w not in alive or scc_of[w] != scc_of[v] for w in m.succ[v]):
                    dead.add(v)
            if not inside:
                dead.add(v)
        if dead:
            alive -= dead
            continue
        return sorted((frozenset(order[i] for i in comp) for comp in comps), key=min)


def restrict_to_mec(m: FiniteMdp, members: frozenset[int]) -> tuple[FiniteMdp, list[int]]:
    """The sub-MDP induced by a MEC; controlled vertices keep only the
    internal edges.  Returns the sub-MDP and the original indices."""
    order = sorted(members)
    pos = {v: i for i, v in enumerate(order)}
    succ = []
    probs = {}
    for v in order:
        if v in m.controlled:
            inside = [pos[w] for w in m.succ[v] if w in members]
        else:
            inside = [pos[w] for w in m.succ[v]]
            for w in m.succ[v]:
                probs[(pos[v], pos[w])] = m.probs[(v, w)]
        succ.append(tuple(inside))
    sub = FiniteMdp(tuple(m.names[v] for v in order),
                    frozenset(pos[v] for v in order if v in m.controlled),
                    tuple(succ), probs,
                    tuple(m.reward[v] for v in order)).validate()
    return sub, order
