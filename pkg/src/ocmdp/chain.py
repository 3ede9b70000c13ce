"""Exact analytics for finite Markov chains induced by memoryless
deterministic strategies: bottom SCCs, stationary distributions, return
rewards, negative-cycle detection and absorption probabilities."""

from __future__ import annotations

from fractions import Fraction

from .linalg import solve_sparse
from .model import FiniteMdp, MdStrategy, ModelError


class MarkovChain:
    """A finite Markov chain with a reward per state."""

    def __init__(self, names, succ, probs, reward):
        self.names = tuple(names)
        self.succ = tuple(tuple(s) for s in succ)
        self.probs = dict(probs)
        self.reward = tuple(reward)
        for u in range(len(self.names)):
            total = Fraction(0)
            for w in self.succ[u]:
                p = self.probs[(u, w)]
                if p <= 0:
                    raise ModelError("non-positive chain probability")
                total += p
            if total != 1:
                raise ModelError("chain row %r does not sum to 1" % (self.names[u],))

    def __len__(self):
        return len(self.names)


class Bscc:
    """A bottom strongly connected component of a chain."""

    def __init__(self, chain: MarkovChain, members):
        self.chain = chain
        self.members = tuple(sorted(members))
        self._member_set = frozenset(members)

    def __contains__(self, v: int) -> bool:
        return v in self._member_set

    def __len__(self):
        return len(self.members)


def induced_chain(m: FiniteMdp, s: MdStrategy) -> MarkovChain:
    """The chain D<sigma>: controlled vertices follow the strategy with
    probability 1, probabilistic vertices keep their distribution."""
    s.validate(m)
    succ = []
    probs = {}
    for u in range(len(m)):
        if u in m.controlled:
            w = s.choice[u]
            succ.append((w,))
            probs[(u, w)] = Fraction(1)
        else:
            succ.append(m.succ[u])
            for w in m.succ[u]:
                probs[(u, w)] = m.probs[(u, w)]
    return MarkovChain(m.names, succ, probs, m.reward)


def strongly_connected_components(n: int, succ) -> list[list[int]]:
    """Tarjan's algorithm, iterative.  Components are returned with
    members sorted, ordered by their smallest member."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, ei = work.pop()
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for j in range(ei, len(succ[v])):
                w = succ[v][j]
                if index[w] == -1:
                    work.append((v, j + 1))
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    sccs.sort(key=lambda c: c[0])
    return sccs


def bsccs(c: MarkovChain) -> list[Bscc]:
    """All bottom SCCs, ordered by smallest member index."""
    comps = strongly_connected_components(len(c), c.succ)
    out = []
    for comp in comps:
        cs = set(comp)
        if all(w in cs for v in comp for w in c.succ[v]):
            out.append(Bscc(c, comp))
    return out


def stationary_distribution(b: Bscc) -> dict[int, Fraction]:
    """The unique invariant distribution of a BSCC, solved exactly."""
    members = b.members
    pos = {v: i for i, v in enumerate(members)}
    n = len(members)
    c = b.chain
    rows: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    rhs = [Fraction(0)] * n
    # mu_j = sum_i mu_i P(i,j) for all j but one, replaced by sum mu = 1.
    for j, v in enumerate(members):
        if j == 0:
            for i in range(n):
                rows[0][i] = Fraction(1)
            rhs[0] = Fraction(1)
            continue
        rows[j][j] = Fraction(1)
        for u in members:
            if v in c.succ[u]:
                i = pos[u]
                rows[j][i] = rows[j].get(i, Fraction(0)) - c.probs[(u, v)]
    sol = solve_sparse(rows, rhs, n)
    mu = {v: sol[pos[v]] for v in members}
    assert all(x > 0 for x in mu.values()) and sum(mu.values()) == 1
    return mu


def mean_reward_of_bscc(b: Bscc) -> Fraction:
    mu = stationary_distribution(b)
    return sum((mu[v] * b.chain.reward[v] for v in b.members), Fraction(0))


def expected_return_reward(b: Bscc, u: int) -> Fraction:
    """Expected reward accumulated between consecutive visits to u,
    the reward of u itself counted once at the start."""
    if u not in b:
        raise ModelError("pivot outside the BSCC")
    c = b.chain
    others = [v for v in b.members if v != u]
    pos = {v: i for i, v in enumerate(others)}
    n = len(others)
    rows: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    rhs = [Fraction(0)] * n
    # g(v) = r(v) + sum_{w != u} P(v,w) g(w), expected reward v -> u.
    for v in others:
        i = pos[v]
        rows[i][i] = Fraction(1)
        rhs[i] = Fraction(c.reward[v])
        for w in c.succ[v]:
            if w != u:
                rows[i][pos[w]] = rows[i].get(pos[w], Fraction(0)) - c.probs[(v, w)]
    g = solve_sparse(rows, rhs, n) if n else []
    er = Fraction(c.reward[u])
    for w in c.succ[u]:
        if w != u:
            er += c.probs[(u, w)] * g[pos[w]]
    return er


def has_negative_return_cycle(b: Bscc) -> bool:
    """True iff some cycle inside the BSCC has negative reward sum,
    i.e. the return reward is negative with positive probability."""
    c = b.chain
    members = b.members
    dist = {v: 0 for v in members}
    for _ in range(len(members)):
        changed = False
        for v in members:
            dv = dist[v]
            w_cost = c.reward[v]
            for w in c.succ[v]:
                if dv + w_cost < dist[w]:
                    dist[w] = dv + w_cost
                    changed = True
        if not changed:
            return False
    for v in members:
        for w in c.succ[v]:
            if dist[v] + c.reward[v] < dist[w]:
                return True
    return False


def cn_holds_in_bscc(b: Bscc) -> bool:
    """Whether runs inside the BSCC accumulate arbitrarily negative
    reward almost surely: the expected return reward at the pivot is
    non-positive and a negative return is possible."""
    pivot = b.members[0]
    if not has_negative_return_cycle(b):
        return False
    return expected_return_reward(b, pivot) <= 0


def reach_probabilities(c: MarkovChain, targets) -> list[Fraction]:
    """Exact probability of ever hitting the target set, per state."""
    n = len(c)
    tset = set(targets)
    # Backward reachability: states with a path into the target set.
    pred: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        for w in c.succ[u]:
            pred[w].append(u)
    can = set(tset)
    work = list(tset)
    while work:
        v = work.pop()
        for u in pred[v]:
            if u not in can:
                can.add(u)
                work.append(u)
    mid = sorted(can - tset)
    pos = {v: i for i, v in enumerate(mid)}
    rows: list[dict[int, Fraction]] = [dict() for _ in mid]
    rhs = [Fraction(0)] * len(mid)
    for v in mid:
        i = pos[v]
        rows[i][i] = Fraction(1)
        for w in c.succ[v]:
            p = c.probs[(v, w)]
            if w in tset:
                rhs[i] += p
            elif w in pos:
                rows[i][pos[w]] = rows[i].get(pos[w], Fraction(0)) - p
    sol = solve_sparse(rows, rhs, len(mid)) if mid else []
    out = [Fraction(0)] * n
    for v in tset:
        out[v] = Fraction(1)
    for v in mid:
        out[v] = sol[pos[v]]
    return out


def reach_probability_in_chain(c: MarkovChain, source: int, targets) -> Fraction:
    return reach_probabilities(c, targets)[source]
