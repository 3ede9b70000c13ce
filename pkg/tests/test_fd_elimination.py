"""Memory elimination stressed on randomly wired finite-memory
strategies: whatever wins with memory must still win flattened."""

from fractions import Fraction

from randgen import Rng, random_mdp
from ocmdp.chain import (MarkovChain, bsccs, cn_holds_in_bscc,
                         expected_return_reward, has_negative_return_cycle,
                         induced_chain)
from ocmdp.cn import fd_to_md
from ocmdp.model import FdStrategy


def random_fd(m, seed, n_mem=2):
    rng = Rng(seed)
    mems = ("boot",) + tuple("k%d" % i for i in range(n_mem))
    step = {}
    for k in mems:
        for v in range(len(m)):
            step[(k, v)] = mems[1 + rng.g.below(n_mem)]
    choice = {}
    for k in mems:
        for v in m.controlled:
            choice[(v, k)] = rng.choice(m.succ[v])
    return FdStrategy(mems, "boot", step, choice).validate(m)


def product_chain(m, fd, start):
    states = {}
    order = []

    def intern(x):
        if x not in states:
            states[x] = len(order)
            order.append(x)
        return states[x]

    intern((start, fd.step[(fd.initial, start)]))
    succ = []
    probs = {}
    pos = 0
    while pos < len(order):
        u, k = order[pos]
        outs = [(fd.choice[(u, k)], Fraction(1))] if u in m.controlled \
            else [(w, m.probs[(u, w)]) for w in m.succ[u]]
        row = []
        for w, p in outs:
            j = intern((w, fd.step[(k, w)]))
            if j not in row:
                row.append(j)
            probs[(pos, j)] = probs.get((pos, j), Fraction(0)) + p
        succ.append(tuple(row))
        pos += 1
    return MarkovChain(["x%d" % i for i in range(len(order))], succ, probs,
                       [m.reward[u] for u, _ in order])


def winning_starts(m, fd):
    good = []
    for s in range(len(m)):
        ch = product_chain(m, fd, s)
        ok = all(has_negative_return_cycle(b)
                 and expected_return_reward(b, b.members[0]) <= 0
                 for b in bsccs(ch))
        if ok:
            good.append(s)
    return good


def test_random_memory_strategies_flatten():
    verified = 0
    for seed in range(60):
        m = random_mdp(seed, max_v=5, max_deg=3)
        fd = random_fd(m, seed + 1000)
        good = winning_starts(m, fd)
        if not good:
            continue
        sigma = fd_to_md(m, fd)
        ch = induced_chain(m, sigma)
        for s in good:
            seen = {s}
            work = [s]
            while work:
                x = work.pop()
                for y in ch.succ[x]:
                    if y not in seen:
                        seen.add(y)
                        work.append(y)
            for b in bsccs(ch):
                if b.members[0] in seen:
                    assert cn_holds_in_bscc(b), (seed, s)
            verified += 1
    assert verified >= 20
