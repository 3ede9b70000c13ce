from fractions import Fraction

import pytest

from randgen import random_mdp, random_ocmdp
from ocmdp.chain import bsccs, cn_holds_in_bscc, induced_chain, \
    reach_probabilities
from ocmdp.cn import (cn_value_one_states, decreasing_expand,
                      fd_to_md, ocmdp_cn, qual_cn, qual_cn_via_expansion,
                      quad_name, solve_cn, triple_name)
from ocmdp.model import (FdStrategy, MdStrategy, ModelError, parse_mdp,
                         parse_ocmdp)
from ocmdp.oracle import brute_force_cn_values

ONE = Fraction(1)


def _forward(ch, v):
    seen = {v}
    work = [v]
    while work:
        x = work.pop()
        for y in ch.succ[x]:
            if y not in seen:
                seen.add(y)
                work.append(y)
    return seen


def assert_cn_winning(m, area, sigma):
    ch = induced_chain(m, sigma)
    for v in area:
        reach = _forward(ch, v)
        for b in bsccs(ch):
            if b.members[0] in reach:
                assert cn_holds_in_bscc(b)


# ---------------------------------------------------------------------------
# decreasing expansion


def test_expand_full_count_single_vertex():
    m = parse_mdp("mdp\nvertex v P r=-1\nedge v v 1/1\n")
    dp = decreasing_expand(m)
    assert len(dp) == 19  # 9 triples, 9 quads, the sink


def test_expand_checkpoint_decrease():
    m = parse_mdp("mdp\nvertex u P r=-1\nedge u u 1/1\n")
    dp = decreasing_expand(m, reachable_only=True)
    tri = dp.vertex_index(triple_name("u", 1, 0))
    quad = dp.vertex_index(quad_name("u", 1, 0, "u"))
    nxt = dp.vertex_index(triple_name("u", 0, 1))
    assert dp.succ[tri] == (quad,)
    assert dp.succ[quad] == (nxt,)
    assert dp.reward[quad] == -1


def test_expand_positive_reaches_sink():
    m = parse_mdp("mdp\nvertex u P r=1\nedge u u 1/1\n")
    dp = decreasing_expand(m, reachable_only=True)
    start = dp.vertex_index(triple_name("u", 1, 0))
    reach = set()
    work = [start]
    while work:
        v = work.pop()
        if v in reach:
            continue
        reach.add(v)
        work.extend(dp.succ[v])
    assert dp.vertex_index("div") in reach


# ---------------------------------------------------------------------------
# qualitative set and witnesses


def test_qual_cn_single_vertices():
    zero = parse_mdp("mdp\nvertex v P r=0\nedge v v 1/1\n")
    assert qual_cn(zero)[0] == frozenset()
    neg = parse_mdp("mdp\nvertex v P r=-1\nedge v v 1/1\n")
    assert qual_cn(neg)[0] == frozenset({0})


def test_qual_cn_e6(e6):
    area, sigma = qual_cn(e6)
    assert area == frozenset({0, 1, 2})
    assert sigma.choice[0] == 1
    assert_cn_winning(e6, area, sigma)


def test_qual_cn_mean_zero_balanced():
    # probabilistic branch between a +1 and a -1 loop: mean zero with a
    # negative cycle, so the objective holds almost surely
    m = parse_mdp("mdp\nvertex v P r=0\nvertex p P r=1\nvertex n P r=-1\n"
                  "edge v p 1/2\nedge v n 1/2\nedge p v 1/1\nedge n v 1/1\n")
    area, sigma = qual_cn(m)
    assert area == frozenset({0, 1, 2})
    assert_cn_winning(m, area, sigma)


def test_qual_cn_conservative_zero_component():
    # a zero-reward loop reachable alongside positive chains: mean zero
    # everywhere but no negative cycle anywhere
    m = parse_mdp("mdp\nvertex z N r=0\nvertex a P r=1\n"
                  "edge z z\nedge z a\nedge a z 1/1\n")
    area, _ = qual_cn(m)
    assert area == frozenset()


def test_qual_cn_unsupportable_negative_cycle():
    # the a-b cycle is negative, but probabilistic closure drags every
    # end component containing it through a +3 climb: mean 1/7 > 0, and
    # the only zero-mean component is the conservative z loop.  Nothing
    # wins despite minimal mean zero and a negative cycle in the graph.
    m = parse_mdp("mdp\nvertex a P r=-1\nvertex b P r=0\nvertex c P r=1\n"
                  "vertex c1 P r=1\nvertex c2 P r=1\nvertex z N r=0\n"
                  "edge a b 1/2\nedge a c 1/2\nedge b a 1/1\nedge c c1 1/1\n"
                  "edge c1 c2 1/1\nedge c2 z 1/1\nedge z z\nedge z a\n")
    area, _ = qual_cn(m)
    assert area == frozenset()
    for w in m.succ[5]:
        ch = induced_chain(m, MdStrategy({5: w}))
        assert not any(cn_holds_in_bscc(b) for b in bsccs(ch))


def test_qual_cn_matches_expansion_route(e6):
    cases = [e6] + [random_mdp(seed, max_v=4, max_deg=2) for seed in range(10)]
    for m in cases:
        fast, s_fast = qual_cn(m)
        slow, s_slow = qual_cn_via_expansion(m)
        assert fast == slow
        assert_cn_winning(m, fast, s_fast)
        assert_cn_winning(m, slow, s_slow)


def test_qual_cn_strategy_is_decreasing():
    # every chain state reachable from the area admits a short negative path
    for seed in range(25):
        m = random_mdp(seed)
        area, sigma = qual_cn(m)
        if not area:
            continue
        ch = induced_chain(m, sigma)
        reach = set()
        for v in area:
            reach |= _forward(ch, v)
        bound = len(m) ** 2 + 1
        for u in reach:
            assert _short_negative_path(ch, u, bound), (seed, u)


def _short_negative_path(ch, u, bound):
    frontier = {(u, 0)}
    for _ in range(bound):
        nxt = set()
        for v, s in frontier:
            s2 = s + ch.reward[v]
            if s2 == -1:
                return True
            for w in ch.succ[v]:
                nxt.add((w, s2))
        frontier = nxt
    return False


# ---------------------------------------------------------------------------
# memory elimination


def _two_memory_fd(m):
    """Alternate between both choices of the single controlled vertex."""
    mems = ("boot", "k1", "k2")
    step = {}
    for k in mems:
        for v in range(len(m)):
            if k == "k1":
                step[(k, v)] = "k2"
            else:
                step[(k, v)] = "k1"
    choice = {}
    for k in mems:
        for v in m.controlled:
            choice[(v, k)] = m.succ[v][0] if k != "k2" else m.succ[v][1]
    return FdStrategy(mems, "boot", step, choice).validate(m)


def test_fd_to_md_identity_single_memory():
    m = parse_mdp("mdp\nvertex u N r=0\nvertex a P r=-1\n"
                  "edge u a\nedge u u\nedge a u 1/1\n")
    mems = ("boot", "k")
    step = {(k, v): "k" for k in mems for v in range(len(m))}
    choice = {(0, k): 1 for k in mems}
    fd = FdStrategy(mems, "boot", step, choice).validate(m)
    sigma = fd_to_md(m, fd)
    assert sigma.choice == {0: 1}


def test_fd_to_md_collapses_alternation():
    # both choices of u close objective-satisfying cycles
    m = parse_mdp("mdp\nvertex u N r=0\nvertex a P r=-1\nvertex b P r=-1\n"
                  "edge u a\nedge u b\nedge a u 1/1\nedge b u 1/1\n")
    fd = _two_memory_fd(m)
    sigma = fd_to_md(m, fd)
    assert sigma.choice[0] in (1, 2)
    assert_cn_winning(m, {0, 1, 2}, sigma)


def test_fd_to_md_rejects_losing_input():
    m = parse_mdp("mdp\nvertex u N r=1\nedge u u\n")
    mems = ("boot", "k")
    step = {(k, v): "k" for k in mems for v in range(len(m))}
    choice = {(0, k): 0 for k in mems}
    fd = FdStrategy(mems, "boot", step, choice).validate(m)
    with pytest.raises(ModelError):
        fd_to_md(m, fd)


# ---------------------------------------------------------------------------
# quantitative solver


def test_solve_cn_single_vertices():
    zero = parse_mdp("mdp\nvertex v P r=0\nedge v v 1/1\n")
    assert solve_cn(zero)[0] == [0]
    neg = parse_mdp("mdp\nvertex v P r=-1\nedge v v 1/1\n")
    assert solve_cn(neg)[0] == [1]


def test_solve_cn_half_gadget():
    m = parse_mdp("mdp\nvertex c P r=0\nvertex g P r=-1\nvertex b P r=1\n"
                  "edge c g 1/2\nedge c b 1/2\nedge g g 1/1\nedge b b 1/1\n")
    vals, sigma = solve_cn(m)
    assert vals[0] == Fraction(1, 2)
    assert vals[1] == 1 and vals[2] == 0


def test_ocmdp_cn_w1(w1, w1_up):
    vals, sel = ocmdp_cn(w1)
    assert vals == {"q": ONE}
    assert sel.selector == {}
    vals, _ = ocmdp_cn(w1_up)
    assert vals == {"q": Fraction(0)}


def test_ocmdp_cn_controlled_walk():
    a = parse_ocmdp("ocmdp\nstate q N\nzrule q 0 q\nprule q -1 q\nprule q +1 q\n")
    vals, sel = ocmdp_cn(a)
    assert vals == {"q": ONE}
    assert sel.selector["q"] == ("q", -1, "q")


def test_ocmdp_cn_matches_selector_oracle():
    for seed in range(40):
        a = random_ocmdp(seed)
        vals, _ = ocmdp_cn(a)
        assert vals == brute_force_cn_values(a), "seed %d" % seed


def test_cn_value_one_states_consistency():
    for seed in range(20):
        a = random_ocmdp(seed)
        vals, _ = ocmdp_cn(a)
        assert cn_value_one_states(a) == frozenset(q for q in a.states
                                                   if vals[q] == 1)


def test_solve_cn_value_one_exactly_on_area():
    for seed in range(25):
        m = random_mdp(seed)
        area, _ = qual_cn(m)
        vals, sigma = solve_cn(m)
        assert frozenset(v for v in range(len(m)) if vals[v] == 1) == area
        # the quantitative value equals the optimal reachability of the area
        ch = induced_chain(m, sigma)
        re = reach_probabilities(ch, area) if area else [Fraction(0)] * len(m)
        assert re == vals