from fractions import Fraction

import pytest

from randgen import random_ocmdp
from ocmdp.chain import induced_chain
from ocmdp.model import (Config, MdStrategy, ModelError, config_vertex_name,
                         parse_ocmdp, truncated_unfolding)
from ocmdp.termination import (BLACK, GRAY, RED, WHITE, Coloring,
                               bounded_reach_zero, build_periodic_ocmdp,
                               certify_st_strategy, check_color, nt_membership,
                               nt_value_one, parse_aautomaton, parse_cregular,
                               parse_rectangles, periodic_state_name,
                               serialize_aautomaton,
                               serialize_cregular, serialize_rectangles,
                               st_optimal_strategy, st_optvalone,
                               _evaluate_candidate, _st_candidates)


# ---------------------------------------------------------------------------
# non-selective termination


def test_nt_w1(w1):
    ans = nt_value_one(w1)
    assert ans.safe == frozenset({"q"})
    assert ans.strategy.selector == {}
    assert nt_membership(ans, "q", 10 ** 9)


def test_nt_qbd(qbd_quarter):
    ans = nt_value_one(qbd_quarter)
    assert ans.safe == frozenset({"s1", "s2"})
    for i in (0, 1, 5, 100):
        assert nt_membership(ans, "s1", i) and nt_membership(ans, "s2", i)


def test_nt_incrementer(incrementer):
    ans = nt_value_one(incrementer)
    assert ans.safe == frozenset()
    assert ans.thresholds == {"t": 0}
    assert not nt_membership(ans, "t", 1)
    assert nt_membership(ans, "t", 0)


def test_nt_threshold_state():
    # d can only march down from small counters through u, which dies above 1
    text = """ocmdp
state d N
state up P
zrule d 0 d
zrule up +1 up 1/1
prule d -1 d
prule d 0 up
prule up +1 up 1/1
"""
    a = parse_ocmdp(text)
    ans = nt_value_one(a)
    assert "d" in ans.safe and "up" in ans.thresholds
    assert ans.thresholds["up"] == 0


def test_nt_membership_is_cap_insensitive():
    # deciding small-counter membership through a taller truncation
    # changes nothing
    from ocmdp.finmdp import almost_sure_reach_set
    from ocmdp.cn import cn_value_one_states
    for seed in range(25):
        a = random_ocmdp(seed)
        ans = nt_value_one(a)
        cap = len(a.states)
        safe = cn_value_one_states(a)
        for extra in (2, 5):
            big = truncated_unfolding(a, cap + extra, absorb_above=True)
            targets = [big.vertex_index(config_vertex_name(q, 0))
                       for q in a.states]
            targets += [big.vertex_index(config_vertex_name(q, cap + extra))
                        for q in safe]
            member = almost_sure_reach_set(big, targets)
            for q in a.states:
                for i in range(cap):
                    v = big.vertex_index(config_vertex_name(q, i))
                    assert (v in member) == nt_membership(ans, q, i), \
                        (seed, q, i)


def test_nt_equals_selective_with_all_finals(qbd_quarter):
    from ocmdp.model import OcMdp
    a = qbd_quarter
    allf = OcMdp(a.states, a.controlled, a.zero_rules, a.positive_rules,
                 a.zero_probs, a.positive_probs, a.states).validate()
    rect, _ = st_optvalone(allf)
    ans = nt_value_one(a)
    for q in a.states:
        for i in range(rect.n_init + rect.period + 2):
            assert rect.is_black(q, i) == nt_membership(ans, q, i), (q, i)


def test_nt_equals_selective_with_all_finals_random():
    # with every state final, a first hit of counter zero is always
    # selective, and value one always comes with an optimal strategy, so
    # the rectangles must carry exactly the termination membership
    from ocmdp.model import OcMdp
    for seed in range(20):
        a = random_ocmdp(seed, max_q=2, max_rules=3)
        zero_rules = tuple((q, 0, q) for q in a.states)
        zero_probs = {(q, 0, q): Fraction(1) for q in a.states
                      if q not in a.controlled}
        allf = OcMdp(a.states, a.controlled, zero_rules, a.positive_rules,
                     zero_probs, a.positive_probs, a.states).validate()
        rect, _ = st_optvalone(allf)
        ans = nt_value_one(allf)
        for q in a.states:
            for i in range(rect.n_init + 2 * rect.period + 2):
                assert rect.is_black(q, i) == nt_membership(ans, q, i), \
                    (seed, q, i)


def test_nt_strategy_simulates(w1, qbd_quarter):
    from ocmdp.oracle import simulate
    for a, start in ((w1, Config("q", 5)), (qbd_quarter, Config("s1", 1))):
        ans = nt_value_one(a)
        rep = simulate(a, ans.strategy, start, 10 ** 5, 2000, 7)
        assert rep.terminated / rep.runs >= Fraction(98, 100)


# ---------------------------------------------------------------------------
# bounded reachability of zero


def test_bounded_reach_zero_cases(w1, incrementer, st_example):
    assert bounded_reach_zero(w1, Config("q", 3))
    assert not bounded_reach_zero(incrementer, Config("t", 1))
    assert bounded_reach_zero(st_example, Config("s", 5))
    assert not bounded_reach_zero(st_example, Config("r", 0))


def test_bounded_reach_zero_filter(st_example):
    # forbidding s cells blocks the only final
    assert not bounded_reach_zero(st_example, Config("s", 2),
                                  allowed=lambda q, i: q != "s" or i == 0)


# ---------------------------------------------------------------------------
# the periodic quotient


def _coloring(a, n_init, period, black_cells):
    cells = {}
    for q in a.states:
        for i in range(n_init + period + 1):
            cells[(q, i)] = BLACK if (q, i) in black_cells else WHITE
    return Coloring(a.states, n_init, period, cells)


def test_build_periodic_single_state():
    a = parse_ocmdp("ocmdp\nstate q P\nzrule q 0 q 1/1\nprule q -1 q 1/1\n")
    col = _coloring(a, 2, 1, {("q", i) for i in range(4)})
    per = build_periodic_ocmdp(a, col, 1)
    name = periodic_state_name("q", 1)
    assert per.states == (name,)
    assert per.positive_rules == ((name, -1, name),)


def test_build_periodic_st_example(st_example):
    n_init = 8
    black = {("s", i) for i in range(n_init + 2)}
    col = _coloring(st_example, n_init, 1, black)
    per = build_periodic_ocmdp(st_example, col, 1)
    s1 = periodic_state_name("s", 1)
    assert per.states == (s1,)
    assert per.positive_rules == ((s1, -1, s1),)


def test_build_periodic_seam_increment():
    a = parse_ocmdp("ocmdp\nstate q P\nzrule q 0 q 1/1\nprule q +1 q 1/1\n")
    col = _coloring(a, 2, 2, {("q", i) for i in range(5)})
    per = build_periodic_ocmdp(a, col, 2)
    q2 = periodic_state_name("q", 2)
    q1 = periodic_state_name("q", 1)
    assert (q2, 1, q1) in per.positive_rules


def test_build_periodic_rejects_white_successor():
    a = parse_ocmdp("ocmdp\nstate q P\nstate w P\n"
                    "zrule q 0 q 1/1\nzrule w 0 w 1/1\n"
                    "prule q 0 w 1/1\nprule w -1 w 1/1\n")
    col = _coloring(a, 4, 1, {("q", 4), ("q", 5)})
    with pytest.raises(ModelError, match="white successor"):
        build_periodic_ocmdp(a, col, 1)


# ---------------------------------------------------------------------------
# check_color unit cases


def _gray_coloring(a, n_init, period):
    cells = {(q, i): GRAY for q in a.states for i in range(n_init + period + 1)}
    return Coloring(a.states, n_init, period, cells)


def test_check_color_bullets(qbd_quarter):
    a = qbd_quarter
    col = _gray_coloring(a, 4, 1)
    # probabilistic s1 with every successor black enforces black
    for i in range(6):
        col.cells[("s1", i)] = BLACK
        col.cells[("s2", i)] = BLACK
    col.cells[("s1", 2)] = GRAY
    assert check_color(a, col, "s1", 1) == BLACK
    # conflicting enforcement turns red: successors white, cell black
    col2 = _gray_coloring(a, 4, 1)
    for i in range(6):
        col2.cells[("s1", i)] = WHITE
        col2.cells[("s2", i)] = WHITE
    col2.cells[("s1", 1)] = BLACK
    assert check_color(a, col2, "s1", 1) == RED
    # nothing enforced keeps the current color
    col3 = _gray_coloring(a, 4, 1)
    assert check_color(a, col3, "s1", 2) == GRAY


# ---------------------------------------------------------------------------
# the rectangles


def rows(rect):
    return {q: "".join(c[j] for c in rect.initial + rect.periodic)
            for j, q in enumerate(rect.states)}


def test_st_example_rectangles(st_example):
    rect, aut = st_optvalone(st_example)
    assert rect.period == 1
    table = rows(rect)
    assert table["s"] == "b" * 10
    assert table["p"] == "w" * 10
    assert table["r"] == "w" * 10
    assert aut.accepts("s", 17) and not aut.accepts("p", 3)


def test_t2_rectangles(t2):
    rect, _ = st_optvalone(t2)
    assert rect.period == 1
    table = rows(rect)
    assert table["s"] == "b" * 10
    assert table["c"] == "w" + "b" * 9
    assert table["r"] == "w" * 10


def test_unreachable_final_all_white():
    # the final can never be reached below any start: only f(0) is black
    text = """ocmdp
state u P
state f P
zrule u +1 u 1/1
zrule f 0 f 1/1
prule u +1 u 1/1
prule f +1 f 1/1
final f
"""
    a = parse_ocmdp(text)
    rect, _ = st_optvalone(a)
    table = rows(rect)
    assert table["f"] == "b" + "w" * (len(table["f"]) - 1)
    assert set(table["u"]) == {"w"}


def _truncated_cmd_black(a, cap, cells):
    """Selective-termination brute force on the truncated unfolding:
    a cell is good when some selector reaches the finals at zero almost
    surely, decided by graph closure on the induced chain."""
    from ocmdp.oracle import enumerate_cmd
    trunc = truncated_unfolding(a, cap, absorb_above=True)
    finals = [trunc.vertex_index(config_vertex_name(q, 0)) for q in a.finals]
    good = set()
    for sel in enumerate_cmd(a):
        choice = {}
        for v in trunc.controlled:
            q, i = trunc.names[v].rsplit("(", 1)
            i = int(i[:-1])
            if i == 0:
                choice[v] = min(trunc.succ[v])
                continue
            rule = sel.selector[q]
            choice[v] = trunc.vertex_index(config_vertex_name(rule[2], i + rule[1]))
        ch = induced_chain(trunc, MdStrategy(choice))
        fin = set(finals)
        for q, i in cells:
            v = trunc.vertex_index(config_vertex_name(q, i))
            reach = set()
            work = [v]
            ok = True
            while work:
                x = work.pop()
                if x in reach:
                    continue
                reach.add(x)
                if x in fin:
                    continue
                work.extend(ch.succ[x])
            for x in reach:
                canf = set()
                w2 = [x]
                hit = False
                while w2:
                    y = w2.pop()
                    if y in canf:
                        continue
                    canf.add(y)
                    if y in fin:
                        hit = True
                        break
                    w2.extend(ch.succ[y])
                if not hit:
                    ok = False
                    break
            if ok:
                good.add((q, i))
    return good


def test_t2_matches_truncated_brute_force(t2):
    rect, _ = st_optvalone(t2)
    n = len(t2.states)
    cap = 2 * n * n * (2 ** (2 * n))
    cells = [(q, i) for q in t2.states for i in range(rect.n_init + 1)]
    brute = _truncated_cmd_black(t2, cap, cells)
    for q, i in cells:
        assert rect.is_black(q, i) == ((q, i) in brute), (q, i)


def test_st_example_matches_truncated_brute_force(st_example):
    rect, _ = st_optvalone(st_example)
    cells = [(q, i) for q in st_example.states for i in range(rect.n_init + 1)]
    brute = _truncated_cmd_black(st_example, 200, cells)
    for q, i in cells:
        assert rect.is_black(q, i) == ((q, i) in brute), (q, i)


def test_candidate_order_is_irrelevant(t2):
    n_init = 2 ** len(t2.states)
    forward = set()
    for ell, boundary in _st_candidates(t2, n_init):
        black = _evaluate_candidate(t2, n_init, ell, boundary)
        if black:
            forward |= black
    backward = set()
    for ell, boundary in reversed(list(_st_candidates(t2, n_init))):
        black = _evaluate_candidate(t2, n_init, ell, boundary)
        if black:
            backward |= black
    assert forward == backward


def test_random_period_bounds():
    for seed in range(10):
        a = random_ocmdp(seed, max_q=2, with_finals=True)
        rect, aut = st_optvalone(a)
        n = 2 ** len(a.states)
        assert 1 <= rect.period <= n
        for q in a.states:
            assert rect.is_black(q, n) == rect.is_black(q, n + rect.period)
        for q in a.states:
            for i in range(2 * n + 2):
                assert aut.accepts(q, i) == rect.is_black(q, i)


# ---------------------------------------------------------------------------
# strategy synthesis and certification


def test_st_strategy_st_example(st_example):
    rect, _ = st_optvalone(st_example)
    strat = st_optimal_strategy(st_example, rect)
    assert certify_st_strategy(st_example, strat, Config("s", 7))
    assert not certify_st_strategy(st_example, strat, Config("p", 2))
    from ocmdp.oracle import simulate
    rep = simulate(st_example, strat, Config("s", 7), 1000, 200, 3)
    assert rep.terminated_in_f == rep.runs


def test_st_strategy_t2(t2):
    rect, _ = st_optvalone(t2)
    strat = st_optimal_strategy(t2, rect)
    for phase in (1, 5, 50, strat.threshold):
        assert strat.table[("c", phase)] == ("c", -1, "s")
    for cfg in (Config("s", 3), Config("c", 1), Config("c", 12)):
        assert certify_st_strategy(t2, strat, cfg)
    assert not certify_st_strategy(t2, strat, Config("r", 1))
    assert not certify_st_strategy(t2, strat, Config("c", 0))


PARITY = """ocmdp
state d P
state g P
zrule d 0 d 1/1
zrule g 0 g 1/1
prule d -1 g 1/1
prule g -1 d 1/1
final d
"""


def test_parity_instance_has_period_two():
    a = parse_ocmdp(PARITY)
    rect, aut = st_optvalone(a)
    assert rect.period == 2
    for i in range(12):
        assert rect.is_black("d", i) == (i % 2 == 0)
        assert rect.is_black("g", i) == (i % 2 == 1)
        assert aut.accepts("d", i) == (i % 2 == 0)
    strat = st_optimal_strategy(a, rect)
    assert certify_st_strategy(a, strat, Config("d", 6))
    assert certify_st_strategy(a, strat, Config("g", 7))
    assert not certify_st_strategy(a, strat, Config("d", 7))


CHOOSER = """ocmdp
state c N
state d P
state g P
zrule c 0 c
zrule d 0 d 1/1
zrule g 0 g 1/1
prule c -1 d
prule c -1 g
prule c +1 c
prule d -1 g 1/1
prule g -1 d 1/1
final d
"""


def test_chooser_strategy_tracks_parity():
    a = parse_ocmdp(CHOOSER)
    rect, _ = st_optvalone(a)
    assert rect.period == 2
    for i in range(1, 12):
        assert rect.is_black("c", i)
        assert rect.is_black("d", i) == (i % 2 == 0)
    assert not rect.is_black("c", 0)
    strat = st_optimal_strategy(a, rect)
    # the good drop flips with the counter parity
    for i in range(1, 15):
        want = "d" if i % 2 == 1 else "g"
        assert strat.rule_at("c", i) == ("c", -1, want), i
    assert certify_st_strategy(a, strat, Config("c", 9))
    assert not certify_st_strategy(a, strat, Config("d", 3))
    from ocmdp.oracle import simulate
    rep = simulate(a, strat, Config("c", 5), 10 ** 4, 300, 5)
    assert rep.terminated_in_f == rep.runs


def test_nt_staircase_threshold():
    text = """ocmdp
state s1 P
state t P
zrule s1 0 s1 1/1
zrule t +1 t 1/1
prule s1 -1 t 1/1
prule t +1 t 1/1
"""
    ans = nt_value_one(parse_ocmdp(text))
    assert ans.safe == frozenset()
    assert ans.thresholds == {"s1": 1, "t": 0}
    assert nt_membership(ans, "s1", 1)
    assert not nt_membership(ans, "s1", 2)


def test_certified_black_cells_random():
    for seed in (1, 3, 5):
        a = random_ocmdp(seed, max_q=2, with_finals=True)
        rect, _ = st_optvalone(a)
        blacks = [(q, i) for q in a.states for i in range(rect.n_init + rect.period + 4)
                  if rect.is_black(q, i)]
        if not blacks:
            continue
        strat = st_optimal_strategy(a, rect)
        for q, i in blacks[:20]:
            assert certify_st_strategy(a, strat, Config(q, i)), (seed, q, i)


# ---------------------------------------------------------------------------
# formats


def test_rectangle_roundtrip(t2):
    rect, aut = st_optvalone(t2)
    text = serialize_rectangles(rect)
    again = parse_rectangles(text)
    assert serialize_rectangles(again) == text
    assert again.period == rect.period
    aut_text = serialize_aautomaton(aut)
    again_aut = parse_aautomaton(aut_text)
    assert serialize_aautomaton(again_aut) == aut_text
    for q in t2.states:
        for i in range(20):
            assert again_aut.accepts(q, i) == rect.is_black(q, i)


def test_cregular_roundtrip(t2):
    rect, _ = st_optvalone(t2)
    strat = st_optimal_strategy(t2, rect)
    text = serialize_cregular(strat)
    again = parse_cregular(text, t2)
    assert serialize_cregular(again) == text
    assert again.rule_at("c", 7) == strat.rule_at("c", 7)
