"""Boundary objectives: qualitative non-selective termination with
counter-oblivious synthesis, and the exponential-time coloring algorithm
deciding where an optimal strategy terminates in the selected final
states with probability one, with counter-regular synthesis and an exact
qualitative certifier for the synthesized strategies."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .cn import cn_value_one_states, ocmdp_cn
from .finmdp import _almost_sure_reach
from .model import (AAutomaton, CmdStrategy, Config, CounterRegularStrategy,
                    ModelError, OcMdp, Rule, config_vertex_name,
                    format_delta, truncated_unfolding, _DELTA)

BLACK, WHITE, GRAY, RED = "b", "w", "g", "r"


# ---------------------------------------------------------------------------
# Colorings and rectangles


@dataclass
class Coloring:
    """A black/white/gray/red map on the working window of configuration
    cells: columns 0..n_init+period, with the column beyond the window
    identified with column n_init+1."""

    states: tuple[str, ...]
    n_init: int
    period: int
    cells: dict[tuple[str, int], str]

    @property
    def width(self) -> int:
        return self.n_init + self.period + 1

    def color(self, q: str, i: int) -> str:
        if i == self.n_init + self.period + 1:
            i = self.n_init + 1
        return self.cells[(q, i)]

    def column(self, i: int) -> dict[str, str]:
        return {q: self.cells[(q, i)] for q in self.states}


@dataclass
class StRectangles:
    """The initial and periodic rectangles of the optimal-value-one
    coloring: column tuples aligned with the state order."""

    states: tuple[str, ...]
    initial: tuple[tuple[str, ...], ...]
    periodic: tuple[tuple[str, ...], ...]
    period: int

    @property
    def n_init(self) -> int:
        return len(self.initial) - 1

    def is_black(self, q: str, i: int) -> bool:
        j = self.states.index(q)
        if i <= self.n_init:
            return self.initial[i][j] == BLACK
        return self.periodic[(i - self.n_init - 1) % self.period][j] == BLACK


@dataclass
class NtAnswer:
    """Qualitative non-selective termination: the states whose every
    configuration has value one, the per-state largest good counter for
    the others, and one counter-oblivious strategy optimal on the whole
    value-one set."""

    safe: frozenset[str]
    thresholds: dict[str, int]
    strategy: Optional[CmdStrategy] = None


def nt_membership(ans: NtAnswer, p: str, i: int) -> bool:
    if i < 0:
        raise ModelError("negative counter")
    if i == 0 or p in ans.safe:
        return True
    return i <= ans.thresholds[p]


# ---------------------------------------------------------------------------
# Non-selective termination


def _nt_core(a: OcMdp):
    cap = len(a.states)
    safe = cn_value_one_states(a)
    trunc = truncated_unfolding(a, cap, absorb_above=True)
    targets = [trunc.vertex_index(config_vertex_name(q, 0)) for q in a.states]
    targets += [trunc.vertex_index(config_vertex_name(q, cap)) for q in safe]
    member, tau = _almost_sure_reach(trunc, targets)
    thresholds: dict[str, int] = {}
    for p in a.states:
        if p in safe:
            continue
        good = [i for i in range(cap)
                if trunc.vertex_index(config_vertex_name(p, i)) in member]
        thresholds[p] = max(good)
        assert good == list(range(thresholds[p] + 1)), \
            "value-one counters of an unsafe state are not downward closed"
    return safe, thresholds, trunc, tau


def nt_value_one(a: OcMdp) -> NtAnswer:
    """Decide from which configurations termination has value one and
    synthesize one counter-oblivious strategy attaining it everywhere on
    that set: the cover-negative selector on safe states, the bounded
    reachability choice at the threshold on unsafe ones."""
    safe, thresholds, trunc, tau = _nt_core(a)
    _, cmd = ocmdp_cn(a)
    selector: dict[str, Rule] = {}
    for p in a.controlled:
        if p in safe:
            selector[p] = cmd.selector[p]
            continue
        ip = thresholds[p]
        if ip == 0:
            selector[p] = a.positive_out(p)[0]
            continue
        v = trunc.vertex_index(config_vertex_name(p, ip))
        w = tau[v]
        q, j = _parse_config_name(trunc.names[w])
        selector[p] = (p, j - ip, q)
    ans = NtAnswer(safe, thresholds, CmdStrategy(selector).validate(a))
    for q in safe:
        if q in a.controlled:
            assert any(r[2] in safe for r in a.positive_out(q))
        else:
            assert all(r[2] in safe for r in a.positive_out(q))
    return ans


def _nt_lite(a: OcMdp) -> NtAnswer:
    safe, thresholds, _, _ = _nt_core(a)
    return NtAnswer(safe, thresholds)


def _parse_config_name(name: str) -> tuple[str, int]:
    q, _, i = name.rpartition("(")
    return q, int(i[:-1])


# ---------------------------------------------------------------------------
# Bounded reachability of the zero level


def bounded_reach_zero(a: OcMdp, start: Config,
                       allowed: Optional[Callable[[str, int], bool]] = None,
                       cap: Optional[int] = None) -> bool:
    """Whether a path from the start configuration reaches counter zero
    in a final state (any state when no finals are declared), optionally
    restricted to configurations satisfying `allowed`.  The counter is
    capped; the default cap is safe for unrestricted searches."""
    if start.counter < 0:
        raise ModelError("negative start counter")
    if cap is None:
        cap = start.counter + len(a.states) ** 2
    finals = set(a.finals) if a.finals else set(a.states)
    if allowed is not None and not allowed(start.state, start.counter):
        return False
    seen = {(start.state, start.counter)}
    work = [(start.state, start.counter)]
    while work:
        q, c = work.pop()
        if c == 0 and q in finals:
            return True
        rules = a.zero_out(q) if c == 0 else a.positive_out(q)
        for _, d, tgt in rules:
            nxt = (tgt, c + d)
            if nxt[1] > cap or nxt in seen:
                continue
            if allowed is not None and not allowed(tgt, c + d):
                continue
            seen.add(nxt)
            work.append(nxt)
    return False


# ---------------------------------------------------------------------------
# The periodic quotient OC-MDP


def periodic_state_name(p: str, i: int) -> str:
    return "%s@%d" % (p, i)


def build_periodic_ocmdp(a: OcMdp, coloring: Coloring, period: int) -> OcMdp:
    """The OC-MDP encoding the non-white cells of the periodic rectangle:
    one control state per cell, counter steps per crossing of the seam."""
    n_init, ell = coloring.n_init, period
    if coloring.column(n_init) != coloring.column(n_init + ell):
        raise ModelError("boundary columns of the candidate differ")

    def nonwhite(q: str, i: int) -> bool:
        return coloring.color(q, n_init + i) != WHITE

    cells = [(p, i) for i in range(1, ell + 1) for p in a.states if nonwhite(p, i)]
    cell_set = set(cells)

    def wrap(i: int) -> int:
        k = i % ell
        return ell if k == 0 else k

    for p, i in cells:
        rules = a.positive_out(p)
        images = [(r, wrap(i + r[1])) for r in rules]
        ok = [(r, k) for r, k in images if (r[2], k) in cell_set]
        if p in a.controlled:
            if not ok:
                raise ModelError("controlled cell (%s,%d) has only white successors"
                                 % (p, i))
        elif len(ok) != len(images):
            raise ModelError("probabilistic cell (%s,%d) has a white successor"
                             % (p, i))

    states = tuple(periodic_state_name(p, i) for p, i in cells)
    controlled = frozenset(periodic_state_name(p, i) for p, i in cells
                           if p in a.controlled)
    zero_rules: list[Rule] = []
    zero_probs: dict[Rule, Fraction] = {}
    positive_rules: list[Rule] = []
    positive_probs: dict[Rule, Fraction] = {}
    for p, i in cells:
        name = periodic_state_name(p, i)
        zero_rules.append((name, 0, name))
        if p not in a.controlled:
            zero_probs[(name, 0, name)] = Fraction(1)
        for r in a.positive_out(p):
            _, c, q = r
            j = i + c
            if 1 <= j <= ell:
                out = (name, 0, periodic_state_name(q, j))
            elif j == ell + 1:
                out = (name, 1, periodic_state_name(q, 1))
            else:  # j == 0
                out = (name, -1, periodic_state_name(q, ell))
            if (q, wrap(j)) not in cell_set:
                continue
            positive_rules.append(out)
            if p not in a.controlled:
                positive_probs[out] = a.positive_probs[r]
    return OcMdp(states, controlled, tuple(zero_rules), tuple(positive_rules),
                 zero_probs, positive_probs, ()).validate()


# ---------------------------------------------------------------------------
# check_color


def _cell_successors(a: OcMdp, p: str, i: int):
    rules = a.zero_out(p) if i == 0 else a.positive_out(p)
    return [(r[2], i + r[1]) for r in rules]


def _cell_predecessors(a: OcMdp, p: str, i: int, width: int):
    preds = []
    if i <= 1:
        for q in a.states:
            for r in a.zero_out(q):
                if r[2] == p and r[1] == i:
                    preds.append((q, 0))
    for j in (i - 1, i, i + 1):
        if j < 1 or j > width + 1:
            continue
        for q in a.states:
            for r in a.positive_out(q):
                if r[2] == p and r[1] == i - j:
                    preds.append((q, j))
    return preds


def check_color(a: OcMdp, coloring: Coloring, p: str, i: int) -> str:
    """The color enforced on a cell by its neighbours, the current color
    when nothing is enforced, or red on a conflict."""
    width = coloring.n_init + coloring.period
    col: set[str] = set()
    succ = [coloring.color(q, j) for q, j in _cell_successors(a, p, i)]
    if p not in a.controlled:
        if all(c == BLACK for c in succ):
            col.add(BLACK)
        if any(c == WHITE for c in succ):
            col.add(WHITE)
    else:
        if all(c == WHITE for c in succ):
            col.add(WHITE)
        if any(c == BLACK for c in succ):
            col.add(BLACK)
    for q, j in _cell_predecessors(a, p, i, width):
        c = coloring.color(q, j)
        if q not in a.controlled and c == BLACK:
            col.add(BLACK)
        if q in a.controlled and c == WHITE:
            col.add(WHITE)
    cur = coloring.color(p, i)
    if not col:
        return cur
    if len(col) == 1:
        want = col.pop()
        if cur in (GRAY, want):
            return want
        return RED
    return RED


# ---------------------------------------------------------------------------
# The candidate loop


def _evaluate_candidate(a: OcMdp, n_init: int, ell: int,
                        boundary: dict[str, str]):
    """Run one (period, boundary column) candidate; returns the set of
    certified black cells, or None when the candidate is inconsistent."""
    cells: dict[tuple[str, int], str] = {}
    for q in a.states:
        for i in range(n_init + ell + 1):
            cells[(q, i)] = GRAY
    for q in a.finals:
        cells[(q, 0)] = BLACK
    for q in a.states:
        cells[(q, n_init)] = boundary[q]
        cells[(q, n_init + ell)] = boundary[q]
    coloring = Coloring(a.states, n_init, ell, cells)

    # Propagate enforced colors to a fixpoint; every cell settles after
    # at most two recolorings, so the loop is linear in the window.
    recolors: dict[tuple[str, int], int] = {}
    changed = True
    while changed:
        changed = False
        for q in a.states:
            for i in range(n_init + ell + 1):
                c = check_color(a, coloring, q, i)
                if c == RED:
                    return None
                if c != cells[(q, i)]:
                    cells[(q, i)] = c
                    changed = True
                    recolors[(q, i)] = recolors.get((q, i), 0) + 1
                    assert recolors[(q, i)] <= 2

    # Resolve periodic grays through the quotient OC-MDP.
    pending = [(q, n_init + i) for i in range(1, ell + 1) for q in a.states
               if cells[(q, n_init + i)] != WHITE]
    if pending:
        per = build_periodic_ocmdp(a, coloring, ell)
        ans = _nt_lite(per)
        for q, i in pending:
            all_counters = periodic_state_name(q, i - n_init) in ans.safe
            if cells[(q, i)] == GRAY:
                cells[(q, i)] = BLACK if all_counters else WHITE
            elif not all_counters:
                return None

    # Resolve initial grays through constrained reachability of the
    # final states at counter zero.
    cap = n_init + ell * ((len(a.states) * ell) ** 2 + 4)

    def extended(q: str, i: int) -> str:
        if i <= n_init + ell:
            return cells[(q, i)]
        return cells[(q, n_init + 1 + (i - n_init - 1) % ell)]

    changed = True
    while changed:
        changed = False
        reach0 = _final_reaching_cells(a, extended, cap)
        for q in a.states:
            for i in range(n_init + 1):
                cur = cells[(q, i)]
                if cur == WHITE:
                    continue
                succ = _cell_successors(a, q, i)
                good = [(r, j) in reach0 for r, j in succ]
                ok = all(good) if q not in a.controlled else any(good)
                if ok:
                    continue
                if cur == BLACK:
                    return None
                cells[(q, i)] = WHITE
                changed = True

    black = set()
    for q in a.states:
        for i in range(n_init + ell + 1):
            if cells[(q, i)] == GRAY and i <= n_init:
                cells[(q, i)] = BLACK
            if cells[(q, i)] == BLACK:
                black.add((q, i))
    return black


def _final_reaching_cells(a: OcMdp, colorof, cap: int):
    """Backward closure, over non-white cells only, of the final states
    at counter zero; the counter is capped by a bound safe for the
    ultimately periodic constraint."""
    finals = set(a.finals)
    allowed = {}

    def ok(q, i):
        key = (q, i)
        if key not in allowed:
            allowed[key] = colorof(q, i) != WHITE
        return allowed[key]

    reach = set()
    work = []
    for q in finals:
        if ok(q, 0):
            reach.add((q, 0))
            work.append((q, 0))
    # Precompute predecessors lazily by scanning rules per popped cell.
    while work:
        p, i = work.pop()
        for q in a.states:
            if i <= 1:
                for r in a.zero_out(q):
                    if r[2] == p and r[1] == i and (q, 0) not in reach and ok(q, 0):
                        reach.add((q, 0))
                        work.append((q, 0))
            for dj in (-1, 0, 1):
                j = i - dj
                if j < 1 or j > cap:
                    continue
                for r in a.positive_out(q):
                    if r[2] == p and r[1] == dj and (q, j) not in reach and ok(q, j):
                        reach.add((q, j))
                        work.append((q, j))
    return reach


def _st_candidates(a: OcMdp, n_init: int):
    for ell in range(1, n_init + 1):
        for mask in range(1 << len(a.states)):
            boundary = {q: (BLACK if (mask >> j) & 1 else WHITE)
                        for j, q in enumerate(a.states)}
            yield ell, boundary


def _st_candidate_worker(args):
    a, n_init, ell, boundary = args
    return _evaluate_candidate(a, n_init, ell, boundary)


def st_optvalone(a: OcMdp, jobs: int = 1) -> tuple[StRectangles, AAutomaton]:
    """Compute the initial and periodic rectangles of the coloring whose
    black cells are exactly the configurations admitting an optimal
    strategy for termination in the final states, by accumulating the
    certified black cells of every (period, boundary column) candidate;
    also the automaton recognizing the black set."""
    if not a.finals:
        raise ModelError("selective termination needs final states")
    a.validate()
    n_init = 2 ** len(a.states)
    acc: set[tuple[str, int]] = set()
    tasks = [(a, n_init, ell, boundary) for ell, boundary in _st_candidates(a, n_init)]
    if jobs > 1:
        import multiprocessing
        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(_st_candidate_worker, tasks)
    else:
        results = map(_st_candidate_worker, tasks)
    for black in results:
        if black:
            acc |= black

    def column(i: int) -> tuple[str, ...]:
        return tuple(BLACK if (q, i) in acc else WHITE for q in a.states)

    period = next(ell for ell in range(1, n_init + 1)
                  if column(n_init) == column(n_init + ell))
    rect = StRectangles(a.states,
                        tuple(column(i) for i in range(n_init + 1)),
                        tuple(column(n_init + 1 + i) for i in range(period)),
                        period)
    return rect, rect_to_aautomaton(rect)


def rect_to_aautomaton(rect: StRectangles) -> AAutomaton:
    n_init, ell = rect.n_init, rect.period
    dfa = []
    advance = {}
    accepting = set()
    for q in rect.states:
        for i in range(n_init + ell + 1):
            s = "%s@%d" % (q, i)
            dfa.append(s)
            advance[s] = "%s@%d" % (q, i + 1 if i < n_init + ell else n_init + 1)
            if rect.is_black(q, i):
                accepting.add(s)
    entry = {q: "%s@0" % q for q in rect.states}
    return AAutomaton(tuple(dfa), advance, frozenset(accepting), entry)


# ---------------------------------------------------------------------------
# Counter-regular strategy synthesis


def _rect_coloring(rect: StRectangles) -> Coloring:
    cells = {}
    for j, q in enumerate(rect.states):
        for i in range(rect.n_init + rect.period + 1):
            col = rect.initial[i] if i <= rect.n_init \
                else rect.periodic[i - rect.n_init - 1]
            cells[(q, i)] = col[j]
    return Coloring(rect.states, rect.n_init, rect.period, cells)


def _black_path(a: OcMdp, rect: StRectangles, start: tuple[str, int],
                cap: int) -> Optional[list[tuple[str, int]]]:
    """Shortest all-black path from a black cell to a final state at
    counter zero, counter capped, deterministic tie-breaking by rule
    order."""
    finals = set(a.finals)
    parent: dict[tuple[str, int], tuple[str, int]] = {start: start}
    queue = [start]
    pos = 0
    while pos < len(queue):
        q, c = queue[pos]
        pos += 1
        if c == 0 and q in finals:
            path = [(q, c)]
            while parent[path[-1]] != path[-1]:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        rules = a.zero_out(q) if c == 0 else a.positive_out(q)
        for _, d, tgt in rules:
            nxt = (tgt, c + d)
            if nxt[1] > cap or nxt in parent:
                continue
            if not rect.is_black(tgt, c + d):
                continue
            parent[nxt] = (q, c)
            queue.append(nxt)
    return None


def st_optimal_strategy(a: OcMdp, rect: StRectangles) -> CounterRegularStrategy:
    """A counter-regular strategy optimal from every black configuration:
    fixed all-black witness paths on the initial region, the lifted
    quotient strategy above it."""
    n_init, ell = rect.n_init, rect.period
    nstates = len(a.states)
    pathcap = nstates * nstates * n_init * n_init + n_init
    sources = [(q, i) for i in range(n_init + 1) for q in a.states
               if rect.is_black(q, i)]
    paths = []
    for cap in (pathcap, nstates * nstates * (n_init + ell) ** 2 + n_init + ell):
        paths = []
        for src in sources:
            path = _black_path(a, rect, src, cap)
            if path is None:
                paths = None
                break
            paths.append(path)
        if paths is not None:
            pathcap = cap
            break
    if paths is None:
        raise ModelError("no all-black witness path within the counter bound")
    threshold = pathcap + ell
    pi: dict[tuple[str, int], Rule] = {}
    for path in paths:
        for (x, c), (y, c2) in zip(path, path[1:]):
            if x in a.controlled and (x, c) not in pi:
                pi[(x, c)] = (x, c2 - c, y)

    # The quotient strategy for the periodic region.
    xi = None
    per = None
    coloring = _rect_coloring(rect)
    if any(rect.is_black(q, n_init + i) for q in a.states for i in range(1, ell + 1)):
        per = build_periodic_ocmdp(a, coloring, ell)
        if per.states:
            ans = nt_value_one(per)
            assert ans.safe == frozenset(per.states), \
                "periodic quotient must terminate from everywhere"
            xi = ans.strategy

    def lifted_rule(p: str, phase: int) -> Optional[Rule]:
        if phase <= n_init:
            return None
        i = 1 + (phase - n_init - 1) % ell
        name = periodic_state_name(p, i)
        if xi is None or name not in xi.selector:
            return None
        _, dprime, tgt = xi.selector[name]
        q, j = tgt.rsplit("@", 1)
        j = int(j)
        if dprime == 0:
            c = j - i
        elif dprime == 1:
            c = ell + 1 - i
        else:
            c = -1
        return (p, c, q)

    table: dict[tuple[str, int], Rule] = {}
    for p in a.controlled:
        fallback = a.positive_out(p)[0]
        for phase in range(1, threshold + ell):
            rule = pi.get((p, phase)) or lifted_rule(p, phase) or fallback
            table[(p, phase)] = rule
    zero_table = {p: pi.get((p, 0), a.zero_out(p)[0]) for p in a.controlled}

    dfa = tuple("ph%d" % i for i in range(threshold + ell))
    advance = {"ph%d" % i: "ph%d" % (i + 1 if i < threshold + ell - 1 else threshold)
               for i in range(threshold + ell)}
    aut = AAutomaton(dfa, advance, frozenset(), {q: "ph0" for q in a.states})
    return CounterRegularStrategy(aut, table, threshold, ell, zero_table)


# ---------------------------------------------------------------------------
# Exact qualitative certification of a synthesized strategy


def certify_st_strategy(a: OcMdp, strat: CounterRegularStrategy,
                        start: Config) -> bool:
    """Exact decision whether the fixed counter-regular strategy reaches
    a final state at counter zero with probability one from the start.

    The induced countable chain is split at the strategy threshold: the
    periodic tail is folded into a block-counter quotient analyzed by the
    non-selective machinery, excursions above the threshold are replaced
    by their positively-reachable returns, and the remaining finite chain
    is checked by graph closure."""
    t, ell = strat.threshold, strat.period
    finals = set(a.finals) if a.finals else set(a.states)

    per = _strategy_tail_quotient(a, strat)
    ans = _nt_lite(per)
    exit_cache: dict[str, list[str]] = {}

    def tail_exits(q: str, kappa: int) -> Optional[list[str]]:
        # None signals a positive chance of never returning below t.
        name = periodic_state_name(q, 1)
        if not nt_membership(ans, name, kappa):
            return None
        if kappa == 1 and q in exit_cache:
            return exit_cache[q]
        exits = _tail_exit_states(a, per, name, kappa)
        if kappa == 1:
            exit_cache[q] = exits
        return exits

    low_nodes: set[tuple[str, int]] = set()
    entry_nodes: set[str] = set()
    edges: dict[tuple, list[tuple]] = {}
    work: list[tuple] = []

    def push(node):
        if node[0] == "low":
            key = (node[1], node[2])
            if key in low_nodes:
                return
            low_nodes.add(key)
        else:
            if node[1] in entry_nodes:
                return
            entry_nodes.add(node[1])
        work.append(node)

    if start.counter <= t:
        push(("low", start.state, start.counter))
    else:
        phi = 1 + (start.counter - t - 1) % ell
        kappa = (start.counter - t - 1) // ell + 1
        name = periodic_state_name(start.state, phi)
        if not nt_membership(ans, name, kappa):
            return False
        for q in _tail_exit_states(a, per, name, kappa):
            push(("low", q, t))

    while work:
        node = work.pop()
        outs = []
        if node[0] == "entry":
            exits = tail_exits(node[1], 1)
            if exits is None:
                return False
            for q in exits:
                tgt = ("low", q, t)
                outs.append(tgt)
                push(tgt)
        else:
            _, q, c = node
            if c == 0 and q in finals:
                edges[node] = []
                continue
            if c == 0:
                rules = [strat.zero_table[q]] if q in a.controlled else a.zero_out(q)
            elif q in a.controlled:
                rules = [strat.rule_at(q, c)]
            else:
                rules = a.positive_out(q)
            for _, d, tgt in rules:
                c2 = c + d
                if c2 <= t:
                    nxt = ("low", tgt, c2)
                else:
                    nxt = ("entry", tgt)
                outs.append(nxt)
                push(nxt)
        edges[node] = outs

    fin = [("low", q, 0) for q in finals if (q, 0) in low_nodes]
    rev: dict[tuple, list[tuple]] = {}
    for node, outs in edges.items():
        for nxt in outs:
            rev.setdefault(nxt, []).append(node)
    good = set(fin)
    work = list(fin)
    while work:
        node = work.pop()
        for p in rev.get(node, []):
            if p not in good:
                good.add(p)
                work.append(p)
    return all(node in good for node in edges)


def _strategy_tail_quotient(a: OcMdp, strat: CounterRegularStrategy) -> OcMdp:
    """The purely periodic part of the chain induced by the strategy
    above its threshold, as a block-counter OC-MDP whose termination is
    exactly the return below the threshold."""
    t, ell = strat.threshold, strat.period
    states = []
    controlled: set[str] = set()
    zero_rules = []
    zero_probs = {}
    pos_rules = []
    pos_probs = {}
    for q in a.states:
        for phi in range(1, ell + 1):
            name = periodic_state_name(q, phi)
            states.append(name)
            zero_rules.append((name, 0, name))
            if q in a.controlled:
                controlled.add(name)
            else:
                zero_probs[(name, 0, name)] = Fraction(1)
            phase = t + (phi % ell)
            rules = [strat.table[(q, phase)]] if q in a.controlled \
                else a.positive_out(q)
            for r in rules:
                _, d, tgt = r
                phi2 = phi + d
                if 1 <= phi2 <= ell:
                    out = (name, 0, periodic_state_name(tgt, phi2))
                elif phi2 == ell + 1:
                    out = (name, 1, periodic_state_name(tgt, 1))
                else:
                    out = (name, -1, periodic_state_name(tgt, ell))
                pos_rules.append(out)
                if q not in a.controlled:
                    pos_probs[out] = pos_probs.get(out, Fraction(0)) \
                        + a.positive_probs[r]
    return OcMdp(tuple(states), frozenset(controlled), tuple(zero_rules),
                 tuple(pos_rules), zero_probs, pos_probs, ()).validate()


def _tail_exit_states(a: OcMdp, per: OcMdp, start_name: str, kappa: int) -> list[str]:
    """States at which an excursion above the threshold can first drop
    below it, by bounded search in the block quotient."""
    cap = kappa + len(per.states) ** 2
    seen = {(start_name, kappa)}
    work = [(start_name, kappa)]
    exits = set()
    while work:
        name, k = work.pop()
        if k == 0:
            exits.add(name.rsplit("@", 1)[0])
            continue
        for _, d, tgt in per.positive_out(name):
            nxt = (tgt, k + d)
            if nxt[1] > cap or nxt in seen:
                continue
            seen.add(nxt)
            work.append(nxt)
    return sorted(exits)


# ---------------------------------------------------------------------------
# Text formats


def serialize_rectangles(rect: StRectangles) -> str:
    out = ["period ℓ=%d" % rect.period]
    for j, q in enumerate(rect.states):
        row = "".join(col[j] for col in rect.initial + rect.periodic).upper()
        out.append("%s %s" % (q, row))
    return "\n".join(out) + "\n"


def parse_rectangles(text: str) -> StRectangles:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("period ℓ="):
        raise ModelError("expected 'period ℓ=<n>' header")
    period = int(lines[0].split("=", 1)[1])
    states = []
    rows = []
    for line in lines[1:]:
        q, row = line.split()
        states.append(q)
        rows.append(row.lower())
    width = len(rows[0])
    n_init = width - 1 - period
    initial = tuple(tuple(r[i] for r in rows) for i in range(n_init + 1))
    periodic = tuple(tuple(r[n_init + 1 + i] for r in rows) for i in range(period))
    return StRectangles(tuple(states), initial, periodic, period)


def serialize_aautomaton(aut: AAutomaton) -> str:
    out = ["aautomaton"]
    for q in sorted(aut.entry):
        out.append("entry %s %s" % (q, aut.entry[q]))
    for s in aut.dfa_states:
        out.append("step %s %s" % (s, aut.advance[s]))
    for s in aut.dfa_states:
        if s in aut.accepting:
            out.append("accept %s" % s)
    return "\n".join(out) + "\n"


def parse_aautomaton(text: str) -> AAutomaton:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines or lines[0] != "aautomaton":
        raise ModelError("expected 'aautomaton' header")
    entry = {}
    advance = {}
    accepting = set()
    order = []
    for line in lines[1:]:
        toks = line.split()
        if toks[0] == "entry" and len(toks) == 3:
            entry[toks[1]] = toks[2]
        elif toks[0] == "step" and len(toks) == 3:
            advance[toks[1]] = toks[2]
            order.append(toks[1])
        elif toks[0] == "accept" and len(toks) == 2:
            accepting.add(toks[1])
        else:
            raise ModelError("bad automaton line %r" % line)
    return AAutomaton(tuple(order), advance, frozenset(accepting), entry)


def serialize_cregular(strat: CounterRegularStrategy) -> str:
    out = ["cregular threshold=%d period=%d" % (strat.threshold, strat.period)]
    for q in sorted(strat.zero_table):
        _, d, tgt = strat.zero_table[q]
        out.append("zselect %s %s %s" % (q, format_delta(d), tgt))
    for (q, phase) in sorted(strat.table):
        _, d, tgt = strat.table[(q, phase)]
        out.append("select %s %d %s %s" % (q, phase, format_delta(d), tgt))
    return "\n".join(out) + "\n"


def parse_cregular(text: str, a: OcMdp) -> CounterRegularStrategy:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("cregular "):
        raise ModelError("expected 'cregular' header")
    head = dict(tok.split("=") for tok in lines[0].split()[1:])
    threshold, period = int(head["threshold"]), int(head["period"])
    table = {}
    zero_table = {}
    for line in lines[1:]:
        toks = line.split()
        if toks[0] == "zselect" and len(toks) == 4:
            zero_table[toks[1]] = (toks[1], _DELTA[toks[2]], toks[3])
        elif toks[0] == "select" and len(toks) == 5:
            table[(toks[1], int(toks[2]))] = (toks[1], _DELTA[toks[3]], toks[4])
        else:
            raise ModelError("bad cregular line %r" % line)
    dfa = tuple("ph%d" % i for i in range(threshold + period))
    advance = {"ph%d" % i: "ph%d" % (i + 1 if i < threshold + period - 1 else threshold)
               for i in range(threshold + period)}
    aut = AAutomaton(dfa, advance, frozenset(), {q: "ph0" for q in a.states})
    return CounterRegularStrategy(aut, table, threshold, period, zero_table)
