"""The cover-negative pipeline: the decreasing expansion, the qualitative
value-one set, memory elimination, the quantitative solver and the
one-counter wrapper synthesizing counter-oblivious strategies.

The production qualitative solver works per maximal end component: a
component admits an almost-sure cover-negative strategy exactly when it
contains a bottom component with non-positive mean and a negative cycle.
With negative minimal mean that is immediate; at minimal mean zero the
witness, if any, lives inside the subgraph of bias-tight edges of an
optimal policy (complementary slackness pins the support of every
zero-mean stationary flow there, and every end component of the tight
subgraph has mean exactly zero), so it reduces to a negative-cycle
search.  The literal route through the decreasing expansion is kept for
cross-checks on small instances."""

from __future__ import annotations

from fractions import Fraction

from . import chain as chain_mod
from .chain import bsccs, cn_holds_in_bscc, induced_chain
from .finmdp import (_almost_sure_reach, max_reach, maximal_end_components,
                     min_mean_full, restrict_to_mec)
from .model import (CmdStrategy, FdStrategy, FiniteMdp, MdStrategy, ModelError,
                    OcMdp, to_boundaryless_reward_mdp)
from .qualmp import qual_mp

DIV_VERTEX = "div"


def _budget(n: int) -> int:
    return n * n + 1


# ---------------------------------------------------------------------------
# The decreasing expansion D'


def triple_name(u: str, n: int, m: int) -> str:
    return "%s|%d|%d" % (u, n, m)


def quad_name(u: str, n: int, m: int, v: str) -> str:
    return "%s|%d|%d|%s" % (u, n, m, v)


def decreasing_expand(m: FiniteMdp, reachable_only: bool = False) -> FiniteMdp:
    """The expansion whose vertices carry, besides the base vertex, the
    outstanding decrease needed since the last checkpoint and the steps
    spent since it; overflowing the step budget with the decrease
    outstanding falls into an absorbing reward-1 sink.

    With `reachable_only` the construction is grown from the checkpoint
    seeds only; otherwise the full grid is materialized (with the
    unreachable out-of-range corners clamped into range to keep the
    transition relation total)."""
    K = _budget(len(m))

    def clamp(x: int) -> int:
        return 0 if x < 0 else (K if x > K else x)

    names: list[str] = []
    index: dict[str, int] = {}

    def intern(name: str) -> int:
        i = index.get(name)
        if i is None:
            i = len(names)
            index[name] = i
            names.append(name)
        return i

    succ: dict[int, list[int]] = {}
    probs: dict[tuple[int, int], Fraction] = {}
    reward: dict[int, int] = {}
    controlled: set[int] = set()

    def expand_triple(u: int, n: int, mm: int, i: int):
        reward[i] = 0
        controlled.add(i)
        out: list[int] = []
        if mm == K and n > 0:
            out.append(intern(DIV_VERTEX))
        elif n == 0:
            for v in m.succ[u]:
                out.append(intern(quad_name(m.names[u], 1, 0, m.names[v])))
        else:
            for v in m.succ[u]:
                out.append(intern(quad_name(m.names[u], n, mm, m.names[v])))
        succ[i] = out

    def expand_quad(u: int, n: int, mm: int, v: int, i: int):
        reward[i] = m.reward[u]
        n2, m2 = clamp(n + m.reward[u]), clamp(mm + 1)
        tgt = intern(triple_name(m.names[v], n2, m2))
        if u in m.controlled:
            controlled.add(i)
            succ[i] = [tgt]
        else:
            out = [tgt]
            probs[(i, tgt)] = m.probs[(u, v)]
            for w in m.succ[u]:
                if w == v:
                    continue
                j = intern(triple_name(m.names[w], 1, 0))
                out.append(j)
                probs[(i, j)] = m.probs[(u, w)]
            succ[i] = out

    def expand(i: int):
        parts = names[i].split("|")
        if names[i] == DIV_VERTEX:
            reward[i] = 1
            succ[i] = [i]
            probs[(i, i)] = Fraction(1)
        elif len(parts) == 3:
            expand_triple(m.vertex_index(parts[0]), int(parts[1]), int(parts[2]), i)
        else:
            expand_quad(m.vertex_index(parts[0]), int(parts[1]), int(parts[2]),
                        m.vertex_index(parts[3]), i)

    if reachable_only:
        for u in range(len(m)):
            intern(triple_name(m.names[u], 1, 0))
        done = 0
        while done < len(names):
            expand(done)
            done += 1
    else:
        for u in range(len(m)):
            for n in range(K + 1):
                for mm in range(K + 1):
                    intern(triple_name(m.names[u], n, mm))
        for u in range(len(m)):
            for n in range(K + 1):
                for mm in range(K + 1):
                    for v in m.succ[u]:
                        intern(quad_name(m.names[u], n, mm, m.names[v]))
        intern(DIV_VERTEX)
        for i in range(len(names)):
            expand(i)
    return FiniteMdp(tuple(names), frozenset(controlled),
                     tuple(tuple(succ[i]) for i in range(len(names))),
                     probs,
                     tuple(reward[i] for i in range(len(names)))).validate()


# ---------------------------------------------------------------------------
# Qualitative CN with a witnessing memoryless strategy


def _find_negative_cycle(members, succf, weight) -> list | None:
    """A cycle with negative total weight inside the given vertex set,
    as a vertex list, or None.  Bellman-Ford; the predecessor graph is
    walked with revisit detection and the extracted cycle is verified."""
    members = list(members)
    dist = {v: 0 for v in members}
    pred = {}

    def relax():
        bad = None
        for v in members:
            dv = dist[v] + weight(v)
            for w in succf(v):
                if dv < dist[w]:
                    dist[w] = dv
                    pred[w] = v
                    bad = w
        return bad

    bad = None
    for _ in range(len(members) + 1):
        bad = relax()
        if bad is None:
            return None
    for _ in range(len(members) + 1):
        seen = {}
        x = bad
        while x is not None and x not in seen:
            seen[x] = True
            x = pred.get(x)
        if x is not None:
            cycle = [x]
            y = pred[x]
            while y != x:
                cycle.append(y)
                y = pred[y]
            cycle.reverse()
            assert sum(weight(v) for v in cycle) < 0
            return cycle
        bad = relax()
        assert bad is not None
    raise ModelError("negative cycle extraction did not converge")


def _mec_witness(sub: FiniteMdp):
    """Inside one maximal end component: a bottom component with
    non-positive mean containing a negative cycle plus the choices that
    realize it, or None when the component admits none.

    Minimal mean below zero settles it at once; at zero the witness is
    searched in the subgraph of bias-tight edges, whose end components
    all have mean exactly zero."""
    sigma, gain, bias = min_mean_full(sub)
    gmin = gain[0]
    assert all(g == gmin for g in gain), "gain not uniform on an end component"
    if gmin > 0:
        return None
    if gmin < 0:
        ch = induced_chain(sub, sigma)
        for b in bsccs(ch):
            if chain_mod.mean_reward_of_bscc(b) < 0:
                return list(b.members), {u: sigma.choice[u]
                                         for u in b.members if u in sub.controlled}
        raise ModelError("negative gain without a negative component")
    tight_succ = []
    for v in range(len(sub)):
        if v in sub.controlled:
            tight_succ.append(tuple(w for w in sub.succ[v]
                                    if bias[v] == Fraction(sub.reward[v]) + bias[w]))
        else:
            tight_succ.append(sub.succ[v])
    tight = FiniteMdp(sub.names, sub.controlled, tuple(tight_succ), sub.probs,
                      sub.reward)
    for tm in maximal_end_components(tight):
        inner = {v: [w for w in tight_succ[v] if w in tm] for v in tm}
        cycle = _find_negative_cycle(sorted(tm), lambda v: inner[v],
                                     lambda v: sub.reward[v])
        if cycle is None:
            continue
        choice = {}
        cyc = set(cycle)
        for i, v in enumerate(cycle):
            if v in sub.controlled:
                choice[v] = cycle[(i + 1) % len(cycle)]
        tsub, tback = restrict_to_mec(tight, tm)
        tpos = {tback[i]: i for i in range(len(tback))}
        reach, att = _almost_sure_reach(tsub, [tpos[v] for v in cycle])
        assert len(reach) == len(tsub), "tight component not internally connected"
        for i, w in att.items():
            if tback[i] not in cyc:
                choice[tback[i]] = tback[w]
        full = dict(choice)
        for v in sub.controlled:
            full.setdefault(v, min(sub.succ[v]))
        ch = induced_chain(sub, MdStrategy(full))
        for b in bsccs(ch):
            if cycle[0] in b:
                assert cn_holds_in_bscc(b)
                return list(b.members), {u: full[u]
                                         for u in b.members if u in sub.controlled}
        raise ModelError("witness cycle fell out of every bottom component")
    return None


def _good_mec_pieces(m: FiniteMdp):
    pieces = []
    for members in maximal_end_components(m):
        sub, back = restrict_to_mec(m, members)
        witness = _mec_witness(sub)
        if witness is not None:
            pieces.append((members, sub, back, witness))
    return pieces


def cn_area(m: FiniteMdp) -> frozenset[int]:
    """The vertices with cover-negative value one: almost-sure
    reachability of the end components admitting a witness."""
    targets: set[int] = set()
    for members, _, _, _ in _good_mec_pieces(m):
        targets |= members
    area, _ = _almost_sure_reach(m, targets)
    return area


def qual_cn(m: FiniteMdp) -> tuple[frozenset[int], MdStrategy]:
    """The vertices with cover-negative value one and one memoryless
    strategy winning almost surely from every one of them."""
    choice = {v: min(m.succ[v]) for v in m.controlled}
    pieces = _good_mec_pieces(m)
    good_targets: set[int] = set()
    for members, _, _, _ in pieces:
        good_targets |= members
    area, att = _almost_sure_reach(m, good_targets)
    for u, w in att.items():
        choice[u] = w
    for members, sub, back, (comp_local, sigma_local) in pieces:
        comp = {back[i] for i in comp_local}
        for i, w in sigma_local.items():
            choice[back[i]] = back[w]
        sub_reach, sub_att = _almost_sure_reach(sub, comp_local)
        assert len(sub_reach) == len(sub), "end component not internally connected"
        for i, w in sub_att.items():
            if back[i] not in comp:
                choice[back[i]] = back[w]
    return area, MdStrategy(choice).validate(m)


def qual_cn_via_expansion(m: FiniteMdp) -> tuple[frozenset[int], MdStrategy]:
    """The literal route: qualitative mean payoff on the reachable
    decreasing expansion, lifted to a finite-memory strategy and then
    flattened.  Exponentially heavier than `qual_cn`; used to
    cross-check it on small instances."""
    dp = decreasing_expand(m, reachable_only=True)
    area_dp, sigma_dp = qual_mp(dp)
    area = frozenset(v for v in range(len(m))
                     if dp.vertex_index(triple_name(m.names[v], 1, 0)) in area_dp)
    if not area:
        return area, MdStrategy({v: min(m.succ[v]) for v in m.controlled})
    fd = _lift_expansion_strategy(m, dp, sigma_dp)
    sigma = fd_to_md(m, fd, starts=sorted(area))
    return area, sigma


# ---------------------------------------------------------------------------
# Finite-memory strategies on the base MDP

BOOT_MEMORY = "boot"


def _fd_close(m: FiniteMdp, quad_after) -> FdStrategy:
    """Close a quad-valued memory kernel into a total FdStrategy.

    `quad_after(u, n, mm)` yields the successor-annotated memory name
    the strategy adopts when standing at vertex u with deficit n after
    mm steps, or None where the kernel gives up (filled arbitrarily)."""
    memories = [BOOT_MEMORY]
    seen = {BOOT_MEMORY}
    step: dict[tuple[str, int], str] = {}
    choice: dict[tuple[int, str], int] = {}

    def intern(k):
        name = k if k else BOOT_MEMORY
        if name not in seen:
            seen.add(name)
            memories.append(name)
        return name

    for s in range(len(m)):
        step[(BOOT_MEMORY, s)] = intern(quad_after(s, 1, 0))
    pos = 0
    while pos < len(memories):
        k = memories[pos]
        pos += 1
        if k == BOOT_MEMORY:
            continue
        uname, n, mm, vname = k.split("|")
        u, v = m.vertex_index(uname), m.vertex_index(vname)
        n, mm = int(n), int(mm)
        for w in range(len(m)):
            if w == v:
                n2 = n + m.reward[u]
                k2 = quad_after(v, 1, 0) if n2 == 0 else quad_after(v, n2, mm + 1)
            elif w in m.succ[u]:
                k2 = quad_after(w, 1, 0)
            else:
                k2 = None
            step[(k, w)] = intern(k2) if k2 else k
        for x in m.controlled:
            choice[(x, k)] = v if x == u and v in m.succ[x] else min(m.succ[x])
    for x in m.controlled:
        choice[(x, BOOT_MEMORY)] = min(m.succ[x])
    return FdStrategy(tuple(memories), BOOT_MEMORY, step, choice).validate(m)


def _lift_expansion_strategy(m: FiniteMdp, dp: FiniteMdp,
                             sigma_dp: MdStrategy) -> FdStrategy:
    """Turn a memoryless strategy of the expansion into a finite-memory
    strategy of the base MDP whose memory tracks the expansion quads."""
    K = _budget(len(m))

    def quad_after(u: int, n: int, mm: int):
        if n > K or mm > K or (mm == K and n > 0):
            return None
        try:
            tri = dp.vertex_index(triple_name(m.names[u], n, mm))
        except KeyError:
            return None
        q = sigma_dp.choice.get(tri)
        if q is None or dp.names[q] == DIV_VERTEX:
            return None
        return dp.names[q]

    return _fd_close(m, quad_after)


# ---------------------------------------------------------------------------
# Memory elimination


def _expected_first_return(ch_succ, ch_probs, reward, members, start, targets):
    """Expected reward until first hitting `targets` from `start`, the
    start reward counted, within a bottom component."""
    from .linalg import solve_sparse
    others = [x for x in members if x not in targets]
    pos = {x: i for i, x in enumerate(others)}
    rows = [dict() for _ in others]
    rhs = [Fraction(0)] * len(others)
    for x in others:
        i = pos[x]
        rows[i][i] = Fraction(1)
        rhs[i] = Fraction(reward[x])
        for y in ch_succ[x]:
            if y not in targets:
                rows[i][pos[y]] = rows[i].get(pos[y], Fraction(0)) - ch_probs[(x, y)]
    g = solve_sparse(rows, rhs, len(others)) if others else []
    er = Fraction(reward[start])
    for y in ch_succ[start]:
        if y not in targets:
            er += ch_probs[(start, y)] * g[pos[y]]
    return er


def _negative_first_return_possible(ch_succ, reward, members, start, targets):
    """Whether some first-return walk from `start` to `targets` has a
    negative reward sum (Bellman-Ford; unbounded descent counts)."""
    dist = {x: (0 if x in targets else None) for x in members}
    mids = [x for x in members if x not in targets]

    def relax() -> bool:
        changed = False
        for x in mids:
            best = dist[x]
            for y in ch_succ[x]:
                dy = dist[y]
                if dy is None:
                    continue
                cand = reward[x] + dy
                if best is None or cand < best:
                    best = cand
            if best is not None and (dist[x] is None or best < dist[x]):
                dist[x] = best
                changed = True
        return changed

    for _ in range(len(mids)):
        if not relax():
            break
    else:
        if relax():
            return True  # still relaxing: negative cycle off the targets
    best = None
    for y in ch_succ[start]:
        dy = dist[y]
        if dy is None:
            continue
        cand = reward[start] + dy
        if best is None or cand < best:
            best = cand
    return best is not None and best < 0


def fd_to_md(m: FiniteMdp, fd: FdStrategy, starts=None) -> MdStrategy:
    """Eliminate the memory of a finite-memory strategy: repeatedly merge
    the memory copies of an ambiguous vertex whose expected first-return
    reward is non-positive with a negative return possible, then route
    the rest towards the surviving components.

    Wins cover-negative almost surely from every start the input does."""
    fd.validate(m)
    if starts is None:
        starts = list(range(len(m)))
    mem_index = {k: i for i, k in enumerate(fd.memory_states)}
    # Product states (vertex, memory); memory already accounts the vertex.
    states: list[tuple[int, str]] = []
    index: dict[tuple[int, str], int] = {}

    def intern(x):
        i = index.get(x)
        if i is None:
            i = len(states)
            index[x] = i
            states.append(x)
        return i

    seeds = {}
    for s in starts:
        seeds[s] = intern((s, fd.step[(fd.initial, s)]))
    succ: list[list[int]] = []
    probs: dict[tuple[int, int], Fraction] = {}
    pos = 0
    while pos < len(states):
        u, k = states[pos]
        if u in m.controlled:
            w = fd.choice[(u, k)]
            outs = [(w, Fraction(1))]
        else:
            outs = [(w, m.probs[(u, w)]) for w in m.succ[u]]
        row = []
        for w, p in outs:
            j = intern((w, fd.step[(k, w)]))
            row.append(j)
            probs[(pos, j)] = p
        succ.append(row)
        pos += 1
    reward = [m.reward[u] for u, _ in states]

    def comp_union(seed_ids):
        comps = chain_mod.strongly_connected_components(len(states), succ)
        reach = set()
        for i in seed_ids:
            if i in reach:
                continue
            work = [i]
            reach.add(i)
            while work:
                x = work.pop()
                for y in succ[x]:
                    if y not in reach:
                        reach.add(y)
                        work.append(y)
        union = []
        for comp in comps:
            cset = set(comp)
            if comp[0] in reach and all(y in cset for x in comp for y in succ[x]):
                union.append(comp)
        return union

    # Keep only starts whose reachable bottom components are all good.
    good_seeds = []
    for s in sorted(seeds):
        ok = True
        for comp in comp_union([seeds[s]]):
            if not (_negative_first_return_possible(succ, reward, comp, comp[0],
                                                    {comp[0]})
                    and _expected_first_return(succ, probs, reward, comp, comp[0],
                                               {comp[0]}) <= 0):
                ok = False
                break
        if ok:
            good_seeds.append(seeds[s])
    if not good_seeds:
        raise ModelError("finite-memory strategy wins from none of the starts")

    for _ in range(len(m) + 1):
        comps = comp_union(good_seeds)
        in_union: dict[int, list[int]] = {}
        for comp in comps:
            for x in comp:
                in_union.setdefault(states[x][0], []).append(x)
        ambiguous = sorted(u for u, xs in in_union.items() if len(xs) > 1)
        if not ambiguous:
            break
        comp_of = {}
        for ci, comp in enumerate(comps):
            for x in comp:
                comp_of[x] = ci
        pick = None
        for u in ambiguous:
            for x in sorted(in_union[u], key=lambda x: mem_index[states[x][1]]):
                comp = comps[comp_of[x]]
                targets = {y for y in comp if states[y][0] == u}
                if (_negative_first_return_possible(succ, reward, comp, x, targets)
                        and _expected_first_return(succ, probs, reward, comp, x,
                                                   targets) <= 0):
                    pick = x
                    break
            if pick is not None:
                break
        if pick is None:
            raise ModelError("no merge candidate; input was not winning here")
        u_a = states[pick][0]
        redirect = {y for y in range(len(states))
                    if states[y][0] == u_a and y != pick}
        for x in range(len(states)):
            row = succ[x]
            if not any(y in redirect for y in row):
                continue
            newrow = []
            p_merged = Fraction(0)
            for y in row:
                if y in redirect or y == pick:
                    p_merged += probs.pop((x, y))
                    continue
                newrow.append(y)
            if p_merged:
                newrow.append(pick)
                probs[(x, pick)] = probs.get((x, pick), Fraction(0)) + p_merged
            succ[x] = newrow
    else:
        raise ModelError("memory elimination did not stabilize")

    comps = comp_union(good_seeds)
    core = {states[x][0] for comp in comps for x in comp}
    rho, _ = max_reach(m, core)
    reach_good = set()
    for i in good_seeds:
        work = [i]
        seen = {i}
        while work:
            x = work.pop()
            for y in succ[x]:
                if y not in seen:
                    seen.add(y)
                    work.append(y)
        reach_good |= seen
    mems_of: dict[int, set[str]] = {}
    for x in reach_good:
        mems_of.setdefault(states[x][0], set()).add(states[x][1])
    choice: dict[int, int] = {}
    for u in m.controlled:
        if u in core:
            xs = [x for comp in comps for x in comp if states[x][0] == u]
            nxt = {states[y][0] for x in xs for y in succ[x]}
            assert len(nxt) == 1
            choice[u] = next(iter(nxt))
        elif u in mems_of and len(mems_of[u]) == 1:
            choice[u] = fd.choice[(u, next(iter(mems_of[u])))]
        else:
            choice[u] = rho.choice[u]
    return MdStrategy(choice).validate(m)


# ---------------------------------------------------------------------------
# Quantitative solver and the one-counter wrapper


def solve_cn(m: FiniteMdp) -> tuple[list[Fraction], MdStrategy]:
    """Cover-negative values for every vertex plus one optimal
    memoryless strategy: value one inside the qualitative region, the
    optimal probability of reaching it elsewhere."""
    area, tau = qual_cn(m)
    rho, vals = max_reach(m, area)
    choice = {}
    for u in m.controlled:
        choice[u] = tau.choice[u] if u in area else rho.choice[u]
    return vals, MdStrategy(choice).validate(m)


def ocmdp_cn(a: OcMdp) -> tuple[dict[str, Fraction], CmdStrategy]:
    """Per-state probability that the counter covers every negative
    value (independent of the start counter), with an optimal
    counter-oblivious selector."""
    m = to_boundaryless_reward_mdp(a)
    vals, sigma = solve_cn(m)
    n_states = len(a.states)
    values = {q: vals[a.state_index(q)] for q in a.states}
    selector = {}
    for q in a.controlled:
        w = sigma.choice[a.state_index(q)]
        selector[q] = a.positive_rules[w - n_states]
    return values, CmdStrategy(selector).validate(a)


def cn_value_one_states(a: OcMdp) -> frozenset[str]:
    """The states whose cover-negative value is one; the cheap core of
    `ocmdp_cn` used by the termination analyses."""
    m = to_boundaryless_reward_mdp(a)
    area = cn_area(m)
    return frozenset(q for q in a.states if a.state_index(q) in area)
