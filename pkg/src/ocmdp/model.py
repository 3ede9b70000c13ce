"""Domain types for one-counter MDPs, finite reward MDPs, solvency games
and strategies, plus the text formats and the structural reductions
between the one-counter and finite worlds.

All probabilities and values are exact `fractions.Fraction` instances;
no floating point enters any decision procedure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

Rational = Fraction

# A counter rule (p, d, q): from state p move to state q changing the
# counter by d.  Zero rules have d in {0, +1}, positive rules in {-1, 0, +1}.
Rule = tuple[str, int, str]


class ModelError(Exception):
    """Structural invariant violation in a model."""


class ParseError(ModelError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


def parse_fraction(tok: str, line: Optional[int] = None) -> Fraction:
    if "/" not in tok:
        raise ParseError("probability must be written num/den, got %r" % tok, line)
    num, _, den = tok.partition("/")
    try:
        value = Fraction(int(num), int(den))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError("bad rational %r (%s)" % (tok, exc), line) from None
    return value


def format_fraction(x: Fraction) -> str:
    return "%d/%d" % (x.numerator, x.denominator)


def format_delta(d: int) -> str:
    return "+1" if d == 1 else str(d)


_DELTA = {"-1": -1, "0": 0, "+1": 1}


# ---------------------------------------------------------------------------
# One-counter MDPs


@dataclass
class OcMdp:
    """A one-counter MDP: finite states, zero/positive rules, an optional
    set of final states for selective termination.

    States are kept in declaration order; every "pick an arbitrary" step
    downstream resolves to the lowest index in this order.
    """

    states: tuple[str, ...]
    controlled: frozenset[str]
    zero_rules: tuple[Rule, ...]
    positive_rules: tuple[Rule, ...]
    zero_probs: dict[Rule, Fraction]
    positive_probs: dict[Rule, Fraction]
    finals: tuple[str, ...] = ()

    def __post_init__(self):
        self._index = {q: i for i, q in enumerate(self.states)}
        self._zero_out = {q: [] for q in self.states}
        self._pos_out = {q: [] for q in self.states}
        for r in self.zero_rules:
            self._zero_out[r[0]].append(r)
        for r in self.positive_rules:
            self._pos_out[r[0]].append(r)

    @property
    def probabilistic(self) -> frozenset[str]:
        return frozenset(self.states) - self.controlled

    def state_index(self, q: str) -> int:
        return self._index[q]

    def zero_out(self, q: str) -> list[Rule]:
        return self._zero_out[q]

    def positive_out(self, q: str) -> list[Rule]:
        return self._pos_out[q]

    def validate(self) -> "OcMdp":
        names = set()
        for q in self.states:
            if q in names:
                raise ModelError("duplicate state %r" % q)
            names.add(q)
        if not self.controlled <= names:
            raise ModelError("controlled states not declared: %s"
                             % sorted(self.controlled - names))
        for rules, deltas, kind in ((self.zero_rules, (0, 1), "zero"),
                                    (self.positive_rules, (-1, 0, 1), "positive")):
            seen = set()
            for p, d, q in rules:
                if p not in names or q not in names:
                    raise ModelError("%s rule (%s,%s,%s) uses undeclared state"
                                     % (kind, p, d, q))
                if d not in deltas:
                    raise ModelError("%s rule (%s,%s,%s) has bad counter change"
                                     % (kind, p, d, q))
                if (p, d, q) in seen:
                    raise ModelError("duplicate %s rule (%s,%s,%s)" % (kind, p, d, q))
                seen.add((p, d, q))
        for q in self.states:
            if not self._zero_out[q]:
                raise ModelError("state %r has no zero rule" % q)
            if not self._pos_out[q]:
                raise ModelError("state %r has no positive rule" % q)
        for q in self.probabilistic:
            for out, probs, kind in ((self._zero_out[q], self.zero_probs, "zero"),
                                     (self._pos_out[q], self.positive_probs, "positive")):
                total = Fraction(0)
                for r in out:
                    if r not in probs:
                        raise ModelError("missing probability on %s rule %s" % (kind, r))
                    if probs[r] <= 0:
                        raise ModelError("non-positive probability on %s rule %s" % (kind, r))
                    total += probs[r]
                if total != 1:
                    raise ModelError("%s distribution of %r sums to %s, not 1"
                                     % (kind, q, format_fraction(total)))
        for q in self.controlled:
            for r in self._zero_out[q] + self._pos_out[q]:
                if r in self.zero_probs or r in self.positive_probs:
                    raise ModelError("probability given on controlled rule %s" % (r,))
        fseen = set()
        for q in self.finals:
            if q not in names:
                raise ModelError("final state %r not declared" % q)
            if q in fseen:
                raise ModelError("duplicate final state %r" % q)
            fseen.add(q)
            if self._zero_out[q] != [(q, 0, q)]:
                raise ModelError(
                    "final state %r must have the self-loop (%s,0,%s) as its only "
                    "zero rule" % (q, q, q))
        return self


@dataclass(frozen=True)
class Config:
    """A configuration: a state plus a counter value."""

    state: str
    counter: int


def parse_ocmdp(text: str) -> OcMdp:
    """Parse the `.ocm` line format into a validated OcMdp."""
    states: list[str] = []
    controlled: set[str] = set()
    kind_of: dict[str, str] = {}
    zero_rules: list[Rule] = []
    positive_rules: list[Rule] = []
    zero_probs: dict[Rule, Fraction] = {}
    positive_probs: dict[Rule, Fraction] = {}
    finals: list[str] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if not header_seen:
            if toks != ["ocmdp"]:
                raise ParseError("expected header 'ocmdp'", lineno)
            header_seen = True
            continue
        kw = toks[0]
        if kw == "state":
            if len(toks) != 3 or toks[2] not in ("N", "P"):
                raise ParseError("expected 'state <name> N|P'", lineno)
            if toks[1] in kind_of:
                raise ParseError("duplicate state %r" % toks[1], lineno)
            states.append(toks[1])
            kind_of[toks[1]] = toks[2]
            if toks[2] == "N":
                controlled.add(toks[1])
        elif kw in ("zrule", "prule"):
            allowed = ("0", "+1") if kw == "zrule" else ("-1", "0", "+1")
            if len(toks) not in (4, 5) or toks[2] not in allowed:
                raise ParseError("expected '%s <p> %s <q> [num/den]'"
                                 % (kw, "|".join(allowed)), lineno)
            p, q = toks[1], toks[3]
            for s in (p, q):
                if s not in kind_of:
                    raise ParseError("undeclared state %r" % s, lineno)
            rule = (p, _DELTA[toks[2]], q)
            rules = zero_rules if kw == "zrule" else positive_rules
            probs = zero_probs if kw == "zrule" else positive_probs
            if rule in rules:
                raise ParseError("duplicate rule %s" % (rule,), lineno)
            if kind_of[p] == "P":
                if len(toks) != 5:
                    raise ParseError("probability required on rules of P-state %r" % p,
                                     lineno)
                probs[rule] = parse_fraction(toks[4], lineno)
            else:
                if len(toks) == 5:
                    raise ParseError("no probability allowed on rules of N-state %r" % p,
                                     lineno)
            rules.append(rule)
        elif kw == "final":
            if len(toks) != 2:
                raise ParseError("expected 'final <q>'", lineno)
            if toks[1] not in kind_of:
                raise ParseError("undeclared state %r" % toks[1], lineno)
            finals.append(toks[1])
        else:
            raise ParseError("unknown directive %r" % kw, lineno)
    if not header_seen:
        raise ParseError("missing 'ocmdp' header")
    mdp = OcMdp(tuple(states), frozenset(controlled), tuple(zero_rules),
                tuple(positive_rules), zero_probs, positive_probs, tuple(finals))
    return mdp.validate()


def serialize_ocmdp(a: OcMdp) -> str:
    out = ["ocmdp"]
    for q in a.states:
        out.append("state %s %s" % (q, "N" if q in a.controlled else "P"))
    for rule in a.zero_rules:
        p, d, q = rule
        line = "zrule %s %s %s" % (p, format_delta(d), q)
        if rule in a.zero_probs:
            line += " " + format_fraction(a.zero_probs[rule])
        out.append(line)
    for rule in a.positive_rules:
        p, d, q = rule
        line = "prule %s %s %s" % (p, format_delta(d), q)
        if rule in a.positive_probs:
            line += " " + format_fraction(a.positive_probs[rule])
        out.append(line)
    for q in a.finals:
        out.append("final %s" % q)
    return "\n".join(out) + "\n"


def normalize_finals(a: OcMdp) -> OcMdp:
    """Rewrite the zero rules of every final state to the mandatory
    self-loop.  Offered as an explicit operation; the validator itself
    never rewrites."""
    zero_rules = []
    zero_probs = dict(a.zero_probs)
    finals = set(a.finals)
    for rule in a.zero_rules:
        if rule[0] in finals:
            zero_probs.pop(rule, None)
            continue
        zero_rules.append(rule)
    for q in a.finals:
        zero_rules.append((q, 0, q))
        if q not in a.controlled:
            zero_probs[(q, 0, q)] = Fraction(1)
    return OcMdp(a.states, a.controlled, tuple(zero_rules), a.positive_rules,
                 zero_probs, a.positive_probs, a.finals).validate()


# ---------------------------------------------------------------------------
# Finite MDPs with rewards


@dataclass
class FiniteMdp:
    """A finite MDP with a total transition relation and a vertex reward
    in {-1, 0, +1}.  Vertices are indexed by position in `names`."""

    names: tuple[str, ...]
    controlled: frozenset[int]
    succ: tuple[tuple[int, ...], ...]
    probs: dict[tuple[int, int], Fraction]
    reward: tuple[int, ...]

    def __post_init__(self):
        self._index = {v: i for i, v in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    def vertex_index(self, name: str) -> int:
        return self._index[name]

    def is_controlled(self, v: int) -> bool:
        return v in self.controlled

    def validate(self) -> "FiniteMdp":
        n = len(self.names)
        if len(set(self.names)) != n:
            raise ModelError("duplicate vertex names")
        if len(self.succ) != n or len(self.reward) != n:
            raise ModelError("succ/reward length mismatch")
        for v in range(n):
            if not self.succ[v]:
                raise ModelError("vertex %r has no outgoing edge" % self.names[v])
            if len(set(self.succ[v])) != len(self.succ[v]):
                raise ModelError("duplicate edge out of %r" % self.names[v])
            if self.reward[v] not in (-1, 0, 1):
                raise ModelError("reward of %r outside {-1,0,1}" % self.names[v])
            if v in self.controlled:
                for w in self.succ[v]:
                    if (v, w) in self.probs:
                        raise ModelError("probability on controlled edge %r->%r"
                                         % (self.names[v], self.names[w]))
            else:
                total = Fraction(0)
                for w in self.succ[v]:
                    p = self.probs.get((v, w))
                    if p is None:
                        raise ModelError("missing probability on %r->%r"
                                         % (self.names[v], self.names[w]))
                    if p <= 0:
                        raise ModelError("non-positive probability on %r->%r"
                                         % (self.names[v], self.names[w]))
                    total += p
                if total != 1:
                    raise ModelError("distribution of %r sums to %s"
                                     % (self.names[v], format_fraction(total)))
        return self


def parse_mdp(text: str) -> FiniteMdp:
    """Parse the `.mdp` line format into a validated FiniteMdp."""
    names: list[str] = []
    kind_of: dict[str, str] = {}
    rewards: list[int] = []
    edges: dict[str, list[str]] = {}
    eprobs: dict[tuple[str, str], Fraction] = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if not header_seen:
            if toks != ["mdp"]:
                raise ParseError("expected header 'mdp'", lineno)
            header_seen = True
            continue
        kw = toks[0]
        if kw == "vertex":
            if (len(toks) != 4 or toks[2] not in ("N", "P")
                    or not toks[3].startswith("r=") or toks[3][2:] not in ("-1", "0", "1", "+1")):
                raise ParseError("expected 'vertex <name> N|P r=<-1|0|1>'", lineno)
            if toks[1] in kind_of:
                raise ParseError("duplicate vertex %r" % toks[1], lineno)
            names.append(toks[1])
            kind_of[toks[1]] = toks[2]
            rewards.append(int(toks[3][2:]))
            edges[toks[1]] = []
        elif kw == "edge":
            if len(toks) not in (3, 4):
                raise ParseError("expected 'edge <u> <v> [num/den]'", lineno)
            u, v = toks[1], toks[2]
            for s in (u, v):
                if s not in kind_of:
                    raise ParseError("undeclared vertex %r" % s, lineno)
            if v in edges[u]:
                raise ParseError("duplicate edge %s -> %s" % (u, v), lineno)
            edges[u].append(v)
            if kind_of[u] == "P":
                if len(toks) != 4:
                    raise ParseError("probability required on edges of P-vertex %r" % u,
                                     lineno)
                eprobs[(u, v)] = parse_fraction(toks[3], lineno)
            elif len(toks) == 4:
                raise ParseError("no probability allowed on edges of N-vertex %r" % u,
                                 lineno)
        else:
            raise ParseError("unknown directive %r" % kw, lineno)
    if not header_seen:
        raise ParseError("missing 'mdp' header")
    index = {v: i for i, v in enumerate(names)}
    mdp = FiniteMdp(
        tuple(names),
        frozenset(index[v] for v in names if kind_of[v] == "N"),
        tuple(tuple(index[w] for w in edges[v]) for v in names),
        {(index[u], index[v]): p for (u, v), p in eprobs.items()},
        tuple(rewards),
    )
    return mdp.validate()


def serialize_mdp(m: FiniteMdp) -> str:
    out = ["mdp"]
    for v, name in enumerate(m.names):
        out.append("vertex %s %s r=%d"
                   % (name, "N" if v in m.controlled else "P", m.reward[v]))
    for v, name in enumerate(m.names):
        for w in m.succ[v]:
            line = "edge %s %s" % (name, m.names[w])
            if (v, w) in m.probs:
                line += " " + format_fraction(m.probs[(v, w)])
            out.append(line)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Strategies


@dataclass
class MdStrategy:
    """A memoryless deterministic strategy on a FiniteMdp: one chosen
    successor per controlled vertex (indices)."""

    choice: dict[int, int]

    def validate(self, m: FiniteMdp) -> "MdStrategy":
        for v in m.controlled:
            if v not in self.choice:
                raise ModelError("strategy undefined on controlled vertex %r"
                                 % m.names[v])
            if self.choice[v] not in m.succ[v]:
                raise ModelError("strategy uses missing edge %r -> %r"
                                 % (m.names[v], m.names[self.choice[v]]))
        return self


@dataclass
class CmdStrategy:
    """A counter-oblivious memoryless deterministic strategy: a selector
    mapping each controlled state to one of its positive rules."""

    selector: dict[str, Rule]

    def validate(self, a: OcMdp) -> "CmdStrategy":
        for q in a.controlled:
            if q not in self.selector:
                raise ModelError("selector undefined on controlled state %r" % q)
            if self.selector[q] not in a.positive_out(q):
                raise ModelError("selector of %r picks a foreign rule %s"
                                 % (q, self.selector[q]))
        for q in self.selector:
            if q not in a.controlled:
                raise ModelError("selector defined on probabilistic state %r" % q)
        return self


@dataclass
class FdStrategy:
    """A deterministic strategy with finite DFA memory over MDP vertices.

    `step` maps (memory, vertex index) to the next memory state; `choice`
    maps (vertex index, memory) to the chosen successor for controlled
    vertices.
    """

    memory_states: tuple[str, ...]
    initial: str
    step: dict[tuple[str, int], str]
    choice: dict[tuple[int, str], int]

    def validate(self, m: FiniteMdp) -> "FdStrategy":
        mem = set(self.memory_states)
        if self.initial not in mem:
            raise ModelError("initial memory state missing")
        for k in self.memory_states:
            for v in range(len(m)):
                if (k, v) not in self.step or self.step[(k, v)] not in mem:
                    raise ModelError("memory update undefined at (%s, %s)"
                                     % (k, m.names[v]))
        for k in self.memory_states:
            for v in m.controlled:
                if (v, k) not in self.choice or self.choice[(v, k)] not in m.succ[v]:
                    raise ModelError("choice undefined/invalid at (%s, %s)"
                                     % (m.names[v], k))
        return self


@dataclass
class AAutomaton:
    """One-letter DFA plus an entry map; recognizes a regular set of
    configurations: p(i) is accepted iff the DFA accepts a^i from entry(p)."""

    dfa_states: tuple[str, ...]
    advance: dict[str, str]
    accepting: frozenset[str]
    entry: dict[str, str]

    def run(self, p: str, i: int) -> str:
        c = self.entry[p]
        for _ in range(i):
            c = self.advance[c]
        return c

    def accepts(self, p: str, i: int) -> bool:
        return self.run(p, i) in self.accepting


@dataclass
class CounterRegularStrategy:
    """A strategy whose choice at p(i) is read off a one-letter DFA fed
    the counter value: an automaton over counter phases plus a selector
    table per (state, phase).

    `threshold` and `period` describe the phase structure: phases track
    the counter exactly up to threshold+period-1 and then cycle with the
    given period.  `zero_table` carries the zero-rule choices of
    controlled states (needed to resolve controlled configurations at
    counter zero when simulating).
    """

    automaton: AAutomaton
    table: dict[tuple[str, int], Rule]
    threshold: int
    period: int
    zero_table: dict[str, Rule] = field(default_factory=dict)

    def phase(self, i: int) -> int:
        t = self.threshold
        if i < t + self.period:
            return i
        return t + ((i - t) % self.period)

    def rule_at(self, p: str, i: int) -> Rule:
        if i == 0:
            return self.zero_table[p]
        return self.table[(p, self.phase(i))]


# ---------------------------------------------------------------------------
# Solvency games


@dataclass
class SolvencyGame:
    """A one-player gambling model: each action is a finite-support
    integer-valued distribution of wealth changes."""

    action_names: tuple[str, ...]
    actions: tuple[tuple[tuple[int, Fraction], ...], ...]

    def validate(self) -> "SolvencyGame":
        if not self.action_names:
            raise ModelError("a solvency game needs at least one action")
        if len(set(self.action_names)) != len(self.action_names):
            raise ModelError("duplicate action names")
        if len(self.action_names) != len(self.actions):
            raise ModelError("action name/body mismatch")
        for name, outcomes in zip(self.action_names, self.actions):
            if not outcomes:
                raise ModelError("action %r has empty support" % name)
            total = Fraction(0)
            for _, p in outcomes:
                if p <= 0:
                    raise ModelError("non-positive outcome probability in %r" % name)
                total += p
            if total != 1:
                raise ModelError("action %r probabilities sum to %s"
                                 % (name, format_fraction(total)))
        return self


def parse_solvency(text: str) -> SolvencyGame:
    """Parse the `.slv` line format into a validated SolvencyGame."""
    names: list[str] = []
    actions: list[list[tuple[int, Fraction]]] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if not header_seen:
            if toks != ["solvency"]:
                raise ParseError("expected header 'solvency'", lineno)
            header_seen = True
            continue
        if toks[0] == "action":
            if len(toks) != 2:
                raise ParseError("expected 'action <name>'", lineno)
            if toks[1] in names:
                raise ParseError("duplicate action %r" % toks[1], lineno)
            names.append(toks[1])
            actions.append([])
        elif toks[0] == "outcome":
            if len(toks) != 3:
                raise ParseError("expected 'outcome <delta> <num>/<den>'", lineno)
            if not actions:
                raise ParseError("outcome before any action", lineno)
            try:
                delta = int(toks[1])
            except ValueError:
                raise ParseError("bad delta %r" % toks[1], lineno) from None
            actions[-1].append((delta, parse_fraction(toks[2], lineno)))
        else:
            raise ParseError("unknown directive %r" % toks[0], lineno)
    if not header_seen:
        raise ParseError("missing 'solvency' header")
    game = SolvencyGame(tuple(names), tuple(tuple(a) for a in actions))
    return game.validate()


def serialize_solvency(g: SolvencyGame) -> str:
    out = ["solvency"]
    for name, outcomes in zip(g.action_names, g.actions):
        out.append("action %s" % name)
        for delta, p in outcomes:
            out.append("outcome %d %s" % (delta, format_fraction(p)))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Reductions to finite MDPs


def rule_vertex_name(rule: Rule) -> str:
    p, d, q = rule
    return "%s,%s,%s" % (p, format_delta(d), q)


def to_boundaryless_reward_mdp(a: OcMdp) -> FiniteMdp:
    """The bipartite reward MDP of the boundaryless counter semantics:
    state vertices (reward 0) alternate with positive-rule vertices
    (reward = counter change).  Rule vertices are controlled; at
    probabilistic states the rule distribution drives the branch."""
    names = list(a.states) + [rule_vertex_name(r) for r in a.positive_rules]
    index = {v: i for i, v in enumerate(names)}
    n_states = len(a.states)
    succ: list[list[int]] = [[] for _ in names]
    probs: dict[tuple[int, int], Fraction] = {}
    reward = [0] * n_states + [r[1] for r in a.positive_rules]
    controlled = set(range(n_states, len(names)))
    for q in a.controlled:
        controlled.add(index[q])
    for i, rule in enumerate(a.positive_rules):
        p, _, q = rule
        pi, ri = index[p], n_states + i
        succ[pi].append(ri)
        if p not in a.controlled:
            probs[(pi, ri)] = a.positive_probs[rule]
        succ[ri].append(index[q])
    return FiniteMdp(tuple(names), frozenset(controlled),
                     tuple(tuple(s) for s in succ), probs,
                     tuple(reward)).validate()


def config_vertex_name(q: str, i: int) -> str:
    return "%s(%d)" % (q, i)


OVERFLOW_VERTEX = "overflow"


def truncated_unfolding(a: OcMdp, cap: int, absorb_above: bool) -> FiniteMdp:
    """The finite unfolding of the bounded-counter semantics on levels
    0..cap.  With absorb_above, level-cap vertices are absorbing
    self-loops; otherwise their increments are redirected to a dead
    `overflow` sink and the other rules keep acting."""
    if cap < 1:
        raise ModelError("cap must be >= 1")
    names = [config_vertex_name(q, i) for q in a.states for i in range(cap + 1)]
    index = {v: i for i, v in enumerate(names)}
    if not absorb_above:
        names.append(OVERFLOW_VERTEX)
        overflow = len(names) - 1
    succ: list[list[int]] = [[] for _ in names]
    probs: dict[tuple[int, int], Fraction] = {}
    controlled: set[int] = set()

    def add(u: int, w: int, p: Optional[Fraction]):
        if w in succ[u]:
            if p is not None:
                probs[(u, w)] += p
            return
        succ[u].append(w)
        if p is not None:
            probs[(u, w)] = p

    for q in a.states:
        is_n = q in a.controlled
        for i in range(cap + 1):
            u = index[config_vertex_name(q, i)]
            if i == 0:
                rules, rp = a.zero_out(q), a.zero_probs
            elif i == cap and absorb_above:
                add(u, u, Fraction(1))
                continue
            else:
                rules, rp = a.positive_out(q), a.positive_probs
            if is_n:
                controlled.add(u)
            for rule in rules:
                _, d, tgt = rule
                p = None if is_n else rp[rule]
                if i + d > cap:
                    add(u, overflow, p)
                else:
                    add(u, index[config_vertex_name(tgt, i + d)], p)
    if not absorb_above:
        succ[overflow] = [overflow]
        probs[(overflow, overflow)] = Fraction(1)
    return FiniteMdp(tuple(names), frozenset(controlled),
                     tuple(tuple(s) for s in succ), probs,
                     tuple([0] * len(names))).validate()


def negate_rewards(m: FiniteMdp) -> FiniteMdp:
    """Mirror the reward function; turns the cover-negative objective
    into its lim-sup-positive twin."""
    return FiniteMdp(m.names, m.controlled, m.succ, m.probs,
                     tuple(-r for r in m.reward))


# ---------------------------------------------------------------------------
# Strategy text formats


def serialize_cmd_strategy(s: CmdStrategy, a: OcMdp) -> str:
    out = ["cmd"]
    for q in a.states:
        if q in s.selector:
            p, d, tgt = s.selector[q]
            out.append("select %s %s %s" % (p, format_delta(d), tgt))
    return "\n".join(out) + "\n"


def parse_cmd_strategy(text: str, a: OcMdp) -> CmdStrategy:
    sel: dict[str, Rule] = {}
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [(i + 1, l) for i, l in enumerate(lines) if l]
    if not lines or lines[0][1] != "cmd":
        raise ParseError("expected header 'cmd'")
    for lineno, line in lines[1:]:
        toks = line.split()
        if len(toks) != 4 or toks[0] != "select" or toks[2] not in _DELTA:
            raise ParseError("expected 'select <state> <d> <target>'", lineno)
        if toks[1] in sel:
            raise ParseError("duplicate selection for %r" % toks[1], lineno)
        sel[toks[1]] = (toks[1], _DELTA[toks[2]], toks[3])
    return CmdStrategy(sel).validate(a)


def serialize_md_strategy(s: MdStrategy, m: FiniteMdp) -> str:
    out = ["md"]
    for v in sorted(s.choice):
        out.append("choose %s %s" % (m.names[v], m.names[s.choice[v]]))
    return "\n".join(out) + "\n"


def parse_md_strategy(text: str, m: FiniteMdp) -> MdStrategy:
    choice: dict[int, int] = {}
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [(i + 1, l) for i, l in enumerate(lines) if l]
    if not lines or lines[0][1] != "md":
        raise ParseError("expected header 'md'")
    for lineno, line in lines[1:]:
        toks = line.split()
        if len(toks) != 3 or toks[0] != "choose":
            raise ParseError("expected 'choose <vertex> <vertex>'", lineno)
        try:
            u, v = m.vertex_index(toks[1]), m.vertex_index(toks[2])
        except KeyError as exc:
            raise ParseError("unknown vertex %s" % exc, lineno) from None
        if u in choice:
            raise ParseError("duplicate choice for %r" % toks[1], lineno)
        choice[u] = v
    return MdStrategy(choice).validate(m)
