"""Finite dynamic game forms with simultaneous moves and information sets.

A mechanism is a finite tree of action-profile histories.  Every action is a
non-empty set of the acting agent's type indices; at each decision node an
agent's available actions partition her last reported set, so reports are
gradually refined and can never contradict each other.  Terminal histories
carry outcome ids from the shared TypeModel.
"""

from __future__ import annotations

import hashlib
import itertools
from collections import deque

from .prefs import ScfTable


class MechanismError(Exception):
    """Raised when a mechanism cannot be represented or an operation's
    preconditions fail."""


def step_key(step):
    """Sortable canonical key of an action profile ((agent, action), ...)."""
    return tuple((agent, tuple(sorted(action))) for agent, action in step)


def make_step(parts):
    """Normalize {agent: iterable-of-types} into a canonical step tuple."""
    return tuple(sorted((a, frozenset(ts)) for a, ts in parts.items()))


class InfoSet:
    """One agent's information set: member nodes plus the common action menu."""

    __slots__ = ("agent", "nodes", "actions")

    def __init__(self, agent, nodes, actions):
        self.agent = agent
        self.nodes = tuple(sorted(nodes))
        self.actions = tuple(sorted(actions, key=lambda a: tuple(sorted(a))))

    def __repr__(self):
        return f"InfoSet(agent={self.agent}, nodes={list(self.nodes)})"


class Mechanism:
    """Immutable game form over a TypeModel.  Use ``build_mechanism``."""

    def __init__(self, model, parent, step, outcome, infoset_groups, renumbering=None):
        self.model = model
        self.parent = tuple(parent)
        self.step = tuple(step)
        self.outcome = dict(outcome)
        n = len(self.parent)
        self.children = [[] for _ in range(n)]
        for v in range(n):
            p = self.parent[v]
            if p is not None:
                self.children[p].append(v)
        self.children = tuple(tuple(c) for c in self.children)
        self.terminals = tuple(v for v in range(n) if not self.children[v])
        self.renumbering = renumbering

        # Last reported set per (node, agent); full type set until first action.
        full = [model.full_type_set(i) for i in range(model.n_agents)]
        theta = [None] * n
        theta[0] = tuple(full)
        order = self._bfs_order()
        for v in order:
            if v == 0:
                continue
            row = list(theta[self.parent[v]])
            for agent, action in self.step[v]:
                row[agent] = action
            theta[v] = tuple(row)
        self.theta = tuple(theta)

        # Acting agents per node, read off the children steps.
        self.acting = tuple(
            tuple(sorted({a for c in self.children[v] for (a, _) in self.step[c]}))
            for v in range(n)
        )

        self.infosets = tuple(
            InfoSet(agent, nodes, self._menu(agent, nodes))
            for agent, nodes in infoset_groups
        )
        self.node_iset = {}
        for k, iset in enumerate(self.infosets):
            for v in iset.nodes:
                self.node_iset[(iset.agent, v)] = k

        # Own-experience chains: ((infoset index, action), ...) strictly before v.
        self.experience = [dict() for _ in range(model.n_agents)]
        for i in range(model.n_agents):
            exp = self.experience[i]
            exp[0] = ()
            for v in order:
                if v == 0:
                    continue
                p = self.parent[v]
                step_map = dict(self.step[v])
                if i in step_map and (i, p) in self.node_iset:
                    exp[v] = exp[p] + ((self.node_iset[(i, p)], step_map[i]),)
                else:
                    exp[v] = exp[p]

        # Choice maps for consistency tests: per agent per node, infoset -> action.
        self.choices = [dict() for _ in range(model.n_agents)]
        for i in range(model.n_agents):
            ch = self.choices[i]
            for v in order:
                ch[v] = dict(self.experience[i][v])

        self._children_by_step = None
        self._terminals_under = None
        self._outcomes_under = None
        self._truthful = None
        self._conflicts = {}
        self._valid_report = None
        self._impl_cache = {}

    # -- structure helpers ------------------------------------------------

    def _bfs_order(self):
        order = []
        seen = [False] * len(self.parent)
        queue = deque([0])
        seen[0] = True
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in self.children[v]:
                if not seen[c]:
                    seen[c] = True
                    queue.append(c)
        return order

    def _menu(self, agent, nodes):
        menus = set()
        for v in nodes:
            acts = frozenset(dict(self.step[c]).get(agent)
                             for c in self.children[v]
                             if agent in dict(self.step[c]))
            acts = frozenset(a for a in acts if a is not None)
            menus.add(acts)
        if len(menus) == 1:
            return next(iter(menus))
        # Disagreeing menus are reported by validate(); keep the first node's.
        v = min(nodes)
        return frozenset(a for a in (dict(self.step[c]).get(agent)
                                     for c in self.children[v]) if a is not None)

    def n_nodes(self):
        return len(self.parent)

    def is_terminal(self, v):
        return not self.children[v]

    def depth(self, v):
        d = 0
        while self.parent[v] is not None:
            v = self.parent[v]
            d += 1
        return d

    def path_nodes(self, v):
        """Nodes from the root to v inclusive."""
        out = []
        while v is not None:
            out.append(v)
            v = self.parent[v]
        return out[::-1]

    def children_by_step(self, v):
        if self._children_by_step is None:
            self._children_by_step = [
                {step_key(self.step[c]): c for c in self.children[v2]}
                for v2 in range(self.n_nodes())
            ]
        return self._children_by_step[v]

    def terminals_under(self, v):
        if self._terminals_under is None:
            n = self.n_nodes()
            under = [None] * n
            for u in reversed(self._bfs_order()):
                if not self.children[u]:
                    under[u] = (u,)
                else:
                    acc = []
                    for c in self.children[u]:
                        acc.extend(under[c])
                    under[u] = tuple(acc)
            self._terminals_under = under
        return self._terminals_under[v]

    def outcomes_under(self, v):
        if self._outcomes_under is None:
            self._outcomes_under = [
                frozenset(self.outcome[z] for z in self.terminals_under(u))
                for u in range(self.n_nodes())
            ]
        return self._outcomes_under[v]

    # -- information-set structure ----------------------------------------

    def agent_infosets(self, agent):
        return [k for k, s in enumerate(self.infosets) if s.agent == agent]

    def infoset_predecessor(self, k):
        """Index of the agent's previous information set, with the action
        taken there, or (None, None) for her first decisions."""
        iset = self.infosets[k]
        v = iset.nodes[0]
        exp = self.experience[iset.agent][v]
        if not exp:
            return None, None
        return exp[-1]

    def theta_of(self, v, agent):
        return self.theta[v][agent]

    def theta_infoset(self, k):
        iset = self.infosets[k]
        return self.theta[iset.nodes[0]][iset.agent]

    def theta_minus(self, k):
        """Information acquired at an information set: the union over member
        nodes of the product of the other agents' current sets, as tuples in
        ascending agent order."""
        iset = self.infosets[k]
        others = [j for j in range(self.model.n_agents) if j != iset.agent]
        out = set()
        for v in iset.nodes:
            out.update(itertools.product(*(self.theta[v][j] for j in others)))
        return out

    def theta_profile_count(self, v):
        out = 1
        for s in self.theta[v]:
            out *= len(s)
        return out

    def theta_profiles(self, v):
        return itertools.product(*(sorted(s) for s in self.theta[v]))

    # -- play and consistency ----------------------------------------------

    def truthful_terminal(self, profile):
        return self.truthful_table()[profile]

    def truthful_table(self):
        if self._truthful is None:
            table = {}
            for z in self.terminals:
                for profile in self.theta_profiles(z):
                    table[profile] = z
            self._truthful = table
        return self._truthful

    def conflict_agents(self, u, v):
        """Agents whose recorded choices on the paths to u and v disagree on
        a shared information set.  Cached per node pair."""
        if u > v:
            u, v = v, u
        key = (u, v)
        cached = self._conflicts.get(key)
        if cached is not None:
            return cached
        out = []
        for i in range(self.model.n_agents):
            a = self.choices[i][u]
            b = self.choices[i][v]
            if len(b) < len(a):
                a, b = b, a
            for k, act in a.items():
                other = b.get(k)
                if other is not None and other != act:
                    out.append(i)
                    break
        out = frozenset(out)
        self._conflicts[key] = out
        return out

    # -- identity ------------------------------------------------------------

    def canonical_form(self):
        return (
            self.parent,
            tuple(step_key(s) if s else None for s in self.step),
            tuple(sorted(self.outcome.items())),
            tuple((s.agent, s.nodes) for s in self.infosets),
        )

    def fingerprint(self):
        text = repr((self.canonical_form(), self.model.type_names,
                     self.model.outcome_names))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def __repr__(self):
        return (f"Mechanism(nodes={self.n_nodes()}, terminals={len(self.terminals)}, "
                f"infosets={len(self.infosets)})")


def mechanisms_equal(a, b):
    return a.model == b.model and a.canonical_form() == b.canonical_form()


def build_mechanism(model, nodes, infoset_groups, outcomes):
    """Assemble and canonicalize a mechanism.

    ``nodes``: list of (parent_id, step) with ids arbitrary; step is None for
    the root and a ((agent, frozenset), ...) tuple otherwise.
    ``infoset_groups``: iterable of (agent, [node ids]).
    ``outcomes``: {node id: outcome id} for terminals.

    Only representability is enforced here; semantic rules are reported by
    ``validate`` so that broken inputs diagnose rather than crash.
    """
    n = len(nodes)
    if n == 0:
        raise MechanismError("empty mechanism")
    roots = [k for k, (p, _) in enumerate(nodes) if p is None]
    if len(roots) != 1:
        raise MechanismError(f"exactly one root required, found {len(roots)}")
    children = [[] for _ in range(n)]
    for k, (p, step) in enumerate(nodes):
        if p is None:
            continue
        if not (0 <= p < n):
            raise MechanismError(f"node {k}: dangling predecessor {p}")
        if not step:
            raise MechanismError(f"node {k}: missing action profile")
        for agent, action in step:
            if not (0 <= agent < model.n_agents):
                raise MechanismError(f"node {k}: unknown agent {agent}")
            if not action or not all(0 <= t < model.n_types(agent) for t in action):
                raise MechanismError(f"node {k}: bad action for agent {agent}")
        children[p].append(k)

    # Canonical renumbering: breadth-first, children sorted by step key.
    old_order = []
    queue = deque(roots)
    seen = {roots[0]}
    while queue:
        v = queue.popleft()
        old_order.append(v)
        for c in sorted(children[v], key=lambda c: (step_key(nodes[c][1]), c)):
            if c in seen:
                raise MechanismError("cycle in tree structure")
            seen.add(c)
            queue.append(c)
    if len(old_order) != n:
        raise MechanismError("disconnected nodes present")
    old2new = {old: new for new, old in enumerate(old_order)}

    parent = [None] * n
    step = [None] * n
    for old, (p, s) in enumerate(nodes):
        new = old2new[old]
        parent[new] = old2new[p] if p is not None else None
        step[new] = make_step(dict(s)) if s else None
    outcome = {}
    for old, x in outcomes.items():
        if not (0 <= old < n):
            raise MechanismError(f"outcome attached to unknown node {old}")
        if not (0 <= x < model.n_outcomes()):
            raise MechanismError(f"unknown outcome id {x}")
        outcome[old2new[old]] = x
    groups = []
    for agent, members in infoset_groups:
        if not (0 <= agent < model.n_agents):
            raise MechanismError(f"information set for unknown agent {agent}")
        ms = []
        for v in members:
            if not (0 <= v < n):
                raise MechanismError(f"information set references unknown node {v}")
            ms.append(old2new[v])
        if ms:
            groups.append((agent, tuple(sorted(ms))))
    groups.sort(key=lambda g: (g[0], g[1][0]))
    return Mechanism(model, parent, step, outcome, groups, renumbering=old2new)


def validate(mech):
    """Return a list of violation strings; empty iff the mechanism satisfies
    every structural rule: refined disjoint actions, closure of simultaneous
    moves, per-set uniform menus, perfect recall, root activity, and the
    terminal partition of the type-profile space.  Memoized per mechanism.
    """
    if mech._valid_report is None:
        mech._valid_report = _validate(mech)
    return mech._valid_report


def _validate(mech):
    model = mech.model
    report = []
    n = mech.n_nodes()

    for v in range(n):
        if mech.is_terminal(v):
            if v not in mech.outcome:
                report.append(f"terminal node {v} has no outcome")
        elif v in mech.outcome:
            report.append(f"non-terminal node {v} carries an outcome")

    # Simultaneous-move closure and action refinement.
    for v in range(n):
        if mech.is_terminal(v):
            continue
        agent_sets = {tuple(sorted(a for a, _ in mech.step[c])) for c in mech.children[v]}
        if len(agent_sets) != 1:
            report.append(f"node {v}: children disagree on the acting agents")
            continue
        acting = next(iter(agent_sets))
        if not acting:
            report.append(f"node {v}: children with empty action profiles")
            continue
        menus = {}
        for a in acting:
            menus[a] = []
        for c in mech.children[v]:
            for a, action in mech.step[c]:
                if action not in menus[a]:
                    menus[a].append(action)
        expected = 1
        for a in acting:
            expected *= len(menus[a])
        combos = {step_key(mech.step[c]) for c in mech.children[v]}
        if len(mech.children[v]) != len(combos):
            report.append(f"node {v}: duplicate action profiles")
        if len(combos) != expected:
            report.append(f"node {v}: children are not the full product of available actions")
        for a in acting:
            pool = mech.theta_of(v, a)
            union = set()
            total = 0
            for action in menus[a]:
                union |= action
                total += len(action)
            if total != len(union):
                report.append(f"node {v}: agent {a} has overlapping actions")
            if union != pool:
                report.append(
                    f"node {v}: agent {a} actions do not partition her current set")

    if not mech.is_terminal(0):
        root_acting = {a for c in mech.children[0] for a, _ in mech.step[c]}
        if root_acting != set(range(model.n_agents)):
            report.append("root: every agent must be active at the initial history")

    # Information sets: exact partition of each agent's decision nodes.
    for i in range(model.n_agents):
        decision_nodes = {v for v in range(n)
                          if not mech.is_terminal(v) and i in mech.acting[v]}
        covered = []
        for k in mech.agent_infosets(i):
            covered.extend(mech.infosets[k].nodes)
        if len(covered) != len(set(covered)):
            report.append(f"agent {i}: information sets overlap")
        if set(covered) != decision_nodes:
            report.append(f"agent {i}: information sets do not cover exactly her decision nodes")

    # Uniform menus and perfect recall within each information set.
    for k, iset in enumerate(mech.infosets):
        menus = set()
        for v in iset.nodes:
            acts = frozenset(dict(mech.step[c])[iset.agent]
                             for c in mech.children[v]
                             if iset.agent in dict(mech.step[c]))
            menus.add(acts)
        if len(menus) > 1:
            report.append(f"information set {k}: nodes offer different action menus")
        exps = {mech.experience[iset.agent][v] for v in iset.nodes}
        if len(exps) > 1:
            report.append(f"information set {k}: members violate perfect recall")

    # Terminal information partitions the full profile space.
    total = sum(mech.theta_profile_count(z) for z in mech.terminals)
    if total != model.n_profiles():
        report.append("terminal type sets do not partition the profile space")
    else:
        for profile in model.profiles():
            v = 0
            ok = True
            while not mech.is_terminal(v):
                want = {}
                for a in mech.acting[v]:
                    opts = [dict(mech.step[c])[a] for c in mech.children[v]
                            if a in dict(mech.step[c])]
                    match = [o for o in set(opts) if profile[a] in o]
                    if len(match) != 1:
                        ok = False
                        break
                    want[a] = match[0]
                if not ok:
                    break
                nxt = mech.children_by_step(v).get(step_key(make_step(want)))
                if nxt is None:
                    ok = False
                    break
                v = nxt
            if not ok:
                report.append(f"no unique truthful path for profile {profile}")
                break
    return report


def implemented_scf(mech):
    """The SCF a valid mechanism implements: outcome of each truthful path."""
    table = {profile: mech.outcome[z] for profile, z in mech.truthful_table().items()}
    return ScfTable(mech.model, table)


def implements(mech, f):
    """True iff every terminal's outcome equals f on its accrued type sets."""
    key = id(f)
    cached = mech._impl_cache.get(key)
    if cached is not None:
        return cached
    ok = True
    for z in mech.terminals:
        x = mech.outcome[z]
        for profile in mech.theta_profiles(z):
            if f[profile] != x:
                ok = False
                break
        if not ok:
            break
    mech._impl_cache[key] = ok
    return ok


def siblings_same_action(mech):
    """All pairs of one agent's information sets that immediately follow the
    same information set through the same action.

    Returns (agent, k1, k2) triples with k1 < k2 in canonical order.
    """
    groups = {}
    for k, iset in enumerate(mech.infosets):
        pred, action = mech.infoset_predecessor(k)
        if pred is None:
            continue
        groups.setdefault((iset.agent, pred, action), []).append(k)
    out = []
    for (agent, _, _), ks in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        ks.sort()
        for a_idx in range(len(ks)):
            for b_idx in range(a_idx + 1, len(ks)):
                out.append((agent, ks[a_idx], ks[b_idx]))
    return out


def is_static(mech):
    """A mechanism is static when every agent decides exactly once, at the
    initial history, i.e. the total number of information sets equals the
    number of agents."""
    return len(mech.infosets) == mech.model.n_agents
