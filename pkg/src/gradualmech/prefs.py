"""Weak-order preferences, type models, and social choice tables."""

from __future__ import annotations

import itertools


class WeakOrder:
    """A complete transitive preference stored as indifference levels.

    ``levels`` is an ordered list of disjoint non-empty sets of outcome ids;
    everything in level k is strictly preferred to everything in level k+1,
    and outcomes sharing a level are indifferent.  Completeness and
    transitivity hold by construction.
    """

    __slots__ = ("levels", "_level_of")

    def __init__(self, levels):
        self.levels = tuple(frozenset(lv) for lv in levels)
        self._level_of = {}
        for k, lv in enumerate(self.levels):
            if not lv:
                raise ValueError("empty indifference level")
            for x in lv:
                if x in self._level_of:
                    raise ValueError(f"outcome {x} appears in two levels")
                self._level_of[x] = k

    def level(self, outcome):
        return self._level_of[outcome]

    def outcomes(self):
        return frozenset(self._level_of)

    def __eq__(self, other):
        return isinstance(other, WeakOrder) and self.levels == other.levels

    def __hash__(self):
        return hash(self.levels)

    def __repr__(self):
        return f"WeakOrder({[sorted(lv) for lv in self.levels]})"


class TypeModel:
    """Agents, their finite type lists, and one weak order per type.

    All weak orders range over the shared outcome list.  Outcome identity is
    positional; any outcome semantics (payoffs, matchings) live with the
    code that constructed the model.
    """

    def __init__(self, type_names, outcome_names, prefs, agent_names=None):
        self.type_names = tuple(tuple(names) for names in type_names)
        self.outcome_names = tuple(outcome_names)
        self.n_agents = len(self.type_names)
        self.agent_names = tuple(agent_names) if agent_names else tuple(
            f"agent{i}" for i in range(self.n_agents))
        if len(self.agent_names) != self.n_agents:
            raise ValueError("agent_names length mismatch")
        if len(set(self.outcome_names)) != len(self.outcome_names):
            raise ValueError("duplicate outcome names")
        self.prefs = tuple(tuple(p) for p in prefs)
        if len(self.prefs) != self.n_agents:
            raise ValueError("prefs must cover every agent")
        full = frozenset(range(len(self.outcome_names)))
        for i, per_type in enumerate(self.prefs):
            if len(per_type) != len(self.type_names[i]):
                raise ValueError(f"agent {i}: one weak order per type required")
            for order in per_type:
                if order.outcomes() != full:
                    raise ValueError(f"agent {i}: weak order does not cover all outcomes")

    def n_types(self, agent):
        return len(self.type_names[agent])

    def all_types(self, agent):
        return range(len(self.type_names[agent]))

    def full_type_set(self, agent):
        return frozenset(range(len(self.type_names[agent])))

    def n_outcomes(self):
        return len(self.outcome_names)

    def profiles(self):
        """Iterate all complete type profiles in lexicographic order."""
        return itertools.product(*(self.all_types(i) for i in range(self.n_agents)))

    def n_profiles(self):
        out = 1
        for i in range(self.n_agents):
            out *= self.n_types(i)
        return out

    def order(self, agent, type_idx):
        return self.prefs[agent][type_idx]

    def weakly_prefers(self, agent, type_idx, x, y):
        order = self.prefs[agent][type_idx]
        return order.level(x) <= order.level(y)

    def strictly_prefers(self, agent, type_idx, x, y):
        order = self.prefs[agent][type_idx]
        return order.level(x) < order.level(y)

    def indifferent(self, agent, type_idx, x, y):
        order = self.prefs[agent][type_idx]
        return order.level(x) == order.level(y)

    def __eq__(self, other):
        return (isinstance(other, TypeModel)
                and self.type_names == other.type_names
                and self.outcome_names == other.outcome_names
                and self.prefs == other.prefs)

    def __repr__(self):
        return (f"TypeModel(agents={self.n_agents}, "
                f"types={[len(t) for t in self.type_names]}, "
                f"outcomes={len(self.outcome_names)})")


def weakly_prefers(model, agent, type_idx, x, y):
    """True iff outcome x is weakly preferred to y by the given type."""
    return model.weakly_prefers(agent, type_idx, x, y)


class ScfTable:
    """A total map from complete type profiles to outcome ids."""

    def __init__(self, model, table):
        self.model = model
        self.table = dict(table)
        n_out = model.n_outcomes()
        for profile in model.profiles():
            if profile not in self.table:
                raise ValueError(f"SCF not total: missing profile {profile}")
            x = self.table[profile]
            if not (0 <= x < n_out):
                raise ValueError(f"SCF maps {profile} to unknown outcome {x}")
        if len(self.table) != model.n_profiles():
            extra = set(self.table) - set(model.profiles())
            raise ValueError(f"SCF table has spurious entries: {sorted(extra)[:3]}")

    def __getitem__(self, profile):
        return self.table[profile]

    def __eq__(self, other):
        return isinstance(other, ScfTable) and self.table == other.table

    def items(self):
        return self.table.items()

    def image(self):
        return sorted(set(self.table.values()))


def is_strategy_proof(model, f):
    """Check dominance of truthful reporting in the one-shot sense.

    Returns ``(True, None)`` or ``(False, (agent, true_type, misreport,
    others))`` with the first violation in (agent, type, misreport, others)
    enumeration order.
    """
    n = model.n_agents
    for i in range(n):
        others_spaces = [model.all_types(j) for j in range(n) if j != i]
        for ti in model.all_types(i):
            for ti_mis in model.all_types(i):
                if ti_mis == ti:
                    continue
                for rest in itertools.product(*others_spaces):
                    profile = rest[:i] + (ti,) + rest[i:]
                    deviated = rest[:i] + (ti_mis,) + rest[i:]
                    if not model.weakly_prefers(i, ti, f[profile], f[deviated]):
                        return False, (i, ti, ti_mis, rest)
    return True, None
