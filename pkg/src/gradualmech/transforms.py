"""The three basic tree transformations, their inverses, opportunity
detection, the incentive-preservation test for illuminations, and the
reduction of any mechanism to its one-shot (direct) form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .checkers import Verdict, Witness
from .gameform import (MechanismError, build_mechanism, implements, is_static,
                       make_step, mechanisms_equal, validate)


@dataclass(frozen=True)
class Split:
    """Append a finer report: the agent splits ``action`` taken at
    ``infoset`` into two parts, chosen at the terminals that follow it."""
    agent: int
    infoset: int
    action: frozenset
    part1: frozenset
    part2: frozenset


@dataclass(frozen=True)
class Coalesce:
    """Advance the actions of ``target`` over ``action`` at ``infoset`` when
    the agent learns nothing in between."""
    agent: int
    infoset: int
    action: frozenset
    target: int


@dataclass(frozen=True)
class Illuminate:
    """Partition one information set in two, refining the agent's knowledge;
    parts are node-id tuples."""
    agent: int
    infoset: int
    part1: tuple
    part2: tuple


@dataclass(frozen=True)
class Merge:
    """Inverse illumination: reunite two information sets (and the successor
    partitions they induced)."""
    agent: int
    first: int
    second: int


def _raw_nodes(mech):
    return [(mech.parent[v], mech.step[v]) for v in range(mech.n_nodes())]


def _raw_groups(mech):
    return [(s.agent, list(s.nodes)) for s in mech.infosets]


def _split_terminals(mech, k, action):
    """Terminals below information set k at which the agent's last decision
    was choosing ``action`` there: she makes no further decision afterwards,
    not even a degenerate one, so the appended choice pools cleanly."""
    iset = mech.infosets[k]
    out = []
    for v in iset.nodes:
        want = mech.experience[iset.agent][v] + ((k, action),)
        out.extend(z for z in mech.terminals_under(v)
                   if mech.experience[iset.agent][z] == want)
    return out


def apply_split(mech, t):
    """Splitting: the finer choice is appended at every terminal where the
    agent's accrued report equals ``action`` below the information set."""
    if t.infoset >= len(mech.infosets) or mech.infosets[t.infoset].agent != t.agent:
        raise MechanismError("split: no such information set for that agent")
    iset = mech.infosets[t.infoset]
    if t.action not in iset.actions:
        raise MechanismError("split: action not available at the information set")
    if (not t.part1 or not t.part2 or t.part1 & t.part2
            or (t.part1 | t.part2) != t.action):
        raise MechanismError("split: parts must be a two-way partition of the action")
    below = _split_terminals(mech, t.infoset, t.action)
    if not below:
        raise MechanismError(
            "split: the agent decides again after that action (no terminal keeps it)")

    nodes = _raw_nodes(mech)
    outcomes = dict(mech.outcome)
    for z in below:
        x = outcomes.pop(z)
        for part in (t.part1, t.part2):
            nodes.append((z, make_step({t.agent: part})))
            outcomes[len(nodes) - 1] = x
    groups = _raw_groups(mech)
    groups.append((t.agent, list(below)))
    return build_mechanism(mech.model, nodes, groups, outcomes)


def coalesce_ready(mech, t):
    """Check the coalescing opportunity; return an error string or None."""
    if t.infoset >= len(mech.infosets) or mech.infosets[t.infoset].agent != t.agent:
        return "coalesce: no such source information set for that agent"
    if t.target >= len(mech.infosets) or mech.infosets[t.target].agent != t.agent:
        return "coalesce: no such target information set for that agent"
    if t.action not in mech.infosets[t.infoset].actions:
        return "coalesce: action not available at the source information set"
    pred, action = mech.infoset_predecessor(t.target)
    if pred != t.infoset or action != t.action:
        return "coalesce: target does not immediately follow the source through that action"
    if mech.theta_minus(t.infoset) != mech.theta_minus(t.target):
        return "coalesce: the agent acquires information between the two decisions"
    return None


def apply_coalesce(mech, t):
    """Coalescing: the target's menu replaces ``action`` at the source; the
    target's decision step is spliced out of every affected history."""
    problem = coalesce_ready(mech, t)
    if problem:
        raise MechanismError(problem)
    i = t.agent
    source_nodes = set(mech.infosets[t.infoset].nodes)
    target_nodes = set(mech.infosets[t.target].nodes)
    new_actions = mech.infosets[t.target].actions

    nodes = []
    outcomes = {}
    tmap = []  # new id -> old id whose information sets it inherits

    def add(parent_new, step, old):
        nodes.append((parent_new, step))
        tmap.append(old)
        return len(nodes) - 1

    def plain_copy(old, parent_new, step):
        new = add(parent_new, step, old)
        if old in mech.outcome:
            outcomes[new] = mech.outcome[old]
        for c in mech.children[old]:
            plain_copy(c, new, mech.step[c])

    def rewrite(old, parent_new, step, branch):
        """Copy the region between the source action and the target nodes,
        with the agent's pending choice fixed to ``branch``."""
        if old in target_nodes:
            kept = [c for c in mech.children[old]
                    if dict(mech.step[c]).get(i) == branch]
            if not kept:
                raise MechanismError("coalesce: target node missing the branch action")
            if all(len(mech.step[c]) == 1 for c in kept):
                # The agent moved alone there: splice her step out entirely.
                if len(kept) != 1:
                    raise MechanismError("coalesce: ambiguous splice at target node")
                plain_copy(kept[0], parent_new, step)
                return
            new = add(parent_new, step, old)
            for c in kept:
                rest = tuple(p for p in mech.step[c] if p[0] != i)
                plain_copy(c, new, rest)
            return
        if old in mech.outcome:
            raise MechanismError(
                "coalesce: a terminal precedes the target below the source action")
        new = add(parent_new, step, old)
        for c in mech.children[old]:
            rewrite(c, new, mech.step[c], branch)

    def copy_general(old, parent_new, step):
        new = add(parent_new, step, old)
        if old in mech.outcome:
            outcomes[new] = mech.outcome[old]
        in_source = old in source_nodes
        for c in mech.children[old]:
            cstep = dict(mech.step[c])
            if in_source and cstep.get(i) == t.action:
                for branch in new_actions:
                    cstep2 = dict(cstep)
                    cstep2[i] = branch
                    rewrite(c, new, make_step(cstep2), branch)
            else:
                copy_general(c, new, mech.step[c])

    copy_general(0, None, None)

    # Pull every surviving information set back through the history mapping.
    child_agents = [set() for _ in nodes]
    for c, (p, step) in enumerate(nodes):
        if p is not None and step:
            for a, _ in step:
                child_agents[p].add(a)
    group_map = {}
    for new, old in enumerate(tmap):
        for a in child_agents[new]:
            k = mech.node_iset.get((a, old))
            if k is None or k == t.target:
                raise MechanismError("coalesce: inconsistent information sets in input")
            group_map.setdefault(k, []).append(new)
    groups = [(mech.infosets[k].agent, members)
              for k, members in sorted(group_map.items())]
    return build_mechanism(mech.model, nodes, groups, outcomes)


def apply_illuminate(mech, t):
    """Illumination: the tree is unchanged; the information set splits in two
    and every successor set of the same agent splits by which part precedes
    each node."""
    if t.infoset >= len(mech.infosets) or mech.infosets[t.infoset].agent != t.agent:
        raise MechanismError("illuminate: no such information set for that agent")
    iset = mech.infosets[t.infoset]
    p1, p2 = set(t.part1), set(t.part2)
    if not p1 or not p2 or (p1 & p2) or (p1 | p2) != set(iset.nodes):
        raise MechanismError("illuminate: parts must be a two-way partition of the set")
    i = t.agent

    def part_of(v):
        for u in mech.path_nodes(v):
            if u in p1:
                return 1
            if u in p2:
                return 2
        return None

    groups = []
    for other in mech.infosets:
        if other.agent != i:
            groups.append((other.agent, list(other.nodes)))
            continue
        marks = {v: part_of(v) for v in other.nodes}
        if all(m is None for m in marks.values()):
            groups.append((i, list(other.nodes)))
            continue
        if any(m is None for m in marks.values()):
            raise MechanismError("illuminate: successor set straddles the split inconsistently")
        side1 = [v for v, m in marks.items() if m == 1]
        side2 = [v for v, m in marks.items() if m == 2]
        if side1:
            groups.append((i, side1))
        if side2:
            groups.append((i, side2))
    return build_mechanism(mech.model, _raw_nodes(mech), groups, mech.outcome)


def apply_merge(mech, t):
    """Inverse illumination.  Reunites two information sets (and recursively
    the successor partitions they induced), then checks that illuminating the
    result reproduces the original mechanism.

    Returns ``(merged, forward)`` where ``forward`` is the Illuminate record,
    in the merged mechanism's numbering, whose application round-trips.
    """
    if (t.first >= len(mech.infosets) or t.second >= len(mech.infosets)
            or t.first == t.second):
        raise MechanismError("merge: need two distinct information sets")
    a, b = mech.infosets[t.first], mech.infosets[t.second]
    if a.agent != t.agent or b.agent != t.agent:
        raise MechanismError("merge: information sets belong to another agent")
    if a.actions != b.actions:
        raise MechanismError("merge: the two sets offer different action menus")
    i = t.agent
    merged_ids = {t.first, t.second}

    ks = mech.agent_infosets(i)
    by_depth = sorted(ks, key=lambda k: len(mech.experience[i][mech.infosets[k].nodes[0]]))
    new_class = {}

    def chain_sig(k):
        v = mech.infosets[k].nodes[0]
        return tuple((new_class[kk], tuple(sorted(act)))
                     for kk, act in mech.experience[i][v])

    for k in by_depth:
        v = mech.infosets[k].nodes[0]
        past = {kk for kk, _ in mech.experience[i][v]}
        if k in merged_ids:
            new_class[k] = ("merged", min(merged_ids))
        elif past & merged_ids:
            new_class[k] = ("sig", chain_sig(k),
                            tuple(sorted(tuple(sorted(x)) for x in mech.infosets[k].actions)))
        else:
            new_class[k] = ("keep", k)

    unions = {}
    for k in ks:
        unions.setdefault(new_class[k], []).extend(mech.infosets[k].nodes)
    groups = [(s.agent, list(s.nodes)) for s in mech.infosets if s.agent != i]
    for _, members in sorted(unions.items(), key=lambda kv: min(kv[1])):
        groups.append((i, members))
    merged = build_mechanism(mech.model, _raw_nodes(mech), groups, mech.outcome)
    problems = validate(merged)
    if problems:
        raise MechanismError("merge: result is not a valid mechanism: " + problems[0])

    renum = merged.renumbering  # old node id -> new node id
    new_nodes1 = tuple(sorted(renum[v] for v in a.nodes))
    new_nodes2 = tuple(sorted(renum[v] for v in b.nodes))
    union_nodes = tuple(sorted(new_nodes1 + new_nodes2))
    target_k = next((k for k, s in enumerate(merged.infosets)
                     if s.agent == i and s.nodes == union_nodes), None)
    if target_k is None:
        raise MechanismError("merge: the united set did not survive canonicalization")
    forward = Illuminate(i, target_k, new_nodes1, new_nodes2)
    again = apply_illuminate(merged, forward)
    if not mechanisms_equal(again, mech):
        raise MechanismError("merge: illuminating the result does not reproduce the original")
    return merged, forward


@dataclass(frozen=True)
class Unsplit:
    """Inverse splitting: forget one final refinement.  Every member of the
    information set must be a last decision of the agent, taken alone, with
    only terminal children sharing one outcome."""
    agent: int
    infoset: int


@dataclass(frozen=True)
class Uncoalesce:
    """Inverse coalescing: defer part of a menu.  The listed actions at the
    information set are replaced by their union, refined at a new immediately
    following information set where the agent learns nothing new."""
    agent: int
    infoset: int
    actions: tuple


def unsplit_ready(mech, t):
    if t.infoset >= len(mech.infosets) or mech.infosets[t.infoset].agent != t.agent:
        return "unsplit: no such information set for that agent"
    iset = mech.infosets[t.infoset]
    for v in iset.nodes:
        for c in mech.children[v]:
            if len(mech.step[c]) != 1 or mech.step[c][0][0] != t.agent:
                return "unsplit: the agent does not refine alone there"
            if not mech.is_terminal(c):
                return "unsplit: refinement is not final"
        if len({mech.outcome[c] for c in mech.children[v]}) != 1:
            return "unsplit: outcomes differ across the refinement"
    return None


def unsplit_outcome_constant(mech, t, f):
    """Whether forgetting the refinement still implements f (f constant on
    each collapsed terminal's accrued information)."""
    iset = mech.infosets[t.infoset]
    for v in iset.nodes:
        want = mech.outcome[mech.children[v][0]]
        for profile in mech.theta_profiles(v):
            if f[profile] != want:
                return False
    return True


def apply_unsplit(mech, t):
    problem = unsplit_ready(mech, t)
    if problem:
        raise MechanismError(problem)
    iset = mech.infosets[t.infoset]
    members = set(iset.nodes)
    drop = {c for v in iset.nodes for c in mech.children[v]}
    keep = [v for v in range(mech.n_nodes()) if v not in drop]
    nodes = []
    remap = {}
    for v in keep:
        remap[v] = len(nodes)
        nodes.append((None if mech.parent[v] is None else remap[mech.parent[v]],
                      mech.step[v]))
    outcomes = {remap[v]: x for v, x in mech.outcome.items() if v in remap}
    for v in iset.nodes:
        outcomes[remap[v]] = mech.outcome[mech.children[v][0]]
    groups = []
    for k, s in enumerate(mech.infosets):
        if k == t.infoset:
            continue
        groups.append((s.agent, [remap[v] for v in s.nodes]))
    return build_mechanism(mech.model, nodes, groups, outcomes)


def apply_uncoalesce(mech, t):
    if t.infoset >= len(mech.infosets) or mech.infosets[t.infoset].agent != t.agent:
        raise MechanismError("uncoalesce: no such information set for that agent")
    iset = mech.infosets[t.infoset]
    chosen = tuple(t.actions)
    if len(chosen) < 2 or any(a not in iset.actions for a in chosen):
        raise MechanismError("uncoalesce: need two or more actions from the menu")
    i = t.agent
    union = frozenset().union(*chosen)
    chosen_set = set(chosen)
    members = set(iset.nodes)

    nodes = [(mech.parent[v], mech.step[v]) for v in range(mech.n_nodes())]
    outcomes = dict(mech.outcome)
    new_infoset = []
    for v in sorted(members):
        by_rest = {}
        for c in mech.children[v]:
            step_map = dict(mech.step[c])
            if step_map.get(i) in chosen_set:
                rest = tuple(sorted((a, x) for a, x in step_map.items() if a != i))
                by_rest.setdefault(rest, []).append(c)
        for rest, cs in sorted(by_rest.items()):
            mid_parts = dict(rest)
            mid_parts[i] = union
            mid_step = make_step(mid_parts)
            nodes.append((v, mid_step))
            mid = len(nodes) - 1
            new_infoset.append(mid)
            for c in cs:
                act = dict(mech.step[c])[i]
                nodes[c] = (mid, make_step({i: act}))
    groups = [(s.agent, list(s.nodes)) for s in mech.infosets]
    groups.append((i, new_infoset))
    return build_mechanism(mech.model, nodes, groups, outcomes)


def _binary_partitions(items):
    """All unordered two-way partitions, canonical order: the part holding
    the smallest element grows by subset rank."""
    items = sorted(items)
    head, rest = items[0], items[1:]
    for r in range(len(rest)):
        for combo in itertools.combinations(rest, r):
            part1 = tuple([head] + list(combo))
            part2 = tuple(x for x in rest if x not in combo)
            yield part1, part2


def iter_opportunities(mech, kind):
    """Lazily enumerate applicable transformations of one kind, canonical
    (agent, node id) order."""
    if kind == "split":
        for k, iset in enumerate(mech.infosets):
            for action in iset.actions:
                if len(action) < 2:
                    continue
                if not _split_terminals(mech, k, action):
                    continue
                for part1, part2 in _binary_partitions(sorted(action)):
                    yield Split(iset.agent, k, action,
                                frozenset(part1), frozenset(part2))
    elif kind == "coalesce":
        for k in range(len(mech.infosets)):
            pred, action = mech.infoset_predecessor(k)
            if pred is None:
                continue
            cand = Coalesce(mech.infosets[k].agent, pred, action, k)
            if coalesce_ready(mech, cand) is None:
                yield cand
    elif kind == "illuminate":
        for k, iset in enumerate(mech.infosets):
            if len(iset.nodes) < 2:
                continue
            for part1, part2 in _binary_partitions(iset.nodes):
                yield Illuminate(iset.agent, k, part1, part2)
    elif kind == "merge":
        for i in range(mech.model.n_agents):
            ks = mech.agent_infosets(i)
            for x in range(len(ks)):
                for y in range(x + 1, len(ks)):
                    ka, kb = ks[x], ks[y]
                    if mech.infosets[ka].actions != mech.infosets[kb].actions:
                        continue
                    if mech.theta_infoset(ka) != mech.theta_infoset(kb):
                        continue
                    cand = Merge(i, ka, kb)
                    try:
                        apply_merge(mech, cand)
                    except MechanismError:
                        continue
                    yield cand
    elif kind == "unsplit":
        for k, iset in enumerate(mech.infosets):
            cand = Unsplit(iset.agent, k)
            if unsplit_ready(mech, cand) is None:
                yield cand
    elif kind == "uncoalesce":
        for k, iset in enumerate(mech.infosets):
            if len(iset.actions) < 2:
                continue
            for r in range(2, len(iset.actions) + 1):
                for combo in itertools.combinations(iset.actions, r):
                    yield Uncoalesce(iset.agent, k, combo)
    else:
        raise ValueError(f"unknown transformation kind {kind!r}")


def find_opportunities(mech, kind):
    return list(iter_opportunities(mech, kind))


def apply_transformation(mech, t):
    if isinstance(t, Split):
        return apply_split(mech, t)
    if isinstance(t, Coalesce):
        return apply_coalesce(mech, t)
    if isinstance(t, Illuminate):
        return apply_illuminate(mech, t)
    if isinstance(t, Merge):
        return apply_merge(mech, t)[0]
    if isinstance(t, Unsplit):
        return apply_unsplit(mech, t)
    if isinstance(t, Uncoalesce):
        return apply_uncoalesce(mech, t)
    raise ValueError(f"not a transformation: {t!r}")


def is_incentive_preserving(mech, t, f, model=None):
    """Whether illuminating ``mech`` by ``t`` keeps every other agent's
    truthful comparison intact against the newly informed agent's
    conditioning power.

    Quantifies over ordered pairs of (type of the informed agent, acquired
    information tuple from each part), restricted to pairs reachable under
    one strategy profile of the remaining agents.
    """
    model = model or mech.model
    if t.infoset >= len(mech.infosets) or mech.infosets[t.infoset].agent != t.agent:
        raise MechanismError("illumination check: no such information set")
    iset = mech.infosets[t.infoset]
    p1, p2 = set(t.part1), set(t.part2)
    if not p1 or not p2 or (p1 & p2) or (p1 | p2) != set(iset.nodes):
        raise MechanismError("illumination parts must partition the information set")
    i = t.agent
    n = model.n_agents
    others = [j for j in range(n) if j != i]
    theta_i = sorted(mech.theta_infoset(t.infoset))

    def acquired(nodes):
        seen = set()
        for v in sorted(nodes):
            seen.update(itertools.product(*(sorted(mech.theta[v][j]) for j in others)))
        return sorted(seen)

    minus1 = acquired(p1)
    minus2 = acquired(p2)
    table = mech.truthful_table()

    def full(ti, rest):
        prof = list(rest)
        prof.insert(i, ti)
        return tuple(prof)

    # The informed agent's types range over ordered pairs, and the two parts
    # swap roles, which together cover every switched-superscript variant of
    # the required comparisons.
    for side_a, side_b in ((minus1, minus2), (minus2, minus1)):
        for ti1 in theta_i:
            for ti2 in theta_i:
                for rest1 in side_a:
                    prof1 = full(ti1, rest1)
                    z1 = table[prof1]
                    x1 = f[prof1]
                    for rest2 in side_b:
                        prof2 = full(ti2, rest2)
                        z2 = table[prof2]
                        outside = mech.conflict_agents(z1, z2) - {i}
                        if len(outside) > 1:
                            continue
                        x2 = f[prof2]
                        if x1 == x2:
                            continue
                        js = sorted(outside) if outside else others
                        for j in js:
                            if not model.weakly_prefers(j, prof1[j], x1, x2):
                                return Verdict(False, Witness(
                                    "ill", j, i, z1, z2, prof1, prof2, x1, x2,
                                    infosets=(t.infoset,),
                                    detail="illumination lets the informed agent harm this comparison"))
    return Verdict(True)


@dataclass(frozen=True)
class ChainStep:
    transform: object
    fingerprint: str
    preserving: bool | None = None   # merge steps: verdict for the forward illumination


@dataclass
class ReductionChain:
    source_fingerprint: str
    steps: list
    final: object

    def merges(self):
        return [s for s in self.steps if isinstance(s.transform, Merge)]

    def counts(self):
        out = {"split": 0, "coalesce": 0, "merge": 0}
        for s in self.steps:
            if isinstance(s.transform, Split):
                out["split"] += 1
            elif isinstance(s.transform, Coalesce):
                out["coalesce"] += 1
            elif isinstance(s.transform, Merge):
                out["merge"] += 1
        return out


def theorem1_verdict(chain):
    """All recorded illuminations along the chain were incentive-preserving;
    vacuously true for chains without merges."""
    merges = chain.merges()
    if any(s.preserving is None for s in merges):
        raise MechanismError("chain was reduced without preservation checks")
    return all(s.preserving for s in merges)


def reduce_to_direct(mech, f, model=None, check_preserving=True):
    """Transform a mechanism into the one-shot direct form of its SCF.

    Phase 1 splits until every terminal pins a single type profile; phase 2
    repeatedly applies the canonically first coalesce, falling back to the
    first merge, until the mechanism is static.  Each merge records the
    forward illumination and its incentive-preservation verdict evaluated on
    the post-merge mechanism.
    """
    model = model or mech.model
    problems = validate(mech)
    if problems:
        raise MechanismError("reduce: invalid input mechanism: " + problems[0])
    if not implements(mech, f):
        raise MechanismError("reduce: mechanism does not implement the given SCF")

    steps = []
    current = mech
    while True:
        t = next(iter_opportunities(current, "split"), None)
        if t is None:
            break
        current = apply_split(current, t)
        steps.append(ChainStep(t, current.fingerprint()))

    while not is_static(current):
        t = next(iter_opportunities(current, "coalesce"), None)
        if t is not None:
            current = apply_coalesce(current, t)
            steps.append(ChainStep(t, current.fingerprint()))
            continue
        t = next(iter_opportunities(current, "merge"), None)
        if t is None:
            raise MechanismError(
                "reduce: non-static mechanism with no coalesce or merge opportunity")
        merged, forward = apply_merge(current, t)
        preserving = None
        if check_preserving:
            preserving = bool(is_incentive_preserving(merged, forward, f, model))
        current = merged
        steps.append(ChainStep(t, current.fingerprint(), preserving=preserving))

    final_problems = validate(current)
    if final_problems:
        raise MechanismError("reduce: final mechanism invalid: " + final_problems[0])
    return ReductionChain(mech.fingerprint(), steps, current)
