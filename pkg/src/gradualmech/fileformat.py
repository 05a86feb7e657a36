"""Versioned textual description of mechanisms (JSON-shaped).

A document carries the agents, their type names, the outcome names, one weak
order per type, the SCF as an explicit profile table, the history tree as
nested nodes whose steps name type subsets per agent, and the information
sets as node-id lists.  Parsing and serialization round-trip up to node
renumbering.
"""

from __future__ import annotations

import json

from .gameform import MechanismError, build_mechanism, validate
from .prefs import ScfTable, TypeModel, WeakOrder

FORMAT = "gm/1"


class ParseError(Exception):
    """A positioned diagnostic for a malformed mechanism description."""


def _fail(msg):
    raise ParseError(msg)


def serialize_mechanism(mech, f=None):
    """Render a mechanism (and optionally its SCF) as a format document."""
    model = mech.model
    names = model.agent_names

    def action_names(agent, action):
        return [model.type_names[agent][t] for t in sorted(action)]

    def node_doc(v):
        doc = {"id": v}
        if mech.is_terminal(v):
            doc["outcome"] = model.outcome_names[mech.outcome[v]]
        else:
            doc["children"] = [
                {"step": {names[a]: action_names(a, act) for a, act in mech.step[c]},
                 "node": node_doc(c)}
                for c in mech.children[v]
            ]
        return doc

    prefs = [
        [[[model.outcome_names[x] for x in sorted(level)] for level in order.levels]
         for order in model.prefs[i]]
        for i in range(model.n_agents)
    ]
    doc = {
        "format": FORMAT,
        "agents": list(names),
        "types": [list(t) for t in model.type_names],
        "outcomes": list(model.outcome_names),
        "preferences": prefs,
        "tree": node_doc(0),
        "infosets": [{"agent": names[s.agent], "nodes": list(s.nodes)}
                     for s in mech.infosets],
    }
    if f is not None:
        doc["scf"] = [
            [[model.type_names[i][profile[i]] for i in range(model.n_agents)],
             model.outcome_names[x]]
            for profile, x in sorted(f.items())
        ]
    return json.dumps(doc, indent=1)


def parse_model(doc):
    agents = doc.get("agents") or _fail("missing 'agents'")
    types = doc.get("types") or _fail("missing 'types'")
    outcomes = doc.get("outcomes") or _fail("missing 'outcomes'")
    prefs_doc = doc.get("preferences") or _fail("missing 'preferences'")
    if len(types) != len(agents) or len(prefs_doc) != len(agents):
        _fail("'types' and 'preferences' must list one entry per agent")
    out_index = {name: k for k, name in enumerate(outcomes)}
    prefs = []
    for i, per_type in enumerate(prefs_doc):
        if len(per_type) != len(types[i]):
            _fail(f"agent {agents[i]}: one weak order per type required")
        orders = []
        for t, levels in enumerate(per_type):
            try:
                orders.append(WeakOrder(
                    [{out_index[name] for name in level} for level in levels]))
            except KeyError as e:
                _fail(f"agent {agents[i]} type {types[i][t]}: unknown outcome {e}")
            except ValueError as e:
                _fail(f"agent {agents[i]} type {types[i][t]}: {e}")
        prefs.append(orders)
    try:
        return TypeModel(types, outcomes, prefs, agent_names=agents)
    except ValueError as e:
        _fail(str(e))


def parse_scf(doc, model):
    rows = doc.get("scf")
    if rows is None:
        return None
    type_index = [
        {name: k for k, name in enumerate(model.type_names[i])}
        for i in range(model.n_agents)
    ]
    out_index = {name: k for k, name in enumerate(model.outcome_names)}
    table = {}
    for row in rows:
        if len(row) != 2:
            _fail(f"scf row {row!r}: want [profile, outcome]")
        profile_names, out_name = row
        if len(profile_names) != model.n_agents:
            _fail(f"scf profile {profile_names!r}: one type per agent required")
        try:
            profile = tuple(type_index[i][profile_names[i]]
                            for i in range(model.n_agents))
            table[profile] = out_index[out_name]
        except KeyError as e:
            _fail(f"scf row {row!r}: unknown name {e}")
    try:
        return ScfTable(model, table)
    except ValueError as e:
        _fail(str(e))


def parse_mechanism(text):
    """Parse a document into (mechanism, model, scf-or-None).

    Syntax problems raise ParseError with position information; semantic
    violations of the mechanism rules are raised as ParseError quoting the
    first entries of the validation report.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    if doc.get("format") != FORMAT:
        _fail(f"unsupported format {doc.get('format')!r}, want {FORMAT!r}")
    model = parse_model(doc)
    f = parse_scf(doc, model)

    agent_index = {name: i for i, name in enumerate(model.agent_names)}
    type_index = [
        {name: k for k, name in enumerate(model.type_names[i])}
        for i in range(model.n_agents)
    ]
    out_index = {name: k for k, name in enumerate(model.outcome_names)}

    nodes = {}
    outcomes = {}

    def walk(node_doc, parent, step):
        if "id" not in node_doc:
            _fail("tree node without 'id'")
        nid = node_doc["id"]
        if nid in nodes:
            _fail(f"duplicate node id {nid}")
        nodes[nid] = (parent, step)
        if "outcome" in node_doc:
            name = node_doc["outcome"]
            if name not in out_index:
                _fail(f"node {nid}: unknown outcome {name!r}")
            outcomes[nid] = out_index[name]
        for edge in node_doc.get("children", ()):
            step_doc = edge.get("step") or _fail(f"node {nid}: child without 'step'")
            parts = {}
            for agent_name, type_names in step_doc.items():
                if agent_name not in agent_index:
                    _fail(f"node {nid}: unknown agent {agent_name!r}")
                a = agent_index[agent_name]
                try:
                    parts[a] = frozenset(type_index[a][t] for t in type_names)
                except KeyError as e:
                    _fail(f"node {nid}: unknown type {e} for agent {agent_name}")
            child = edge.get("node") or _fail(f"node {nid}: child without 'node'")
            walk(child, nid, tuple(sorted(parts.items())))

    tree = doc.get("tree") or _fail("missing 'tree'")
    walk(tree, None, None)

    ids = sorted(nodes)
    remap = {nid: k for k, nid in enumerate(ids)}
    raw = [None] * len(ids)
    for nid, (parent, step) in nodes.items():
        raw[remap[nid]] = (remap[parent] if parent is not None else None, step)
    out2 = {remap[nid]: x for nid, x in outcomes.items()}

    groups = []
    for entry in doc.get("infosets", ()):
        agent_name = entry.get("agent")
        if agent_name not in agent_index:
            _fail(f"information set for unknown agent {agent_name!r}")
        members = []
        for nid in entry.get("nodes", ()):
            if nid not in remap:
                _fail(f"information set references unknown node {nid}")
            members.append(remap[nid])
        groups.append((agent_index[agent_name], members))

    try:
        mech = build_mechanism(model, raw, groups, out2)
    except MechanismError as e:
        raise ParseError(str(e)) from None
    return mech, model, f


def load_mechanism(text, require_scf=False, require_valid=True):
    """Parse and validate; used by the command-line front end."""
    mech, model, f = parse_mechanism(text)
    if require_valid:
        problems = validate(mech)
        if problems:
            raise ParseError("invalid mechanism: " + "; ".join(problems))
    if require_scf and f is None:
        raise ParseError("document carries no 'scf' table")
    return mech, model, f
