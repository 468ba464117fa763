"""Text, DOT, and JSON rendering of solution profiles.

Bracket notation: per-player action lists, then the partition, e.g.
``[{R},{a,d},{e,g,j,l}; {1,3},2]``. Partition blocks are listed in the order
their members first act in the subgame; singleton blocks are bare,
coalitions braced.

Three bracket conventions coexist:

* an entry adopted from the index point lists the full profile over its
  subgame (every information set pinned);
* an entry adopted from a coalition's supergame lists only the coalition's
  coordinated path — off-path play inside an adopted supergame is shown by
  the nested per-subgame entries instead;
* the root summary composes the adopted path with every player's individual
  best response at off-path nodes, the "on-path solution" view of the game.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .model import block_containing, expected_individual_value
from .ri import Entry, SolutionProfile


def fmt_value(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else str(v)


def outcome_str(vec) -> str:
    return "(" + ", ".join(fmt_value(v) for v in vec) + ")"


def block_str(block, braced_singletons=False) -> str:
    inner = ",".join(str(i) for i in sorted(block))
    if len(block) == 1 and not braced_singletons:
        return inner
    return "{" + inner + "}"


def _action_str(act) -> str:
    if isinstance(act, tuple):
        parts = ",".join(f"{label}={fmt_value(p)}" for label, p in act if p)
        return f"mix({parts})"
    return act


def _acting_blocks(tree, entry):
    """Partition blocks in the order their members first act in the subgame."""
    order = []
    for nid in sorted(tree.subtree_nodes(entry.node),
                      key=tree._pre_index.__getitem__):
        node = tree.nodes[nid]
        if node.is_terminal or node.player is None:
            continue
        block = block_containing(entry.partition, node.player)
        if block not in order:
            order.append(block)
    return order


def _grouped_actions(tree, pairs):
    """Group (info set, action) pairs by owner, players in id order."""
    per_player: dict = {}
    for sid, act in pairs:
        per_player.setdefault(tree.info_set_player(sid), []).append((sid, act))
    groups = []
    for player in sorted(per_player):
        sets = sorted(per_player[player],
                      key=lambda item: tree._pre_index[tree.info_sets[item[0]][0]])
        groups.append("{" + ",".join(_action_str(a) for _, a in sets) + "}")
    return groups


def _on_path_pairs(tree, entry):
    pairs, seen = [], set()
    stack = [entry.node]
    while stack:
        nid = stack.pop()
        node = tree.nodes[nid]
        if node.is_terminal:
            continue
        if node.player is None:
            stack.extend(c for _, c in node.actions
                         if tree.chance_at_root.get(c))
            continue
        sid = tree.info_set_of(nid)
        act = entry.actions[sid]
        if sid not in seen:
            seen.add(sid)
            pairs.append((sid, act))
        if isinstance(act, tuple):
            stack.extend(node.child(label) for label, p in act if p)
        else:
            stack.append(node.child(act))
    return pairs


def bracket_entry(tree, entry: Entry) -> str:
    """Bracket line for one solved subgame entry."""
    if entry.coalition is not None:
        pairs = _on_path_pairs(tree, entry)
    else:
        inside = {sid for sid in entry.actions
                  if tree.info_sets[sid][0] in tree.subtree_nodes(entry.node)}
        pairs = [(sid, entry.actions[sid]) for sid in inside]
    groups = _grouped_actions(tree, pairs)
    blocks = ",".join(block_str(b) for b in _acting_blocks(tree, entry))
    return "[" + ",".join(groups) + "; " + blocks + "]"


def _family_map(profile: SolutionProfile) -> dict:
    out = {}

    def walk(entry):
        out[entry.node] = entry
        for child in entry.children.values():
            walk(child)

    walk(profile.root_entry)
    return out


def bracket_summary(profile: SolutionProfile) -> str:
    """The root summary: adopted path plus individual off-path responses."""
    tree = profile.tree
    top = profile.root_entry
    family = _family_map(profile)
    on_path = set(profile.on_path_nodes())
    pairs, seen = [], set()
    for nid in tree.preorder:
        node = tree.nodes[nid]
        if node.is_terminal or node.player is None:
            continue
        sid = tree.info_set_of(nid)
        if sid in seen:
            continue
        seen.add(sid)
        if nid in on_path or len(tree.info_sets[sid]) > 1:
            pairs.append((sid, top.actions[sid]))
            continue
        best_label, best_value = None, None
        resolvable = all(c in family for _, c in node.actions)
        if not resolvable:
            pairs.append((sid, top.actions[sid]))
            continue
        for label, child in node.actions:
            kid = family[child]
            value = expected_individual_value(
                node.player, kid.dist, kid.partition, profile.utils, tree)
            if best_value is None or value > best_value:
                best_label, best_value = label, value
        pairs.append((sid, best_label))
    groups = _grouped_actions(tree, pairs)
    blocks = ",".join(block_str(b) for b in _acting_blocks(tree, top))
    return "[" + ",".join(groups) + "; " + blocks + "]"


def partition_str(partition) -> str:
    return ",".join(block_str(b) for b in partition)


# -- solve narrative -----------------------------------------------------------


def _unit_name(tree, view, set_id) -> str:
    block = block_containing(view, tree.info_set_player(set_id))
    if len(block) == 1:
        return tree.player_name(block[0])
    return block_str(block)


def _step_line(tree, step) -> str:
    where = f"[{step.node}]"
    if step.kind == "index-point":
        return f"{where} index point -> {outcome_str(step.outcome)}"
    coal = block_str(step.coalition) if step.coalition else "index point"
    if step.kind == "supergame-solved":
        active = _unit_name(tree, step.view, step.node)
        note = ""
        if step.reason.startswith("idle:"):
            idle = step.reason.split(":", 1)[1]
            note = f" (no moves: {idle})"
        return (f"{where} supergame {coal} -> {outcome_str(step.outcome)}, "
                f"value {fmt_value(step.active_value)} for {active}{note}")
    if step.kind == "ir-accepted":
        gains = ", ".join(
            f"{tree.player_name(i)} {fmt_value(cand)} > {fmt_value(held)}"
            for i, cand, held in step.comparisons)
        return f"{where} ir-accepted {coal} -> {outcome_str(step.outcome)}: {gains}"
    if step.kind == "ir-rejected":
        blocker = int(step.reason.split(":", 1)[1])
        cand, held = next((c, h) for i, c, h in step.comparisons if i == blocker)
        return (f"{where} ir-rejected {coal} -> {outcome_str(step.outcome)}: "
                f"blocked by {tree.player_name(blocker)} "
                f"({fmt_value(cand)} <= {fmt_value(held)})")
    return f"{where} adopted {coal} -> {outcome_str(step.outcome)}"


def render_trace(profile: SolutionProfile, verbosity: str = "summary") -> str:
    """The solve narrative: index points, supergame values, IR chain, adoption.

    `summary` shows the base-game recursion; `full` also shows every step
    taken inside the supergame recursions, tagged with their view.
    """
    tree = profile.tree
    lines = []
    base = tuple((i,) for i in range(1, tree.n_players + 1))
    for step in profile.audit:
        if step.view == base:
            lines.append(_step_line(tree, step))
        elif verbosity == "full":
            lines.append(f"  (view {partition_str(step.view)}) "
                         + _step_line(tree, step))
    return "\n".join(lines)


# -- complete solution (nested per-subgame listing) -----------------------------


def _render_family(tree, entry: Entry, indent: int, lines, top_line=None):
    pad = "  " * indent
    line = top_line if top_line is not None else bracket_entry(tree, entry)
    lines.append(f"{pad}{entry.node}: {line} -> {outcome_str(entry.outcome)}")
    for child in sorted(entry.children.values(),
                        key=lambda e: tree._pre_index[e.node]):
        if not tree.nodes[child.node].is_terminal:
            _render_family(tree, child, indent + 1, lines)


def render_solution(profile: SolutionProfile) -> str:
    """Nested complete solution: the root context, then each subgame standalone."""
    tree = profile.tree
    lines: list[str] = []
    lines.append(f"=== solution at {profile.root_entry.node} (root) ===")
    _render_family(tree, profile.root_entry, 0, lines,
                   top_line=bracket_summary(profile))
    standalone = sorted(
        (nid for nid in tree.subgame_roots
         if nid in tree.decision_ids and nid != profile.root_entry.node),
        key=lambda nid: (tree.depth_of(nid), tree._pre_index[nid]))
    for nid in standalone:
        lines.append(f"=== standalone solution at {nid} ===")
        _render_family(tree, profile.standalone_entry(nid), 0, lines)
    return "\n".join(lines)


# -- DOT export -----------------------------------------------------------------


def export_dot(tree, profile: SolutionProfile | None = None) -> str:
    """Graphviz text of the tree, styled by the solution when given.

    Chosen edges are dashed for an independently acting player and bold for
    a coalition; decision nodes are annotated with the acting unit.
    """
    family = _family_map(profile) if profile is not None else {}
    lines = ["digraph game {", '  node [fontname="Helvetica"];']
    for nid in tree.preorder:
        node = tree.nodes[nid]
        if node.is_terminal:
            lines.append(f'  "{nid}" [shape=box, label="{outcome_str(node.payoffs)}"];')
            continue
        if node.player is None:
            lines.append(f'  "{nid}" [shape=diamond, label="chance"];')
            continue
        entry = family.get(nid)
        if entry is not None:
            block = block_containing(entry.partition, node.player)
            unit = ",".join(str(i) for i in block)
        else:
            unit = str(node.player)
        lines.append(f'  "{nid}" [shape=circle, label="{unit}"];')
    for nid in tree.preorder:
        node = tree.nodes[nid]
        if node.is_terminal:
            continue
        if node.player is None:
            for label, child in node.actions:
                p = tree.chance_at_root[child]
                lines.append(f'  "{nid}" -> "{child}" '
                             f'[label="{label} ({fmt_value(p)})"];')
            continue
        entry = family.get(nid)
        chosen: dict = {}
        style = "dashed"
        if entry is not None:
            block = block_containing(entry.partition, node.player)
            style = "bold" if len(block) > 1 else "dashed"
            act = entry.actions[tree.info_set_of(nid)]
            if isinstance(act, tuple):
                chosen = {label: p for label, p in act if p}
            else:
                chosen = {act: None}
        for label, child in node.actions:
            if label in chosen:
                prob = chosen[label]
                text = label if prob is None else f"{label} ({fmt_value(prob)})"
                lines.append(f'  "{nid}" -> "{child}" '
                             f'[label="{text}", style={style}];')
            else:
                attrs = ', color=gray' if entry is not None else ""
                lines.append(f'  "{nid}" -> "{child}" [label="{label}"{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- JSON -----------------------------------------------------------------------


def _num_json(v):
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else str(v)


def _actions_json(actions):
    out = {}
    for sid, act in actions.items():
        if isinstance(act, tuple):
            out[sid] = {label: _num_json(p) for label, p in act}
        else:
            out[sid] = act
    return out


def _entry_json(entry: Entry):
    return {
        "outcome": [_num_json(v) for v in entry.outcome],
        "partition": [list(b) for b in entry.partition],
        "coalition": list(entry.coalition) if entry.coalition else None,
        "actions": _actions_json(entry.actions),
        "terminals": {z: _num_json(p) for z, p in entry.dist},
    }


def profile_to_json(profile: SolutionProfile) -> str:
    """Deterministic JSON of the whole solution profile.

    The entry map is keyed "context/subgame" so downstream tools can see
    that a nested solution need not restrict the enclosing one. Numbers are
    ints when integral, exact fraction strings otherwise.
    """
    body = {
        "outcome": [_num_json(v) for v in profile.outcome],
        "partition": [list(b) for b in profile.partition],
        "coalition": list(profile.coalition) if profile.coalition else None,
        "summary": bracket_summary(profile),
        "entries": {f"{ctx}/{g}": _entry_json(entry)
                    for (ctx, g), entry in profile.entries().items()},
        "trace": [
            {
                "node": s.node,
                "kind": s.kind,
                "coalition": list(s.coalition) if s.coalition else None,
                "outcome": [_num_json(v) for v in s.outcome],
                "reason": s.reason,
                "comparisons": [[i, _num_json(c), _num_json(h)]
                                for i, c, h in s.comparisons],
            }
            for s in profile.trace_steps()
        ],
    }
    return json.dumps(body, sort_keys=True, indent=2) + "\n"
