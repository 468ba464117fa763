"""Recursive backward induction over coalitional extensive-form games.

The solver works bottom-up over subgames. At each subgame root it first
computes the index reference point (the active player best-responding
independently to the adopted successor solutions), then solves one supergame
per feasible coalition containing the active player — the same game with
those players merged into a single one — and walks the resulting reference
points in nondecreasing order of the active player's value. A reference
point is accepted only if every member of the adopting block strictly
improves on the previously accepted point; the last accepted point becomes
the subgame's solution.

Supergames are solved by the same recursion with one fewer effective player,
so the recursion is well-founded on (number of effective players, number of
nodes). Solutions are memoized by (subgame root, view partition); the memo
doubles as the store of standalone per-subgame solutions that the trace
renders.

Imperfect information is handled at the subgame scale: a layer containing
non-singleton information sets is solved as a reduced normal-form game
(pure equilibria first, then two-player support enumeration), information
sets with no decision nodes below them adopt that equilibrium as is, and
every other information set runs the reference-point machinery against
supertrees, i.e. merged views of the same smallest subgame.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import CefgError, ImperfectInformation
from .model import (
    GameTree,
    UtilitySystem,
    block_containing,
    canon_block,
    coalition_sort_key,
    dist_payoffs,
    expected_coalition_value,
    expected_individual_value,
    make_dist,
    merge_into,
    singleton_partition,
)
from .noncoop import LayerGame, LocalSolution, choice_key


@dataclass(frozen=True)
class SolveStep:
    """One event in the solution narrative at a node (or information set)."""

    node: str
    kind: str  # index-point | supergame-solved | ir-accepted | ir-rejected | adopted
    coalition: tuple | None
    outcome: tuple
    reason: str
    view: tuple
    active_value: Fraction | None = None
    comparisons: tuple = ()  # ((agent, candidate value, incumbent value), ...)


@dataclass(frozen=True)
class Entry:
    """Adopted solution of one subgame under one view.

    `children` holds the nested per-subgame entries this solution extends;
    after a coalition is adopted they come from the supergame's own
    recursion, which is why an inner entry need not be the restriction of
    the outer profile.
    """

    node: str
    view: tuple
    actions: dict
    dist: tuple
    outcome: tuple
    partition: tuple
    coalition: tuple | None
    children: dict
    steps: tuple

    def solution(self) -> LocalSolution:
        return LocalSolution(dict(self.actions), self.dist, self.outcome,
                             self.partition)


@dataclass(frozen=True)
class ReferencePoint:
    """A candidate solution in the sequence at one node."""

    coalition: tuple | None  # None marks the index point
    entry: Entry
    active_value: Fraction
    index: int

    @property
    def solution(self) -> LocalSolution:
        return self.entry.solution()


class SolutionProfile:
    """The family of per-(context, subgame) solutions plus the solve trace."""

    def __init__(self, tree: GameTree, utils: UtilitySystem, root_entry: Entry,
                 memo: dict, audit, singletons_only: bool = False):
        self.tree = tree
        self.utils = utils
        self.root_entry = root_entry
        self._memo = dict(memo)
        self.audit = tuple(audit)
        self.singletons_only = singletons_only
        self._base = singleton_partition(tree.n_players)

    @property
    def outcome(self) -> tuple:
        return self.root_entry.outcome

    @property
    def partition(self) -> tuple:
        return self.root_entry.partition

    @property
    def coalition(self) -> tuple | None:
        return self.root_entry.coalition

    def trace_steps(self) -> tuple:
        """Steps of the base-view recursion, in emission order."""
        return tuple(s for s in self.audit if s.view == self._base)

    def standalone_entry(self, node: str) -> Entry:
        """The solution of the subgame at `node` solved on its own."""
        return self._memo[(node, self._base)]

    def context_entry(self, node: str) -> Entry:
        """The solution at `node`'s subgame inside the adopted root context."""
        entry = self.root_entry
        while entry.node != node:
            step = next((c for c in entry.children.values()
                         if node in self.tree.subtree_nodes(c.node)), None)
            if step is None:
                raise KeyError(f"{node} has no entry under the root context")
            entry = step
        return entry

    def entries(self) -> dict:
        """Flat (context root, subgame root) -> Entry map over all contexts."""
        out = {}

        def walk(ctx, entry):
            out[(ctx, entry.node)] = entry
            for child in entry.children.values():
                walk(ctx, child)

        walk(self.root_entry.node, self.root_entry)
        for (node, view), entry in self._memo.items():
            if view == self._base and (node, node) not in out:
                walk(node, entry)
        return out

    def on_path_nodes(self) -> tuple:
        """Nodes reached with positive probability under the root profile."""
        return _reach_nodes(self.tree, self.root_entry)


def _reach_nodes(tree: GameTree, entry: Entry) -> tuple:
    reached = []
    stack = [entry.node]
    while stack:
        nid = stack.pop()
        reached.append(nid)
        node = tree.nodes[nid]
        if node.is_terminal:
            continue
        if node.player is None:  # chance root: every positive branch
            stack.extend(c for _, c in node.actions
                         if tree.chance_at_root.get(c))
            continue
        act = entry.actions[tree.info_set_of(nid)]
        if isinstance(act, tuple):
            stack.extend(node.child(lab) for lab, p in act if p)
        else:
            stack.append(node.child(act))
    return tuple(sorted(reached, key=tree._pre_index.__getitem__))


class _Solver:
    def __init__(self, tree: GameTree, utils: UtilitySystem, use_memo=True):
        self.tree = tree
        self.utils = utils
        self.use_memo = use_memo
        self.memo: dict = {}
        self.audit: list[SolveStep] = []

    # -- public driver -------------------------------------------------------

    def run(self) -> Entry:
        base = singleton_partition(self.tree.n_players)
        if self.tree.chance_at_root:
            root = self.tree.nodes[self.tree.root]
            branches = [(self.tree.chance_at_root[c], self.solve(c, base))
                        for _, c in root.actions]
            entry = _combine_branches(self.tree, self.tree.root, base, branches)
            self.memo[(self.tree.root, base)] = entry
            return entry
        return self.solve(self.tree.root, base)

    def solve(self, g: str, view: tuple) -> Entry:
        key = (g, view)
        if self.use_memo and key in self.memo:
            return self.memo[key]
        entry = self._solve(g, view)
        self.memo[key] = entry
        return entry

    # -- recursion -----------------------------------------------------------

    def _solve(self, g: str, view: tuple) -> Entry:
        node = self.tree.nodes[g]
        if node.is_terminal:
            dist = ((g, Fraction(1)),)
            return Entry(g, view, {}, dist, dist_payoffs(dist, self.tree),
                         view, None, {}, ())
        kids = {y: self.solve(y, view) for y in self.tree.frontier_of(g)}
        layer = self.tree.layer_info_sets(g)
        if layer == (self.tree.info_set_of(g),) and \
                self.tree.info_sets[layer[0]] == (g,):
            return self._solve_node(g, view, kids)
        return self._solve_layer(g, view, kids, layer)

    def _solve_node(self, g: str, view: tuple, kids: dict) -> Entry:
        """Perfect-information step: one singleton information set at `g`."""
        node = self.tree.nodes[g]
        block = block_containing(view, node.player)
        best_label, best_key = None, None
        for label, child in node.actions:
            key = choice_key(self.tree, self.utils, view, block,
                             kids[child].dist)
            if best_key is None or key > best_key:
                best_label, best_key = label, key
        actions = {self.tree.info_set_of(g): best_label}
        for kid in kids.values():
            actions.update(kid.actions)
        dist = kids[node.child(best_label)].dist
        r0 = Entry(g, view, actions, dist, dist_payoffs(dist, self.tree),
                   view, None, dict(kids), ())
        return self._adopt(g, view, block, r0)

    def _solve_layer(self, g: str, view: tuple, kids: dict, layer) -> Entry:
        """Imperfect-information step over the layer of subgame `g`."""
        continuation = {y: kid.dist for y, kid in kids.items()}
        game = LayerGame(self.tree, self.utils, view, g, continuation)
        assignment, dist = game.solve()
        actions = dict(assignment)
        for kid in kids.values():
            actions.update(kid.actions)
        nu = Entry(g, view, actions, dist, dist_payoffs(dist, self.tree),
                   view, None, dict(kids), ())

        adopted: dict = {}
        entry = nu
        for sid in _layer_bottom_up(self.tree, layer):
            if not self._has_decisions_below(sid):
                adopted[sid] = nu  # terminal layer: equilibrium play as is
                continue
            r0 = self._layer_index_point(g, view, kids, layer, sid, nu, adopted)
            block = block_containing(view, self.tree.info_set_player(sid))
            entry = self._adopt(g, view, block, r0, step_node=sid)
            adopted[sid] = entry
        return entry

    def _has_decisions_below(self, sid: str) -> bool:
        for member in self.tree.info_sets[sid]:
            for below in self.tree.subtree_nodes(member):
                if below != member and not self.tree.nodes[below].is_terminal:
                    return True
        return False

    def _layer_index_point(self, g, view, kids, layer, sid, nu, adopted):
        """SPNE extension of the adopted successor solutions at `sid`."""
        succ = [other for other in layer if other != sid
                and _set_below(self.tree, other, sid)]
        if all(adopted.get(other, nu) is nu for other in succ):
            return nu
        fixed = {other: adopted[other].actions[other] for other in succ
                 if adopted.get(other, nu) is not nu}
        free = [other for other in layer if other not in fixed]
        continuation = {y: kid.dist for y, kid in kids.items()}
        game = _FixedLayerGame(self.tree, self.utils, view, g, continuation,
                               fixed, free)
        assignment, dist = game.solve()
        actions = dict(nu.actions)
        actions.update(fixed)
        actions.update(assignment)
        return Entry(g, view, actions, dist, dist_payoffs(dist, self.tree),
                     view, None, dict(kids), ())

    # -- reference points and the IR chain ------------------------------------

    def _candidates(self, g: str, view: tuple, block: tuple):
        others = [b for b in view if b != block]
        unions = set()
        for size in range(1, len(others) + 1):
            for combo in combinations(others, size):
                members = set(block)
                for b in combo:
                    members.update(b)
                if self.utils.is_feasible(members):
                    unions.add(canon_block(members))
        out = []
        for union in sorted(unions, key=coalition_sort_key):
            merged = merge_into(view, union)
            assert len(merged) < len(view)  # recursion strictly shrinks
            entry = self.solve(g, merged)
            value = self._active_value(block, entry)
            out.append((value, union, entry))
        out.sort(key=lambda item: (item[0], len(item[1]), item[1]))
        return out

    def _active_value(self, block: tuple, entry: Entry) -> Fraction:
        if len(block) == 1:
            return expected_individual_value(
                block[0], entry.dist, entry.partition, self.utils, self.tree)
        return expected_coalition_value(block, entry.dist, self.utils, self.tree)

    def _adopt(self, g: str, view: tuple, block: tuple, r0: Entry,
               step_node: str | None = None) -> Entry:
        """Run the reference-point sequence and IR chain at one node."""
        at = step_node or g
        steps = []
        r0_value = self._active_value(block, r0)
        steps.append(SolveStep(at, "index-point", None, r0.outcome,
                               "best-response", view, active_value=r0_value))
        accepted, accepted_value, accepted_coalition = r0, r0_value, None
        for value, union, entry in self._candidates(g, view, block):
            idle = [i for i in union if not self._moves_in(i, g)]
            note = "idle:" + ",".join(map(str, idle)) if idle else ""
            steps.append(SolveStep(at, "supergame-solved", union, entry.outcome,
                                   note, view, active_value=value))
            adopting = block_containing(entry.partition, union[0])
            comparisons, failing = [], None
            for agent in adopting:
                cand = expected_individual_value(
                    agent, entry.dist, entry.partition, self.utils, self.tree)
                held = expected_individual_value(
                    agent, accepted.dist, accepted.partition, self.utils, self.tree)
                comparisons.append((agent, cand, held))
                if failing is None and not cand > held:
                    failing = agent
            if failing is None:
                steps.append(SolveStep(at, "ir-accepted", union, entry.outcome,
                                       "strict-improvement", view,
                                       active_value=value,
                                       comparisons=tuple(comparisons)))
                accepted, accepted_value, accepted_coalition = entry, value, union
            else:
                steps.append(SolveStep(at, "ir-rejected", union, entry.outcome,
                                       f"blocked-by:{failing}", view,
                                       active_value=value,
                                       comparisons=tuple(comparisons)))
        steps.append(SolveStep(at, "adopted", accepted_coalition,
                               accepted.outcome,
                               "greatest-ir" if accepted_coalition else "index",
                               view, active_value=accepted_value))
        self.audit.extend(steps)
        return Entry(g, view, accepted.actions, accepted.dist, accepted.outcome,
                     accepted.partition, accepted_coalition, accepted.children,
                     tuple(steps))

    def _moves_in(self, player: int, g: str) -> bool:
        for nid in self.tree.subtree_nodes(g):
            node = self.tree.nodes[nid]
            if not node.is_terminal and node.player == player:
                return True
        return False


class _FixedLayerGame(LayerGame):
    """Layer game with some information sets pinned to given actions."""

    def __init__(self, tree, utils, partition, g, continuation, fixed, free):
        self._fixed = dict(fixed)
        self._free = tuple(free)
        super().__init__(tree, utils, partition, g, continuation)
        self.info_sets = self._free
        owners = {s: block_containing(partition, tree.info_set_player(s))
                  for s in self._free}
        self.players = sorted({b for b in owners.values()}, key=lambda b: b[0])
        self.sets_of = {b: tuple(s for s in self._free if owners[s] == b)
                        for b in self.players}
        from itertools import product as _product
        self.strategies = {}
        for b in self.players:
            ranges = [tree.nodes[tree.info_sets[s][0]].action_labels()
                      for s in self.sets_of[b]]
            self.strategies[b] = [dict(zip(self.sets_of[b], combo))
                                  for combo in _product(*ranges)]

    def playout(self, assignment):
        merged = dict(self._fixed)
        merged.update(assignment)
        return _playout_mixed(self.tree, self.g, self.continuation, merged)


def _playout_mixed(tree, g, continuation, assignment):
    acc: list = []

    def rec(nid, prob):
        node = tree.nodes[nid]
        if node.is_terminal:
            acc.append((nid, prob))
            return
        if nid != g and nid in continuation:
            acc.extend((z, prob * q) for z, q in continuation[nid])
            return
        act = assignment[tree.info_set_of(nid)]
        if isinstance(act, tuple):
            for label, p in act:
                if p:
                    rec(node.child(label), prob * p)
        else:
            rec(node.child(act), prob)

    rec(g, Fraction(1))
    return make_dist(acc)


def _set_below(tree, sid_a, sid_b) -> bool:
    """True when info set a lies (weakly) below some node of info set b."""
    above = set()
    for m in tree.info_sets[sid_b]:
        above |= tree.subtree_nodes(m) - {m}
    return any(m in above for m in tree.info_sets[sid_a])


def _layer_bottom_up(tree, layer):
    remaining = list(layer)
    done: list = []
    while remaining:
        ready = [s for s in remaining
                 if not any(_set_below(tree, other, s)
                            for other in remaining if other != s)]
        if not ready:
            raise CefgError("information-set order has a cycle")
        ready.sort(key=lambda s: (-tree.depth_of(tree.info_sets[s][0]),
                                  tree._pre_index[tree.info_sets[s][0]]))
        first = ready[0]
        remaining.remove(first)
        done.append(first)
    return done


def _combine_branches(tree, root, view, branches) -> Entry:
    if len(branches) == 1:
        return branches[0][1]
    actions: dict = {}
    pairs = []
    children = {}
    for p, entry in branches:
        actions.update(entry.actions)
        pairs.extend((z, p * q) for z, q in entry.dist)
        children[entry.node] = entry
    dist = make_dist(pairs)
    return Entry(root, view, actions, dist, dist_payoffs(dist, tree),
                 view, None, children, ())


# -- public API ----------------------------------------------------------------


def solve_ri(tree: GameTree, utils: UtilitySystem, *, singletons_only=False,
             use_memo=True) -> SolutionProfile:
    """RI solution of a perfect-information game (chance allowed at the root)."""
    if not tree.is_perfect_information:
        raise ImperfectInformation("use solve_ri_imperfect for non-singleton info sets")
    return solve_ri_imperfect(tree, utils, singletons_only=singletons_only,
                              use_memo=use_memo)


def solve_ri_imperfect(tree: GameTree, utils: UtilitySystem, *,
                       singletons_only=False, use_memo=True) -> SolutionProfile:
    """RI solution with the information-set machinery enabled.

    On perfect-information input this produces exactly the same profile as
    `solve_ri`; both run the same recursion.
    """
    if singletons_only:
        utils = utils.restricted_to_singletons()
    solver = _Solver(tree, utils, use_memo=use_memo)
    root_entry = solver.run()
    return SolutionProfile(tree, utils, root_entry, solver.memo, solver.audit,
                           singletons_only=singletons_only)


def solve_game(tree: GameTree, utils: UtilitySystem, **kw) -> SolutionProfile:
    """Dispatch on information structure; the CLI entry point."""
    if tree.is_perfect_information:
        return solve_ri(tree, utils, **kw)
    return solve_ri_imperfect(tree, utils, **kw)


def combine_chance_root(branch_solutions) -> LocalSolution:
    """Probability-weighted combination of per-branch solutions.

    With a single branch the branch solution is returned unchanged; with
    several, payoffs are the weighted sums and each branch keeps its own
    partition (no cross-branch merging), so the combined partition is not
    meaningful and is reported as the finest one common to the branches.
    """
    if len(branch_solutions) == 1:
        return branch_solutions[0][1]
    actions: dict = {}
    pairs = []
    outcome = None
    for p, sol in branch_solutions:
        actions.update(sol.actions)
        contrib = tuple(p * v for v in sol.outcome)
        outcome = contrib if outcome is None else tuple(
            a + b for a, b in zip(outcome, contrib))
        pairs.extend((z, p * q) for z, q in sol.dist)
    finest = sorted({(i,) for _, sol in branch_solutions
                     for block in sol.partition for i in block})
    return LocalSolution(actions, make_dist(pairs), outcome, tuple(finest))


def index_reference_point(tree, utils, x, partition=None) -> ReferencePoint:
    """r0 at node `x`: the active player best-responds to adopted successors.

    At a terminal node this is the trivial base case (no choice to make).
    """
    solver = _Solver(tree, utils)
    view = partition or singleton_partition(tree.n_players)
    if tree.nodes[x].is_terminal:
        return ReferencePoint(None, solver.solve(x, view), None, 0)
    kids = {y: solver.solve(y, view) for y in tree.frontier_of(x)}
    node = tree.nodes[x]
    block = block_containing(view, node.player)
    best_label, best_key = None, None
    for label, child in node.actions:
        key = choice_key(tree, utils, view, block, kids[child].dist)
        if best_key is None or key > best_key:
            best_label, best_key = label, key
    actions = {tree.info_set_of(x): best_label}
    for kid in kids.values():
        actions.update(kid.actions)
    dist = kids[node.child(best_label)].dist
    entry = Entry(x, view, actions, dist, dist_payoffs(dist, tree), view,
                  None, dict(kids), ())
    return ReferencePoint(None, entry, solver._active_value(block, entry), 0)


def enumerate_reference_points(tree, utils, x, partition=None):
    """The full sequence at `x`: r0 first, then supergame points sorted
    by the active player's value (ties: subsets first, then canonical order)."""
    view = partition or singleton_partition(tree.n_players)
    points = [index_reference_point(tree, utils, x, view)]
    solver = _Solver(tree, utils)
    block = block_containing(view, tree.nodes[x].player)
    for k, (value, union, entry) in enumerate(solver._candidates(x, view, block)):
        points.append(ReferencePoint(union, entry, value, k + 1))
    return points


def ir_chain(tree, utils, points) -> ReferencePoint:
    """Walk the sequence; return the greatest individually rational point."""
    accepted = points[0]
    for point in points[1:]:
        adopting = block_containing(point.entry.partition, point.coalition[0])
        ok = all(
            expected_individual_value(i, point.entry.dist,
                                      point.entry.partition, utils, tree)
            > expected_individual_value(i, accepted.entry.dist,
                                        accepted.entry.partition, utils, tree)
            for i in adopting)
        if ok:
            accepted = point
    return accepted


def check_ir_invariants(profile: SolutionProfile):
    """Re-assert chain monotonicity and coalition stability from the trace.

    Returns (groups checked, acceptances seen); raises CefgError on the
    first violated invariant.
    """
    groups: list[list[SolveStep]] = []
    current_key = None
    for step in profile.audit:
        key = (step.node, step.view)
        if key != current_key:
            groups.append([])
            current_key = key
        groups[-1].append(step)
    accepted_total = 0
    for group in groups:
        value = None
        for step in group:
            if step.kind == "index-point":
                value = step.active_value
            elif step.kind == "ir-accepted":
                accepted_total += 1
                if value is not None and not step.active_value > value:
                    raise CefgError(
                        f"accepted point at {step.node} does not increase the "
                        f"active player's value ({step.active_value} <= {value})")
                value = step.active_value
                if not step.comparisons:
                    raise CefgError(f"accepted step at {step.node} lacks comparisons")
                for agent, cand, held in step.comparisons:
                    if not cand > held:
                        raise CefgError(
                            f"agent {agent} does not strictly improve at {step.node}")
            elif step.kind == "ir-rejected":
                if all(cand > held for _, cand, held in step.comparisons):
                    raise CefgError(
                        f"rejected point at {step.node} improves every agent")
    return len(groups), accepted_total
