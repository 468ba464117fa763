"""Noncooperative baselines: backward induction and subgame-perfect equilibria.

These solvers treat the effective players of a view (merged coalitions count
as one player) as fully independent. They supply the index reference points
for the recursive solver and the `bi` CLI baseline.

Selection is deterministic everywhere:

* best responses scan actions in declaration order and keep the first
  maximizer; a merged player breaks coalition-utility ties by its members'
  individual utilities, lowest member id first;
* pure equilibria are enumerated row-major (players ordered by smallest
  member, strategies in declaration order) and the first one wins;
* mixed equilibria come from two-player support enumeration over exact
  rationals, supports by size then lexicographic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .errors import ImperfectInformation, MixedEquilibriumUnsupported
from .model import (
    GameTree,
    SupergameView,
    UtilitySystem,
    block_containing,
    canon_partition,
    dist_payoffs,
    expected_coalition_value,
    expected_individual_value,
    make_dist,
    singleton_partition,
)


@dataclass(frozen=True)
class LocalSolution:
    """A solved subgame: full profile, terminal distribution, payoffs.

    `actions` maps info-set id to a pure action label or, for mixed play, to
    a tuple of (label, probability) pairs.
    """

    actions: dict
    dist: tuple
    outcome: tuple
    partition: tuple


def _unpack(game, utils):
    if isinstance(game, SupergameView):
        return game.base, game.utils, game.partition
    if utils is None:
        utils = UtilitySystem(game.n_players, False, frozenset())
    return game, utils, singleton_partition(game.n_players)


def choice_key(tree, utils, partition, block, dist):
    """Comparison key for a block evaluating a continuation distribution.

    Leads with the block's own utility; a merged block then prefers higher
    individual utility for its lowest-indexed member, and so on down. With a
    singleton block this is just the player's expected utility.
    """
    if len(block) == 1:
        return (expected_individual_value(block[0], dist, partition, utils, tree),)
    main = expected_coalition_value(block, dist, utils, tree)
    return (main,) + tuple(
        expected_individual_value(i, dist, partition, utils, tree) for i in block)


def best_response_at(tree, utils, x, successor_solutions, owner, partition=None):
    """The owner's utility-maximizing action at node `x` given solved children.

    Returns (action label, owner's value). Ties go to the first action in
    declaration order (after the merged-owner member preference above).
    """
    partition = (canon_partition(partition) if partition
                 else singleton_partition(tree.n_players))
    block = (owner,) if isinstance(owner, int) else tuple(sorted(owner))
    best_label, best_key = None, None
    for label, child in tree.nodes[x].actions:
        key = choice_key(tree, utils, partition, block, successor_solutions[child].dist)
        if best_key is None or key > best_key:
            best_label, best_key = label, key
    return best_label, best_key[0]


def backward_induction(game, utils=None) -> LocalSolution:
    """Standard backward induction over a perfect-information view.

    Works on a bare GameTree (all players independent) or a SupergameView
    (the merged coalition maximizes its coalition utility at its nodes).
    """
    tree, utils, partition = _unpack(game, utils)
    if not tree.is_perfect_information:
        raise ImperfectInformation("backward induction needs singleton info sets")

    def solve(x: str) -> LocalSolution:
        node = tree.nodes[x]
        if node.is_terminal:
            dist = ((x, Fraction(1)),)
            return LocalSolution({}, dist, dist_payoffs(dist, tree), partition)
        children = {c: solve(c) for _, c in node.actions}
        if x == tree.root and tree.chance_at_root:
            return _combine_chance(tree, partition, children)
        block = block_containing(partition, node.player)
        best_label, best_key = None, None
        for label, child in node.actions:
            key = choice_key(tree, utils, partition, block, children[child].dist)
            if best_key is None or key > best_key:
                best_label, best_key = label, key
        actions = {tree.info_set_of(x): best_label}
        for sol in children.values():
            actions.update(sol.actions)
        dist = children[node.child(best_label)].dist
        return LocalSolution(actions, dist, dist_payoffs(dist, tree), partition)

    return solve(tree.root)


def _combine_chance(tree, partition, children) -> LocalSolution:
    actions: dict = {}
    pairs = []
    for _, child in tree.nodes[tree.root].actions:
        sol = children[child]
        actions.update(sol.actions)
        p = tree.chance_at_root[child]
        pairs.extend((z, p * q) for z, q in sol.dist)
    dist = make_dist(pairs)
    return LocalSolution(actions, dist, dist_payoffs(dist, tree), partition)


# -- one layer as a normal-form game ------------------------------------------


class LayerGame:
    """Reduced normal form of one subgame layer.

    The layer of subgame `g` is everything between its root and its maximal
    proper subgames; `continuation` maps each frontier node to the terminal
    distribution of its already-solved subgame.
    """

    def __init__(self, tree: GameTree, utils, partition, g, continuation):
        self.tree, self.utils, self.partition = tree, utils, partition
        self.g = g
        self.continuation = dict(continuation)
        self.info_sets = tree.layer_info_sets(g)
        owners = {}
        for sid in self.info_sets:
            owners[sid] = block_containing(partition, tree.info_set_player(sid))
        self.players = sorted({b for b in owners.values()}, key=lambda b: b[0])
        self.sets_of = {b: tuple(s for s in self.info_sets if owners[s] == b)
                        for b in self.players}
        self.strategies = {}
        for b in self.players:
            label_ranges = [self.tree.nodes[self.tree.info_sets[s][0]].action_labels()
                            for s in self.sets_of[b]]
            self.strategies[b] = [dict(zip(self.sets_of[b], combo))
                                  for combo in product(*label_ranges)]

    def playout(self, assignment) -> tuple:
        """Terminal distribution reached from g under a pure assignment."""
        nid = self.g
        while True:
            node = self.tree.nodes[nid]
            if node.is_terminal:
                return ((nid, Fraction(1)),)
            if nid != self.g and nid in self.continuation:
                return self.continuation[nid]
            nid = node.child(assignment[self.tree.info_set_of(nid)])

    def value(self, block, dist):
        return choice_key(self.tree, self.utils, self.partition, block, dist)[0]

    def profile_dist(self, strategy_ix) -> tuple:
        assignment = {}
        for b, ix in zip(self.players, strategy_ix):
            assignment.update(self.strategies[b][ix])
        return self.playout(assignment)

    def pure_nash(self):
        """First pure equilibrium in row-major order, or None."""
        ranges = [range(len(self.strategies[b])) for b in self.players]
        for profile in product(*ranges):
            if self._is_pure_nash(profile):
                return profile
        return None

    def _is_pure_nash(self, profile) -> bool:
        base_dist = self.profile_dist(profile)
        for k, b in enumerate(self.players):
            held = self.value(b, base_dist)
            for alt in range(len(self.strategies[b])):
                if alt == profile[k]:
                    continue
                dev = list(profile)
                dev[k] = alt
                if self.value(b, self.profile_dist(tuple(dev))) > held:
                    return False
        return True

    def payoff_matrices(self):
        """(A, B) block-utility matrices for a two-player layer."""
        rows, cols = self.players
        A, B = [], []
        for i in range(len(self.strategies[rows])):
            arow, brow = [], []
            for j in range(len(self.strategies[cols])):
                dist = self.profile_dist((i, j))
                arow.append(self.value(rows, dist))
                brow.append(self.value(cols, dist))
            A.append(arow)
            B.append(brow)
        return A, B

    def solve(self):
        """Equilibrium profile: {info set -> action | ((label, prob), ...)}."""
        pure = self.pure_nash()
        if pure is not None:
            assignment = {}
            for b, ix in zip(self.players, pure):
                assignment.update(self.strategies[b][ix])
            return assignment, self.profile_dist(pure)
        if len(self.players) != 2:
            raise MixedEquilibriumUnsupported(
                f"no pure equilibrium in the layer at {self.g} and "
                f"{len(self.players)} players are involved")
        if any(len(self.sets_of[b]) != 1 for b in self.players):
            raise MixedEquilibriumUnsupported(
                f"mixed play across several information sets at {self.g} "
                "is not supported")
        A, B = self.payoff_matrices()
        found = support_enumeration(A, B)
        if found is None:
            raise MixedEquilibriumUnsupported(
                f"support enumeration found no equilibrium at {self.g}")
        x, y = found
        rows, cols = self.players
        row_set, col_set = self.sets_of[rows][0], self.sets_of[cols][0]
        row_labels = self.tree.nodes[self.tree.info_sets[row_set][0]].action_labels()
        col_labels = self.tree.nodes[self.tree.info_sets[col_set][0]].action_labels()
        assignment = {
            row_set: tuple((lab, p) for lab, p in zip(row_labels, x)),
            col_set: tuple((lab, p) for lab, p in zip(col_labels, y)),
        }
        pairs = []
        for i, pi in enumerate(x):
            for j, pj in enumerate(y):
                if pi and pj:
                    strat = dict(self.strategies[rows][i])
                    strat.update(self.strategies[cols][j])
                    pairs.extend((z, pi * pj * q) for z, q in self.playout(strat))
        return assignment, make_dist(pairs)


def support_enumeration(A, B):
    """First mixed equilibrium of a bimatrix game over exact rationals.

    Scans equal-size support pairs, sizes ascending then lexicographic,
    solving the indifference system for each; returns (x, y) probability
    vectors or None. Intended for the no-pure-equilibrium case.
    """
    m, n = len(A), len(A[0])
    for size in range(1, min(m, n) + 1):
        for sup_r in combinations(range(m), size):
            for sup_c in combinations(range(n), size):
                res = _check_support(A, B, sup_r, sup_c)
                if res is not None:
                    return res
    return None


def _check_support(A, B, sup_r, sup_c):
    m, n = len(A), len(A[0])
    y_part = _solve_indifference([[A[i][j] for j in sup_c] for i in sup_r])
    x_part = _solve_indifference([[B[i][j] for i in sup_r] for j in sup_c])
    if y_part is None or x_part is None:
        return None
    y_probs, v = y_part
    x_probs, w = x_part
    if any(p < 0 for p in y_probs) or any(p < 0 for p in x_probs):
        return None
    x = [Fraction(0)] * m
    y = [Fraction(0)] * n
    for k, i in enumerate(sup_r):
        x[i] = x_probs[k]
    for k, j in enumerate(sup_c):
        y[j] = y_probs[k]
    for i in range(m):
        if i not in sup_r and sum(A[i][j] * y[j] for j in range(n)) > v:
            return None
    for j in range(n):
        if j not in sup_c and sum(B[i][j] * x[i] for i in range(m)) > w:
            return None
    return x, y


def _solve_indifference(M):
    """Solve sum_j M[i][j] p_j = v for all i, sum p_j = 1.

    Returns (probabilities, v) or None when the system is singular.
    """
    k = len(M)
    rows = [[M[i][j] for j in range(k)] + [Fraction(-1), Fraction(0)]
            for i in range(k)]
    rows.append([Fraction(1)] * k + [Fraction(0), Fraction(1)])
    sol = _gauss(rows, k + 1)
    if sol is None:
        return None
    return sol[:k], sol[k]


def _gauss(rows, unknowns):
    rows = [list(r) for r in rows]
    for col in range(unknowns):
        pivot = next((r for r in range(col, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        head = rows[col][col]
        rows[col] = [v / head for v in rows[col]]
        for r in range(len(rows)):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    for r in range(unknowns, len(rows)):
        if rows[r][-1] != 0:
            return None
    return [rows[r][-1] for r in range(unknowns)]


# -- subgame-perfect equilibrium ----------------------------------------------


def spne_in_subgame(game, utils=None, root=None) -> LocalSolution:
    """A subgame-perfect equilibrium with deterministic selection.

    Solves innermost subgames first; every layer containing contested
    information sets becomes a reduced normal-form game solved by the
    selection rules in the module docstring. For perfect information this
    reproduces `backward_induction` exactly.
    """
    tree, utils, partition = _unpack(game, utils)
    g = root if root is not None else tree.root
    if g == tree.root and tree.chance_at_root:
        children = {c: _spne(tree, utils, partition, c)
                    for _, c in tree.nodes[g].actions}
        return _combine_chance(tree, partition, children)
    return _spne(tree, utils, partition, g)


def _spne(tree, utils, partition, g) -> LocalSolution:
    node = tree.nodes[g]
    if node.is_terminal:
        dist = ((g, Fraction(1)),)
        return LocalSolution({}, dist, dist_payoffs(dist, tree), partition)
    actions: dict = {}
    continuation = {}
    for y in tree.frontier_of(g):
        sub = _spne(tree, utils, partition, y)
        continuation[y] = sub.dist
        actions.update(sub.actions)
    layer = LayerGame(tree, utils, partition, g, continuation)
    assignment, dist = layer.solve()
    actions.update(assignment)
    return LocalSolution(actions, dist, dist_payoffs(dist, tree), partition)
