"""
Best-first branch and bound over leaf sets for objectives that do not decompose over
leaves: the ROC convex hull area, its partial variant, and the F-score.

A state holds fixed leaves, which stay leaves in every descendant, and splittable
leaves. The first splittable leaf in canonical order is either fixed or split on a
feature, so every tree is reached through exactly one sequence of decisions.
"""

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Tuple

from .bounds import (
    EPSILON,
    hierarchical_lb,
    lookahead_prune,
    max_leaves,
    pauc_lb,
    pure_split_loss,
    rank_equiv_lb,
    rank_incremental_check,
    rank_lb,
    summary_for,
)
from .config import BoundSwitches, SearchLimits
from .dpb import OptimizationResult, SearchStats
from .errors import BadParameters, DegenerateClass, SearchTimeout
from .objectives import (
    LeafCounts,
    ObjectiveKind,
    label_for,
    leaf_counts,
    leaf_set_loss,
    roc_curve,
)
from .support import SupportSet, split
from .tree import Leaf, Split, tree_from_leaves

logger = logging.getLogger(__name__)

RANK_KINDS = frozenset({ObjectiveKind.AUC, ObjectiveKind.PARTIAL_AUC, ObjectiveKind.F_SCORE})


@dataclass(frozen=True)
class LeafSlot:
    path: Tuple[Tuple[int, int], ...]
    support: SupportSet
    counts: LeafCounts


@dataclass(frozen=True)
class LeafSetState:
    fixed: Tuple[LeafSlot, ...]
    splittable: Tuple[LeafSlot, ...]
    bound: float = 0.0
    key: tuple = field(default=(), compare=False)

    @property
    def H(self):
        return len(self.fixed) + len(self.splittable)

    @property
    def leaves(self):
        return self.fixed + self.splittable


def canonical_key(fixed, splittable):
    return (
        tuple(sorted(slot.support.bits for slot in fixed)),
        tuple(sorted(slot.support.bits for slot in splittable)),
    )


class RankSearch:
    def __init__(self, ds, objective, limits=None, switches=None):
        if objective.kind not in RANK_KINDS:
            raise BadParameters(f"{objective.kind.value} is additive; use the dynamic-programming engine")
        if ds.n_pos == 0 or (objective.kind.ranked and ds.n_neg == 0):
            raise DegenerateClass()
        self.ds = ds
        self.objective = objective
        self.limits = limits or SearchLimits()
        self.switches = switches or BoundSwitches()
        self.lam = objective.regularization
        self.features = ds.masks.distinct_partitions()
        self.visited = set()
        self.stats = SearchStats()
        self.trace = []
        self.incumbent = None
        self.incumbent_risk = float("inf")
        self._heap = []
        self._counter = itertools.count()
        self._start = None

    def loss(self, counts):
        return leaf_set_loss(self.objective, counts, self.ds.n_pos, self.ds.n_neg)

    def bound(self, fixed, splittable):
        """Lower bound on the risk of every descendant of the state, the state's own tree included."""
        fixed_counts = [slot.counts for slot in fixed]
        split_counts = [slot.counts for slot in splittable]
        support = SupportSet.empty(self.ds.U)
        for slot in splittable:
            support = support | slot.support
        summary = summary_for(fixed_counts, split_counts, self.objective, support)
        kind = self.objective.kind
        if kind is ObjectiveKind.F_SCORE:
            return hierarchical_lb(summary, self.objective, self.ds.n_pos, self.ds.n_neg)
        if kind is ObjectiveKind.PARTIAL_AUC:
            return pauc_lb(summary, self.ds.n_pos, self.ds.n_neg, self.objective.theta, self.lam)
        if self.switches.equivalent_points:
            return rank_equiv_lb(summary, self.ds, self.lam)
        return rank_lb(summary, self.ds.n_pos, self.ds.n_neg, self.lam)

    def _offer(self, state):
        """Evaluates the tree obtained by fixing every leaf of ``state``."""
        leaves = state.leaves
        risk = self.loss([slot.counts for slot in leaves]) + self.lam * len(leaves)
        if risk < self.incumbent_risk - EPSILON or (
            abs(risk - self.incumbent_risk) <= EPSILON and len(leaves) < len(self.incumbent)
        ):
            self.incumbent = leaves
            self.incumbent_risk = risk
            self.trace.append(
                {
                    "t": time.time() - self._start,
                    "nodes": self.stats.nodes,
                    "lb": self._frontier_bound(),
                    "ub": risk,
                }
            )

    def _frontier_bound(self):
        if not self._heap:
            return self.incumbent_risk
        return min(self._heap[0][0], self.incumbent_risk)

    def _push(self, fixed, splittable):
        fixed = tuple(sorted(fixed, key=lambda slot: slot.support))
        splittable = tuple(sorted(splittable, key=lambda slot: slot.support))
        key = canonical_key(fixed, splittable)
        if self.switches.permutation:
            if key in self.visited:
                return
            self.visited.add(key)
        H = len(fixed) + len(splittable)
        if (
            self.switches.leaf_cap
            and self.lam > 0
            and self.incumbent is not None
            and H > max_leaves(self.incumbent_risk, self.lam, self.ds.M)
        ):
            return
        b = self.bound(fixed, splittable)
        if b >= self.incumbent_risk - EPSILON:
            return
        state = LeafSetState(fixed, splittable, b, key)
        self.stats.nodes += 1
        self._offer(state)
        if splittable:
            heapq.heappush(self._heap, (b, H, next(self._counter), state))

    def _children(self, slot):
        for j in self.features:
            s_l, s_r = split(slot.support, j, self.ds.masks)
            if not s_l or not s_r:
                continue
            self.stats.split_requests += 1
            yield (
                LeafSlot(slot.path + ((j, 0),), s_l, LeafCounts(*self.ds.counts(s_l))),
                LeafSlot(slot.path + ((j, 1),), s_r, LeafCounts(*self.ds.counts(s_r))),
            )

    def expand(self, state):
        leaf, rest = state.splittable[0], state.splittable[1:]
        self._push(state.fixed + (leaf,), rest)

        if leaf.counts.n_plus == 0 or leaf.counts.n_minus == 0:
            # Splitting a pure leaf never lowers the loss.
            return
        if self.switches.lookahead and lookahead_prune(state.bound, self.lam, self.incumbent_risk):
            return
        if self.switches.rank_incremental and not rest:
            counts = [slot.counts for slot in state.leaves]
            index = len(state.fixed)
            current = self.loss(counts)
            refined = pure_split_loss(counts, index, self.loss)
            if not rank_incremental_check(leaf.counts, current, refined, self.lam):
                return
        for left, right in self._children(leaf):
            self._push(state.fixed, rest + (left, right))

    def run(self):
        self._start = time.time()
        deadline = None if self.limits.time_limit is None else self._start + self.limits.time_limit
        if self.lam == 0:
            logger.warning("Regularization is 0; the leaf cap is disabled")
        logger.info(
            "Starting leaf-set search: %d classes, %d features, objective %s, lambda %g",
            self.ds.U,
            self.ds.M,
            self.objective.kind.value,
            self.lam,
        )

        full = self.ds.full_support()
        root = LeafSlot((), full, LeafCounts(self.ds.n_pos, self.ds.n_neg))
        self._push((), (root,))

        timed_out = False
        while self._heap:
            if self._heap[0][0] >= self.incumbent_risk - EPSILON:
                self._heap.clear()
                break
            if deadline is not None and time.time() >= deadline:
                timed_out = True
                break
            _, _, _, state = heapq.heappop(self._heap)
            self.stats.iterations += 1
            if state.bound >= self.incumbent_risk - EPSILON:
                continue
            self.expand(state)
            if self.stats.iterations % 10000 == 0:
                logger.debug(
                    "%d states expanded, %d queued, incumbent %.6f",
                    self.stats.iterations,
                    len(self._heap),
                    self.incumbent_risk,
                )

        return self.result(timed_out)

    def result(self, timed_out):
        lower = self._frontier_bound()
        gap = max(0.0, self.incumbent_risk - lower) if timed_out else 0.0
        tree = tree_from_leaves(
            (slot.path, label_for(slot.counts, self.objective, self.ds.n_pos, self.ds.n_neg))
            for slot in sorted(self.incumbent, key=lambda slot: slot.path)
        )
        self.stats.seconds = time.time() - self._start
        self.trace.append(
            {"t": self.stats.seconds, "nodes": self.stats.nodes, "lb": lower, "ub": self.incumbent_risk}
        )
        logger.info(
            "Leaf-set search finished: risk %.6f, gap %.3g, %d leaves, %d states",
            self.incumbent_risk,
            gap,
            len(self.incumbent),
            self.stats.nodes,
        )
        return OptimizationResult(
            tree=tree,
            risk=self.incumbent_risk,
            loss=self.incumbent_risk - self.lam * len(self.incumbent),
            lower_bound=lower,
            gap=gap,
            engine="ranksearch",
            stats=self.stats,
            trace=self.trace,
            timed_out=timed_out,
        )


def optimize_rank(ds, objective, limits=None, switches=None):
    result = RankSearch(ds, objective, limits, switches).run()
    if result.timed_out:
        raise SearchTimeout(result)
    return result


def label_rank_tree(tree, ds, objective):
    """Scores the leaves of ``tree`` (AUC kinds) or labels them with the weighted rule (F-score)."""
    def build(node, s):
        if isinstance(node, Leaf):
            return label_for(LeafCounts(*ds.counts(s)), objective, ds.n_pos, ds.n_neg)
        s_l, s_r = split(s, node.feature, ds.masks)
        return Split(node.feature, build(node.left, s_l), build(node.right, s_r))

    return build(tree, ds.full_support())


def roc_points(tree, ds):
    return roc_curve([counts for _, counts in leaf_counts(tree, ds)], ds.n_pos, ds.n_neg)
