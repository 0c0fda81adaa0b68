"""
Exhaustive reference optimizer for small instances. No pruning bounds are used, so
its answers are the ground truth the search engines are checked against.
"""

import logging

from .errors import BadParameters, InstanceTooLarge
from .objectives import LeafCounts, label_for, leaf_set_loss, monotone_loss
from .ranksearch import label_rank_tree
from .support import SupportSet, split
from .tree import Leaf, Split, leaf_count, structure_key

logger = logging.getLogger(__name__)

MAX_FEATURES = 8
MAX_DEPTH = 4


def _better(candidate, incumbent):
    """Lower risk, then fewer leaves, then structure order."""
    if incumbent is None:
        return True
    risk, tree = candidate
    best_risk, best_tree = incumbent
    if abs(risk - best_risk) > 1e-12:
        return risk < best_risk
    return (leaf_count(tree), structure_key(tree)) < (leaf_count(best_tree), structure_key(best_tree))


class _AdditiveOracle:
    def __init__(self, ds, objective):
        self.ds = ds
        self.objective = objective
        self.memo = {}

    def leaf(self, s):
        ds = self.ds
        counts = LeafCounts(*ds.counts(s))
        leaf = label_for(counts, self.objective, ds.n_pos, ds.n_neg)
        fp = counts.n_minus if leaf.label else 0
        fn = 0 if leaf.label else counts.n_plus
        loss = monotone_loss(self.objective.kind, fp, fn, ds.n_pos, ds.n_neg, self.objective.weight)
        return loss + self.objective.regularization, leaf

    def best(self, s, depth):
        key = (s.bits, depth)
        if key not in self.memo:
            incumbent = self.leaf(s)
            if depth > 0:
                for j in range(self.ds.M):
                    s_l, s_r = split(s, j, self.ds.masks)
                    if not s_l or not s_r:
                        continue
                    risk_l, tree_l = self.best(s_l, depth - 1)
                    risk_r, tree_r = self.best(s_r, depth - 1)
                    candidate = (risk_l + risk_r, Split(j, tree_l, tree_r))
                    if _better(candidate, incumbent):
                        incumbent = candidate
            self.memo[key] = incumbent
        return self.memo[key]


class _PartitionOracle:
    """Enumerates every leaf partition reachable within the depth limit."""

    def __init__(self, ds, objective):
        self.ds = ds
        self.objective = objective
        self.memo = {}

    def partitions(self, s, depth):
        key = (s.bits, depth)
        if key not in self.memo:
            found = {frozenset({s.bits}): Leaf()}
            if depth > 0:
                for j in range(self.ds.M):
                    s_l, s_r = split(s, j, self.ds.masks)
                    if not s_l or not s_r:
                        continue
                    lefts = self.partitions(s_l, depth - 1)
                    rights = self.partitions(s_r, depth - 1)
                    for left_key, left in lefts.items():
                        for right_key, right in rights.items():
                            merged = left_key | right_key
                            tree = Split(j, left, right)
                            if merged not in found or structure_key(tree) < structure_key(found[merged]):
                                found[merged] = tree
            self.memo[key] = found
        return self.memo[key]

    def best(self, s, depth):
        ds = self.ds
        lam = self.objective.regularization
        incumbent = None
        for parts, tree in self.partitions(s, depth).items():
            counts = [LeafCounts(*ds.counts(SupportSet(bits, s.width))) for bits in parts]
            risk = leaf_set_loss(self.objective, counts, ds.n_pos, ds.n_neg) + lam * len(parts)
            candidate = (risk, tree)
            if _better(candidate, incumbent):
                incumbent = candidate
        risk, tree = incumbent
        return risk, label_rank_tree(tree, ds, self.objective)


def enumerate_optimal(ds, objective, max_depth):
    """Returns ``(tree, risk)`` minimizing the regularized risk over trees of depth ``<= max_depth``."""
    if max_depth < 0:
        raise BadParameters(f"depth must be nonnegative, got {max_depth}")
    if ds.M > MAX_FEATURES or max_depth > MAX_DEPTH:
        raise InstanceTooLarge(
            f"exhaustive search is limited to {MAX_FEATURES} features and depth {MAX_DEPTH}, "
            f"got {ds.M} features and depth {max_depth}"
        )
    oracle = _AdditiveOracle(ds, objective) if objective.additive else _PartitionOracle(ds, objective)
    risk, tree = oracle.best(ds.full_support(), max_depth)
    logger.debug("Oracle optimum at depth %d: risk %.6f, %d leaves", max_depth, risk, leaf_count(tree))
    return tree, risk
