"""
Pruning bounds shared by the dynamic-programming engine and the leaf-set search.

Every function is pure. Comparisons leave ``EPSILON`` of slack on the pruning side.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .errors import BadParameters, ZeroRegularizer
from .objectives import (
    LeafCounts,
    ObjectiveKind,
    fscore_errors,
    loss_vectors,
    monotone_loss,
    pauc_loss,
    rocch_loss,
)
from .support import SupportSet, selective_sum

EPSILON = 1e-9


@dataclass(frozen=True)
class PartialTreeSummary:
    """
    A tree under construction: committed (fixed) leaves plus the support that is
    still allowed to be split further.
    """

    fixed_fp: float = 0.0
    fixed_fn: float = 0.0
    H: int = 1
    K: int = 0
    split_support: Optional[SupportSet] = None
    split_counts: LeafCounts = LeafCounts(0, 0)
    fixed_leaves: Tuple[LeafCounts, ...] = field(default=())

    def __post_init__(self):
        if self.K > self.H:
            raise BadParameters(f"{self.K} fixed leaves exceed the leaf count {self.H}")
        if self.fixed_fp < 0 or self.fixed_fn < 0:
            raise BadParameters("error masses must be nonnegative")


def hierarchical_lb(summary, objective, n_pos, n_neg):
    loss = monotone_loss(objective.kind, summary.fixed_fp, summary.fixed_fn, n_pos, n_neg, objective.weight)
    return loss + objective.regularization * summary.H


def lookahead_prune(b, lam, best):
    return b + lam >= best - EPSILON


def subtree_prune(lb_left, lb_right, best):
    return lb_left > best + EPSILON or lb_right > best + EPSILON or lb_left + lb_right > best + EPSILON


def max_leaves(best, lam, M):
    if lam == 0:
        raise ZeroRegularizer()
    return min(math.floor(best / lam + EPSILON), 2**M)


def max_leaves_from(b, H, best, lam, M):
    """Exclusive cap on the leaf count of any child of a tree with ``H`` leaves and bound ``b``."""
    if lam == 0:
        raise ZeroRegularizer()
    return min(H + math.floor((best - b) / lam + EPSILON), 2**M)


def fails_bounds(lb, ub, lam):
    """True when a node can do no better than staying a leaf."""
    return ub - lb <= lam + EPSILON or ub <= 2 * lam + EPSILON


def leaf_support_prune(child_mass, lam):
    """
    True when one side of a split carries less loss mass than ``lam``. Deleting the
    split and sending that side through its sibling's subtree then costs less than
    the leaf it saves, so no optimal tree makes the split.
    """
    return child_mass < lam - EPSILON


def equivalent_points_lb(s, ds, lam, objective=None):
    # Only classes holding both labels contribute.
    impure = SupportSet(s.bits & ds.impure, s.width)
    if not impure:
        return lam
    if objective is None:
        return lam + selective_sum(impure, ds.z_min, ds.prefix_min)
    losses = loss_vectors(ds, objective)
    return lam + selective_sum(impure, losses.lowest, losses.prefix_lowest)


def one_class_ub(s, ds, lam, objective=None):
    if objective is None:
        plus = selective_sum(s, ds.z_plus, ds.prefix_plus)
        minus = selective_sum(s, ds.z_minus, ds.prefix_minus)
    else:
        losses = loss_vectors(ds, objective)
        plus = selective_sum(s, losses.plus, losses.prefix_plus)
        minus = selective_sum(s, losses.minus, losses.prefix_minus)
    return lam + min(plus, minus)


def incremental_similar_support_gap(moved, uncertain, l_max=1.0):
    """
    Largest risk difference between the best descendants of two trees whose splits
    disagree on ``moved`` mass, ``uncertain`` of which sits in unfixed leaves.
    """
    return (moved + 2 * uncertain) * l_max


def similar_support_gamma(fp, fn, moved, objective, n_pos, n_neg):
    # Every supported loss is linear-fractional in the shift, so the maximum sits at an end.
    if moved == 0:
        return 0.0
    base = monotone_loss(objective.kind, fp, fn, n_pos, n_neg, objective.weight)
    return max(
        monotone_loss(objective.kind, fp + a, fn + moved - a, n_pos, n_neg, objective.weight) - base
        for a in (0, moved)
    )


def subset_prune(r_left_small, r_left_big, contained):
    """
    True when the coarser threshold split is dominated: its right side contains the
    finer split's right side and its left subtree is no better.
    """
    return contained and r_left_small <= r_left_big


def _augmented(summary):
    plus, minus = summary.split_counts.n_plus, summary.split_counts.n_minus
    return [LeafCounts(plus, 0), *summary.fixed_leaves, LeafCounts(0, minus)]


def rank_lb(summary, n_pos, n_neg, lam):
    """Split positives ranked above every fixed leaf, split negatives below all of them."""
    return rocch_loss(_augmented(summary), n_pos, n_neg) + lam * summary.H


def pauc_lb(summary, n_pos, n_neg, theta, lam):
    return pauc_loss(_augmented(summary), n_pos, n_neg, theta) + lam * summary.H


def rank_equiv_lb(summary, ds, lam):
    """
    Rank bound with the split support broken into its equivalence classes: no
    completion can separate samples sharing a feature vector.
    """
    leaves = list(summary.fixed_leaves)
    if summary.split_support is not None:
        leaves.extend(
            LeafCounts(int(ds.count_plus[u]), int(ds.count_minus[u]))
            for u in summary.split_support.indices()
        )
    return rocch_loss(leaves, ds.n_pos, ds.n_neg) + lam * summary.H


def pure_split_loss(leaves, index, loss):
    """Loss of ``leaves`` with leaf ``index`` replaced by its two pure halves."""
    parent = leaves[index]
    refined = list(leaves[:index]) + list(leaves[index + 1 :])
    refined.append(LeafCounts(parent.n_plus, 0))
    refined.append(LeafCounts(0, parent.n_minus))
    return loss([leaf for leaf in refined if leaf.total > 0])


def rank_incremental_check(parent, tree_loss, loss_without, lam):
    """
    True when splitting ``parent`` could still pay for its extra leaf, i.e. the
    loss it can remove at most is at least ``lam``.
    """
    if parent.n_plus == 0 or parent.n_minus == 0:
        return False
    return tree_loss - loss_without >= lam - EPSILON


def summary_for(fixed, split_leaves, objective, split_support=None):
    """Summarizes fixed and splittable leaves given as ``LeafCounts``."""
    fixed = tuple(fixed)
    split_leaves = tuple(split_leaves)
    fp = fn = 0
    if objective.kind is ObjectiveKind.F_SCORE:
        fp, fn = fscore_errors(fixed, objective.weight)
    return PartialTreeSummary(
        fixed_fp=fp,
        fixed_fn=fn,
        H=len(fixed) + len(split_leaves),
        K=len(fixed),
        split_support=split_support,
        split_counts=LeafCounts(
            sum(c.n_plus for c in split_leaves),
            sum(c.n_minus for c in split_leaves),
        ),
        fixed_leaves=fixed,
    )
