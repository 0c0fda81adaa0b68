"""
Losses over (FP, FN), rank-statistic losses over leaf partitions, and leaf labeling.

Additive objectives (accuracy, balanced accuracy, weighted accuracy) reduce to
per-class loss weights over the equivalence classes. F-score and the ROC convex hull
objectives need the whole leaf set and are evaluated on integer counts.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import BadParameters, DegenerateClass
from .support import SupportSet, prefix_sums
from .tree import Leaf, iter_leaves, route

logger = logging.getLogger(__name__)


class ObjectiveKind(str, Enum):
    ACCURACY = "accuracy"
    BALANCED_ACCURACY = "balanced_accuracy"
    WEIGHTED_ACCURACY = "weighted_accuracy"
    F_SCORE = "f_score"
    AUC = "auc_ch"
    PARTIAL_AUC = "pauc_ch"

    @property
    def additive(self):
        return self in ADDITIVE_KINDS

    @property
    def ranked(self):
        return self in (ObjectiveKind.AUC, ObjectiveKind.PARTIAL_AUC)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        token = str(value).strip().lower()
        if token in SHORT_NAMES:
            return SHORT_NAMES[token]
        try:
            return cls(token)
        except ValueError:
            raise BadParameters(f"unknown objective {value!r}") from None


ADDITIVE_KINDS = frozenset(
    {
        ObjectiveKind.ACCURACY,
        ObjectiveKind.BALANCED_ACCURACY,
        ObjectiveKind.WEIGHTED_ACCURACY,
    }
)

SHORT_NAMES = {
    "acc": ObjectiveKind.ACCURACY,
    "bacc": ObjectiveKind.BALANCED_ACCURACY,
    "wacc": ObjectiveKind.WEIGHTED_ACCURACY,
    "f1": ObjectiveKind.F_SCORE,
    "auc": ObjectiveKind.AUC,
    "pauc": ObjectiveKind.PARTIAL_AUC,
}


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: ObjectiveKind
    regularization: float
    weight: float = 1.0
    theta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectiveKind.parse(self.kind))
        if not self.regularization >= 0:
            raise BadParameters(f"regularization must be nonnegative, got {self.regularization}")
        if not self.weight > 0:
            raise BadParameters(f"weight must be positive, got {self.weight}")
        if self.kind is ObjectiveKind.PARTIAL_AUC:
            if self.theta is None:
                raise BadParameters("partial AUC needs a threshold theta")
            if not 0 < self.theta <= 1:
                raise BadParameters(f"theta must lie in (0, 1], got {self.theta}")

    @property
    def additive(self):
        return self.kind.additive

    def as_dict(self):
        record = {
            "kind": self.kind.value,
            "regularization": self.regularization,
            "weight": self.weight,
        }
        if self.theta is not None:
            record["theta"] = self.theta
        return record


@dataclass(frozen=True)
class LeafCounts:
    n_plus: float
    n_minus: float

    @property
    def total(self):
        return self.n_plus + self.n_minus

    @property
    def ratio(self):
        """Exact positive fraction, used to order leaves on the ROC curve."""
        if self.total == 0:
            return Fraction(0)
        return Fraction(self.n_plus) / Fraction(self.total)


def _counts(leaf):
    if isinstance(leaf, LeafCounts):
        return leaf
    n_plus, n_minus = leaf
    return LeafCounts(n_plus, n_minus)


def monotone_loss(kind, fp, fn, n_pos, n_neg, weight=1.0):
    kind = ObjectiveKind.parse(kind)
    if not weight > 0:
        raise BadParameters(f"weight must be positive, got {weight}")
    if kind is ObjectiveKind.ACCURACY:
        return (fp + fn) / (n_pos + n_neg)
    if kind is ObjectiveKind.BALANCED_ACCURACY:
        if n_pos == 0 or n_neg == 0:
            raise BadParameters("balanced accuracy needs both classes")
        return 0.5 * (fn / n_pos + fp / n_neg)
    if kind is ObjectiveKind.WEIGHTED_ACCURACY:
        return (fp + weight * fn) / (weight * n_pos + n_neg)
    if kind is ObjectiveKind.F_SCORE:
        if n_pos == 0:
            raise BadParameters("F-score needs at least one positive sample")
        return (fp + fn) / (2 * n_pos + fp - fn)
    raise BadParameters(f"{kind.value} is not a function of FP and FN")


def label_leaf(counts, kind, weight=1.0, n_pos=None, n_neg=None):
    """
    Label of a leaf with ``counts``; ties go to class 0. Balanced accuracy compares
    rates and needs the class totals.
    """
    counts = _counts(counts)
    kind = ObjectiveKind.parse(kind)
    if kind is ObjectiveKind.BALANCED_ACCURACY:
        if n_pos is None or n_neg is None:
            raise BadParameters("balanced accuracy labeling needs class totals")
        return int(counts.n_plus * n_neg > counts.n_minus * n_pos)
    if kind in (ObjectiveKind.WEIGHTED_ACCURACY, ObjectiveKind.F_SCORE):
        return int(weight * counts.n_plus > counts.n_minus)
    return int(counts.n_plus > counts.n_minus)


def ranked_auc(groups, n_pos, n_neg):
    """
    Area under the ROC curve traced by ``groups`` taken in the given order, each a
    block of tied samples.
    """
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClass()
    area = 0
    above = 0
    for group in groups:
        group = _counts(group)
        area += group.n_minus * (2 * above + group.n_plus)
        above += group.n_plus
    return area / (2 * n_pos * n_neg)


def sort_by_ratio(leaves):
    leaves = [_counts(leaf) for leaf in leaves]
    return sorted((leaf for leaf in leaves if leaf.total > 0), key=lambda c: c.ratio, reverse=True)


def rocch_loss(leaves, n_pos, n_neg):
    return 1.0 - ranked_auc(sort_by_ratio(leaves), n_pos, n_neg)


def roc_curve(leaves, n_pos, n_neg):
    """ROC convex hull vertices ``[(FPR, TPR)]`` from (0, 0) to (1, 1)."""
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClass()
    points = [(0.0, 0.0)]
    fp = tp = 0
    for leaf in sort_by_ratio(leaves):
        fp += leaf.n_minus
        tp += leaf.n_plus
        points.append((fp / n_neg, tp / n_pos))
    return points


def partial_area(points, theta):
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        if x0 >= theta:
            break
        if x1 <= theta:
            area += (x1 - x0) * (y0 + y1) / 2.0
            continue
        # Segment crosses FPR = theta.
        y_cut = y0 + (y1 - y0) * (theta - x0) / (x1 - x0)
        area += (theta - x0) * (y0 + y_cut) / 2.0
        break
    return area


def pauc_loss(leaves, n_pos, n_neg, theta):
    """Shortfall of the hull's area on FPR in [0, theta] against a perfect ranker's area theta."""
    if not 0 < theta <= 1:
        raise BadParameters(f"theta must lie in (0, 1], got {theta}")
    return (theta - partial_area(roc_curve(leaves, n_pos, n_neg), theta)) / theta


def fscore_errors(leaves, weight=1.0):
    fp = fn = 0
    for leaf in leaves:
        leaf = _counts(leaf)
        if label_leaf(leaf, ObjectiveKind.F_SCORE, weight):
            fp += leaf.n_minus
        else:
            fn += leaf.n_plus
    return fp, fn


def fscore_tree_loss(leaves, n_pos, weight=1.0):
    leaves = list(leaves)
    if not leaves:
        raise BadParameters("a tree has at least one leaf")
    if n_pos == 0:
        raise DegenerateClass()
    fp, fn = fscore_errors(leaves, weight)
    return (fp + fn) / (2 * n_pos + fp - fn)


def leaf_set_loss(objective, leaves, n_pos, n_neg):
    """Loss of a leaf partition with every leaf labeled by the objective's own rule."""
    kind = objective.kind
    if kind is ObjectiveKind.AUC:
        return rocch_loss(leaves, n_pos, n_neg)
    if kind is ObjectiveKind.PARTIAL_AUC:
        return pauc_loss(leaves, n_pos, n_neg, objective.theta)
    if kind is ObjectiveKind.F_SCORE:
        return fscore_tree_loss(leaves, n_pos, objective.weight)
    fp = fn = 0
    for leaf in leaves:
        leaf = _counts(leaf)
        if label_leaf(leaf, kind, objective.weight, n_pos, n_neg):
            fp += leaf.n_minus
        else:
            fn += leaf.n_plus
    return monotone_loss(kind, fp, fn, n_pos, n_neg, objective.weight)


def class_weights(objective, n_pos, n_neg):
    """
    ``(w_pos, w_neg)`` such that an additive loss equals
    ``(w_pos * FN + w_neg * FP) / N`` on integer error counts.
    """
    N = n_pos + n_neg
    kind = objective.kind
    if kind is ObjectiveKind.ACCURACY:
        return 1.0, 1.0
    if kind is ObjectiveKind.BALANCED_ACCURACY:
        if n_pos == 0 or n_neg == 0:
            raise DegenerateClass()
        return N / (2.0 * n_pos), N / (2.0 * n_neg)
    if kind is ObjectiveKind.WEIGHTED_ACCURACY:
        scale = objective.weight * n_pos + n_neg
        return objective.weight * N / scale, N / scale
    raise BadParameters(f"{kind.value} is not additive over leaves")


@dataclass(frozen=True, eq=False)
class LossVectors:
    """Per-class loss of predicting 0 (``plus``) and 1 (``minus``), with prefix sums."""

    plus: np.ndarray
    minus: np.ndarray
    lowest: np.ndarray
    total: np.ndarray
    prefix_plus: np.ndarray
    prefix_minus: np.ndarray
    prefix_lowest: np.ndarray
    prefix_total: np.ndarray


def loss_vectors(ds, objective):
    key = ("loss", objective.kind, objective.weight)
    if key not in ds.cache:
        w_pos, w_neg = class_weights(objective, ds.n_pos, ds.n_neg)
        plus = w_pos * ds.z_plus
        minus = w_neg * ds.z_minus
        lowest = np.minimum(plus, minus)
        total = plus + minus
        ds.cache[key] = LossVectors(
            plus,
            minus,
            lowest,
            total,
            prefix_sums(plus),
            prefix_sums(minus),
            prefix_sums(lowest),
            prefix_sums(total),
        )
    return ds.cache[key]


def leaf_counts(tree, ds):
    """``[(leaf, LeafCounts)]`` for the training classes routed through ``tree``."""
    return [
        (leaf, LeafCounts(*ds.counts(s)))
        for leaf, s in route(tree, SupportSet.full(ds.U), ds.masks)
    ]


def evaluate_loss(tree, ds, objective):
    """
    Loss of ``tree`` on ``ds``. Additive objectives use the labels stored in the
    leaves; the other kinds derive them from the leaf counts.
    """
    routed = leaf_counts(tree, ds)
    if not objective.additive:
        return leaf_set_loss(objective, [c for _, c in routed if c.total > 0], ds.n_pos, ds.n_neg)
    fp = sum(c.n_minus for leaf, c in routed if leaf.label == 1)
    fn = sum(c.n_plus for leaf, c in routed if leaf.label == 0)
    return monotone_loss(objective.kind, fp, fn, ds.n_pos, ds.n_neg, objective.weight)


def evaluate_risk(tree, ds, objective):
    return evaluate_loss(tree, ds, objective) + objective.regularization * sum(1 for _ in iter_leaves(tree))


def label_for(counts, objective, n_pos, n_neg):
    """Leaf carrying the output the objective's model format expects."""
    counts = _counts(counts)
    if objective.kind.ranked:
        return Leaf(score=float(counts.ratio))
    return Leaf(prediction=label_leaf(counts, objective.kind, objective.weight, n_pos, n_neg))
