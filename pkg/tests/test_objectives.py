import numpy as np
import pytest

from pysparsetree.errors import BadParameters, DegenerateClass
from pysparsetree.objectives import (
    LeafCounts,
    ObjectiveKind,
    ObjectiveSpec,
    class_weights,
    evaluate_loss,
    evaluate_risk,
    fscore_tree_loss,
    label_for,
    label_leaf,
    leaf_set_loss,
    loss_vectors,
    monotone_loss,
    pauc_loss,
    ranked_auc,
    roc_curve,
    rocch_loss,
)
from pysparsetree.tree import Leaf, Split


# --- Test ObjectiveSpec ---


def test_objective_short_names():
    assert ObjectiveSpec("acc", 0.1).kind is ObjectiveKind.ACCURACY
    assert ObjectiveSpec("f1", 0.1).kind is ObjectiveKind.F_SCORE
    assert ObjectiveSpec("pauc", 0.1, theta=0.5).kind is ObjectiveKind.PARTIAL_AUC
    assert ObjectiveSpec("balanced_accuracy", 0.1).additive
    assert not ObjectiveSpec("auc", 0.1).additive


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "acc", "regularization": -0.1},
        {"kind": "wacc", "regularization": 0.1, "weight": 0},
        {"kind": "pauc", "regularization": 0.1},
        {"kind": "pauc", "regularization": 0.1, "theta": 1.5},
        {"kind": "gini", "regularization": 0.1},
    ],
)
def test_objective_rejects_bad_parameters(kwargs):
    with pytest.raises(BadParameters):
        ObjectiveSpec(**kwargs)


def test_objective_as_dict():
    record = ObjectiveSpec("pauc", 0.05, theta=0.3).as_dict()

    assert record == {"kind": "pauc_ch", "regularization": 0.05, "weight": 1.0, "theta": 0.3}


# --- Test monotone losses ---


def test_accuracy_loss():
    assert monotone_loss("accuracy", 1, 2, 5, 5) == pytest.approx(0.3)


def test_balanced_accuracy_loss():
    assert monotone_loss("balanced_accuracy", 2, 0, 2, 4) == pytest.approx(0.25)


def test_weighted_accuracy_loss():
    assert monotone_loss("weighted_accuracy", 1, 1, 2, 4, weight=2.0) == pytest.approx(0.375)


def test_fscore_loss():
    assert monotone_loss("f_score", 1, 1, 4, 4) == pytest.approx(0.25)


def test_monotone_loss_rejects_rank_objectives():
    with pytest.raises(BadParameters):
        monotone_loss("auc_ch", 0, 0, 1, 1)


def test_class_weights_reproduce_monotone_losses():
    N, n_pos, n_neg = 6, 2, 4
    cases = [
        (ObjectiveSpec("bacc", 0.0), 2, 0),
        (ObjectiveSpec("wacc", 0.0, weight=2.0), 1, 1),
        (ObjectiveSpec("acc", 0.0), 3, 1),
    ]
    for objective, fp, fn in cases:
        w_pos, w_neg = class_weights(objective, n_pos, n_neg)
        expected = monotone_loss(objective.kind, fp, fn, n_pos, n_neg, objective.weight)
        assert (w_pos * fn + w_neg * fp) / N == pytest.approx(expected)


def test_class_weights_balanced_needs_both_classes():
    with pytest.raises(DegenerateClass):
        class_weights(ObjectiveSpec("bacc", 0.1), 0, 5)


# --- Test label_leaf ---


def test_label_ties_go_to_zero():
    assert label_leaf((2, 2), "accuracy") == 0
    assert label_leaf((3, 2), "accuracy") == 1
    assert label_leaf((1, 2), "balanced_accuracy", n_pos=2, n_neg=4) == 0
    assert label_leaf((2, 2), "balanced_accuracy", n_pos=2, n_neg=4) == 1
    assert label_leaf((1, 2), "weighted_accuracy", weight=2.0) == 0
    assert label_leaf((1, 1), "weighted_accuracy", weight=2.0) == 1


def test_balanced_label_needs_totals():
    with pytest.raises(BadParameters):
        label_leaf((1, 1), "balanced_accuracy")


def test_label_for_rank_objective_returns_score():
    leaf = label_for((3, 1), ObjectiveSpec("auc", 0.1), 4, 4)

    assert leaf.prediction is None
    assert leaf.score == pytest.approx(0.75)
    assert leaf.label == 1


# --- Test rank losses ---


def test_rocch_two_leaves():
    assert rocch_loss([(2, 1), (1, 2)], 3, 3) == pytest.approx(1 / 3)


def test_rocch_order_of_leaves_does_not_matter():
    assert rocch_loss([(1, 2), (2, 1)], 3, 3) == pytest.approx(1 / 3)


def test_rocch_single_leaf_is_half():
    assert rocch_loss([(1, 1)], 1, 1) == pytest.approx(0.5)


def test_rocch_perfect_ranking():
    assert rocch_loss([(3, 0), (0, 5)], 3, 5) == pytest.approx(0.0)


def test_ranked_auc_needs_both_classes():
    with pytest.raises(DegenerateClass):
        ranked_auc([(3, 0)], 3, 0)


def test_roc_curve_vertices():
    points = roc_curve([(1, 2), (2, 1)], 3, 3)

    assert points[0] == (0.0, 0.0)
    assert points[1] == pytest.approx((1 / 3, 2 / 3))
    assert points[2] == pytest.approx((1.0, 1.0))


def test_pauc_loss():
    assert pauc_loss([(1, 1), (1, 1)], 2, 2, 0.5) == pytest.approx(0.75)


def test_pauc_with_full_range_matches_rocch():
    leaves = [(4, 1), (2, 2), (1, 5), (3, 0)]

    assert pauc_loss(leaves, 10, 8, 1.0) == pytest.approx(rocch_loss(leaves, 10, 8))


def test_pauc_rejects_bad_theta():
    with pytest.raises(BadParameters):
        pauc_loss([(1, 1)], 1, 1, 0.0)


def test_fscore_tree_loss():
    assert fscore_tree_loss([(3, 1), (1, 3)], 4) == pytest.approx(0.25)


def test_fscore_tree_loss_needs_positives():
    with pytest.raises(DegenerateClass):
        fscore_tree_loss([(0, 3)], 0)


def test_collapsed_scores_match_balanced_accuracy():
    rng = np.random.default_rng(11)
    for _ in range(100):
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 20, 4))
        tp, tn = tp + 1, tn + 1
        n_pos, n_neg = tp + fn, fp + tn
        auc = ranked_auc([(tp, fp), (fn, tn)], n_pos, n_neg)
        balanced = monotone_loss("balanced_accuracy", fp, fn, n_pos, n_neg)
        assert 1.0 - auc == pytest.approx(balanced, abs=1e-10)


def test_splitting_a_leaf_never_lowers_the_hull():
    rng = np.random.default_rng(5)
    for _ in range(500):
        k = int(rng.integers(1, 5))
        leaves = [LeafCounts(int(rng.integers(0, 8)), int(rng.integers(0, 8))) for _ in range(k)]
        leaves[0] = LeafCounts(leaves[0].n_plus + 1, leaves[0].n_minus + 1)
        n_pos = sum(c.n_plus for c in leaves)
        n_neg = sum(c.n_minus for c in leaves)
        parent = leaves[0]
        a = int(rng.integers(0, parent.n_plus + 1))
        b = int(rng.integers(0, parent.n_minus + 1))
        refined = leaves[1:] + [LeafCounts(a, b), LeafCounts(parent.n_plus - a, parent.n_minus - b)]

        before = rocch_loss(leaves, n_pos, n_neg)
        after = rocch_loss(refined, n_pos, n_neg)
        assert after <= before + 1e-12


# --- Test leaf_set_loss ---


def test_leaf_set_loss_dispatch():
    leaves = [(3, 1), (1, 3)]

    assert leaf_set_loss(ObjectiveSpec("acc", 0.1), leaves, 4, 4) == pytest.approx(0.25)
    assert leaf_set_loss(ObjectiveSpec("auc", 0.1), leaves, 4, 4) == pytest.approx(rocch_loss(leaves, 4, 4))
    assert leaf_set_loss(ObjectiveSpec("f1", 0.1), leaves, 4, 4) == pytest.approx(0.25)
    assert leaf_set_loss(ObjectiveSpec("pauc", 0.1, theta=1.0), leaves, 4, 4) == pytest.approx(
        rocch_loss(leaves, 4, 4)
    )


# --- Test tree evaluation ---


def xor_tree():
    return Split(
        0,
        Split(1, Leaf(prediction=0), Leaf(prediction=1)),
        Split(1, Leaf(prediction=1), Leaf(prediction=0)),
    )


def test_evaluate_risk_on_xor(xor_dataset):
    objective = ObjectiveSpec("acc", 0.1)

    assert evaluate_loss(xor_tree(), xor_dataset, objective) == pytest.approx(0.0)
    assert evaluate_risk(xor_tree(), xor_dataset, objective) == pytest.approx(0.4)
    assert evaluate_risk(Leaf(prediction=1), xor_dataset, objective) == pytest.approx(0.6)


def test_evaluate_loss_rank_objective(xor_dataset):
    objective = ObjectiveSpec("auc", 0.1)

    assert evaluate_loss(Leaf(score=0.5), xor_dataset, objective) == pytest.approx(0.5)
    assert evaluate_loss(xor_tree(), xor_dataset, objective) == pytest.approx(0.0)


def test_loss_vectors_are_cached(xor_dataset):
    objective = ObjectiveSpec("bacc", 0.1)

    first = loss_vectors(xor_dataset, objective)

    assert loss_vectors(xor_dataset, objective) is first
    assert first.total.sum() == pytest.approx(1.0)
