import numpy as np
import pytest

from pysparsetree.config import BoundSwitches, SearchLimits
from pysparsetree.errors import BadParameters, DegenerateClass, SearchTimeout
from pysparsetree.ingest import compress
from pysparsetree.objectives import LeafCounts, ObjectiveSpec, evaluate_risk
from pysparsetree.oracle import enumerate_optimal
from pysparsetree.ranksearch import (
    LeafSlot,
    RankSearch,
    canonical_key,
    label_rank_tree,
    optimize_rank,
    roc_points,
)
from pysparsetree.support import SupportSet
from pysparsetree.tree import Leaf, Split, iter_leaves

from .instances import random_bits, random_instance

RANKED = [
    ObjectiveSpec("auc", 0.05),
    ObjectiveSpec("auc", 0.2),
    ObjectiveSpec("pauc", 0.05, theta=0.5),
    ObjectiveSpec("pauc", 0.2, theta=0.5),
    ObjectiveSpec("f1", 0.05),
    ObjectiveSpec("f1", 0.2),
]

RANK_SWITCHES = ["equivalent_points", "lookahead", "leaf_cap", "rank_incremental", "permutation"]


def objective_id(objective):
    return f"{objective.kind.value}-{objective.regularization}"


# --- Test optimize_rank on known instances ---


def test_auc_on_xor(xor_dataset):
    result = optimize_rank(xor_dataset, ObjectiveSpec("auc", 0.1))

    assert result.risk == pytest.approx(0.4)
    assert result.loss == pytest.approx(0.0)
    assert result.leaves == 4
    assert result.gap == 0.0
    assert result.engine == "ranksearch"
    assert sorted(leaf.score for leaf in iter_leaves(result.tree)) == [0.0, 0.0, 1.0, 1.0]


def test_auc_on_xor_with_large_penalty(xor_dataset):
    result = optimize_rank(xor_dataset, ObjectiveSpec("auc", 0.3))

    assert isinstance(result.tree, Leaf)
    assert result.risk == pytest.approx(0.8)


def test_fscore_on_xor(xor_dataset):
    result = optimize_rank(xor_dataset, ObjectiveSpec("f1", 0.1))

    assert result.risk == pytest.approx(0.4)
    assert sorted(leaf.prediction for leaf in iter_leaves(result.tree)) == [0, 0, 1, 1]


def test_result_tree_reproduces_risk():
    for seed in range(8):
        ds = random_instance(seed, n_features=3)
        for objective in RANKED:
            result = optimize_rank(ds, objective)
            assert evaluate_risk(result.tree, ds, objective) == pytest.approx(result.risk, abs=1e-9)


def test_rejects_additive_objectives(xor_dataset):
    with pytest.raises(BadParameters):
        optimize_rank(xor_dataset, ObjectiveSpec("acc", 0.1))


def test_rejects_single_class_data():
    ds = compress([[0], [1]], [1, 1])

    with pytest.raises(DegenerateClass):
        optimize_rank(ds, ObjectiveSpec("auc", 0.1))


# --- Test agreement with exhaustive search ---


@pytest.mark.parametrize("objective", RANKED, ids=objective_id)
def test_matches_oracle(objective):
    for seed in range(12):
        ds = random_instance(seed, n_features=3)
        result = optimize_rank(ds, objective)
        _, expected = enumerate_optimal(ds, objective, ds.M)
        assert result.risk == pytest.approx(expected, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("objective", RANKED, ids=objective_id)
def test_matches_oracle_full_suite(objective):
    for seed in range(200):
        ds = random_instance(2000 + seed, n_features=3)
        result = optimize_rank(ds, objective)
        _, expected = enumerate_optimal(ds, objective, ds.M)
        assert result.risk == pytest.approx(expected, abs=1e-9)


# --- Test bound soundness ---


@pytest.mark.parametrize("switch", RANK_SWITCHES)
def test_disabling_a_bound_keeps_the_optimum(switch):
    for seed in range(6):
        ds = random_instance(seed, n_features=3)
        for objective in (ObjectiveSpec("auc", 0.05), ObjectiveSpec("f1", 0.05)):
            full = optimize_rank(ds, objective)
            reduced = optimize_rank(ds, objective, switches=BoundSwitches().without(switch))
            assert reduced.risk == pytest.approx(full.risk, abs=1e-9)
            assert reduced.stats.nodes >= 1


@pytest.mark.slow
@pytest.mark.parametrize("switch", RANK_SWITCHES)
def test_disabling_a_bound_keeps_the_optimum_full_suite(switch):
    objectives = (ObjectiveSpec("auc", 0.05), ObjectiveSpec("pauc", 0.05, theta=0.5), ObjectiveSpec("f1", 0.05))
    for seed in range(50):
        ds = random_instance(300 + seed, n_features=3)
        for objective in objectives:
            full = optimize_rank(ds, objective)
            reduced = optimize_rank(ds, objective, switches=BoundSwitches().without(switch))
            assert reduced.risk == pytest.approx(full.risk, abs=1e-9)


# --- Test time limit ---


def test_time_limit_returns_incumbent(xor_dataset):
    with pytest.raises(SearchTimeout) as excinfo:
        optimize_rank(xor_dataset, ObjectiveSpec("auc", 0.1), SearchLimits(time_limit=0.0))

    result = excinfo.value.result
    assert result.timed_out
    assert result.risk == pytest.approx(0.6)
    assert result.gap == pytest.approx(0.5)


# --- Test helpers ---


def test_canonical_key_ignores_leaf_order():
    a = LeafSlot(((0, 0),), SupportSet.from_string("1100"), LeafCounts(1, 1))
    b = LeafSlot(((0, 1),), SupportSet.from_string("0011"), LeafCounts(2, 0))

    assert canonical_key((a,), (b,)) == canonical_key((a,), (b,))
    assert canonical_key((), (a, b)) == canonical_key((), (b, a))
    assert canonical_key((a,), (b,)) != canonical_key((b,), (a,))


def test_bound_is_a_lower_bound_on_the_leaf(xor_dataset):
    search = RankSearch(xor_dataset, ObjectiveSpec("auc", 0.1))
    root = LeafSlot((), xor_dataset.full_support(), LeafCounts(2, 2))

    assert search.bound((), (root,)) == pytest.approx(0.1)
    assert search.bound((root,), ()) == pytest.approx(0.6)


def test_label_rank_tree_scores_leaves(xor_dataset):
    tree = Split(0, Leaf(), Leaf())

    labeled = label_rank_tree(tree, xor_dataset, ObjectiveSpec("auc", 0.1))

    assert labeled.left.score == pytest.approx(0.5)
    assert labeled.right.score == pytest.approx(0.5)


def test_roc_points_end_at_one():
    bits, labels = random_bits(4, n_features=3)
    ds = compress(bits, labels)
    result = optimize_rank(ds, ObjectiveSpec("auc", 0.05))

    points = roc_points(result.tree, ds)

    assert points[0] == (0.0, 0.0)
    assert points[-1] == pytest.approx((1.0, 1.0))
    assert all(x0 <= x1 and y0 <= y1 for (x0, y0), (x1, y1) in zip(points, points[1:]))


def random_tree(rng, M, depth=0, used=frozenset()):
    free = [j for j in range(M) if j not in used]
    if not free or depth == 3 or rng.random() < 0.3:
        return Leaf(prediction=0)
    j = int(rng.choice(free))
    return Split(j, random_tree(rng, M, depth + 1, used | {j}), random_tree(rng, M, depth + 1, used | {j}))


def test_roc_hull_is_concave_for_random_trees():
    rng = np.random.default_rng(3)
    datasets = [random_instance(seed) for seed in range(50)]
    for trial in range(1000):
        ds = datasets[trial % len(datasets)]
        points = np.array(roc_points(random_tree(rng, ds.M), ds))

        steps = np.diff(points, axis=0)
        # Consecutive segments only ever turn clockwise.
        turns = steps[:-1, 0] * steps[1:, 1] - steps[:-1, 1] * steps[1:, 0]
        assert (steps >= -1e-12).all()
        assert (turns <= 1e-12).all()
        assert points[-1] == pytest.approx([1.0, 1.0])
