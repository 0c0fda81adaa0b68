import numpy as np
import pytest

from pysparsetree.ingest import BinarySchema, FeatureDescriptor
from pysparsetree.support import FeatureMasks, SupportSet
from pysparsetree.tree import (
    Leaf,
    Split,
    as_dict,
    depth,
    iter_leaves,
    leaf_count,
    outputs,
    paths_are_distinct,
    predict,
    route,
    structure_key,
    tree_from_leaves,
)


def sample_tree():
    return Split(0, Leaf(prediction=0), Split(1, Leaf(prediction=1), Leaf(prediction=0)))


# --- Test shape helpers ---


def test_leaf_count_and_depth():
    tree = sample_tree()

    assert leaf_count(tree) == 3
    assert depth(tree) == 2
    assert depth(Leaf(prediction=1)) == 0
    assert [leaf.label for leaf in iter_leaves(tree)] == [0, 1, 0]


def test_paths_are_distinct():
    assert paths_are_distinct(sample_tree())
    assert not paths_are_distinct(Split(0, Leaf(), Split(0, Leaf(), Leaf())))


def test_structure_key_orders_leaf_first():
    assert structure_key(Leaf()) < structure_key(sample_tree())


# --- Test prediction ---


def test_predict_routes_ones_right():
    bits = np.array([[0, 0], [1, 0], [1, 1]], dtype=bool)

    assert predict(sample_tree(), bits).tolist() == [0, 1, 0]


def test_outputs_prefer_scores():
    tree = Split(0, Leaf(score=0.25), Leaf(score=0.8))

    assert outputs(tree, [[0], [1]]).tolist() == [0.25, 0.8]
    assert predict(tree, [[0], [1]]).tolist() == [0, 1]


def test_route_partitions_support():
    Z = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=bool)
    routed = route(sample_tree(), SupportSet.full(4), FeatureMasks(Z))

    assert [str(s) for _, s in routed] == ["1001", "0100", "0010"]


# --- Test tree_from_leaves ---


def test_tree_from_leaves_rebuilds_tree():
    leaves = [
        (((0, 0),), Leaf(prediction=0)),
        (((0, 1), (1, 0)), Leaf(prediction=1)),
        (((0, 1), (1, 1)), Leaf(prediction=0)),
    ]

    assert tree_from_leaves(leaves) == sample_tree()


def test_tree_from_single_leaf():
    assert tree_from_leaves([((), Leaf(prediction=1))]) == Leaf(prediction=1)


def test_tree_from_leaves_rejects_inconsistent_paths():
    with pytest.raises(ValueError):
        tree_from_leaves([(((0, 0),), Leaf()), (((1, 1),), Leaf())])


# --- Test as_dict ---


def test_as_dict_with_schema():
    schema = BinarySchema(
        (
            FeatureDescriptor("age", threshold=30.5, aliases=(FeatureDescriptor("years", threshold=30.5),)),
            FeatureDescriptor("color", category="red"),
        )
    )

    context = as_dict(sample_tree(), schema)

    assert context["feature"] == {"column": "age", "threshold": 30.5}
    assert context["left"] == {"prediction": 0}
    assert context["right"]["feature"] == {"column": "color", "category": "red"}


def test_as_dict_score_leaf():
    assert as_dict(Leaf(score=0.5)) == {"score": 0.5}
    assert as_dict(Split(3, Leaf(prediction=0), Leaf(prediction=1)))["feature"] == 3
