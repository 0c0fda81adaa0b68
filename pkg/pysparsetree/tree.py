"""
Binary decision trees over the binarized features.

``Split.left`` handles samples whose feature is 0 and ``Split.right`` those whose
feature is 1, matching :func:`pysparsetree.support.split`.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .support import split


@dataclass(frozen=True)
class Leaf:
    prediction: Optional[int] = None
    score: Optional[float] = None

    @property
    def label(self):
        if self.prediction is not None:
            return self.prediction
        return int(self.score is not None and self.score > 0.5)

    @property
    def output(self):
        """Value used to rank samples: the score when present, else the label."""
        return self.score if self.score is not None else float(self.label)


@dataclass(frozen=True)
class Split:
    feature: int
    left: "Tree"
    right: "Tree"


Tree = Union[Leaf, Split]


def leaf_count(tree):
    if isinstance(tree, Leaf):
        return 1
    return leaf_count(tree.left) + leaf_count(tree.right)


def depth(tree):
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(depth(tree.left), depth(tree.right))


def iter_leaves(tree):
    if isinstance(tree, Leaf):
        yield tree
        return
    yield from iter_leaves(tree.left)
    yield from iter_leaves(tree.right)


def paths_are_distinct(tree, used=frozenset()):
    if isinstance(tree, Leaf):
        return True
    if tree.feature in used:
        return False
    used = used | {tree.feature}
    return paths_are_distinct(tree.left, used) and paths_are_distinct(tree.right, used)


def route(tree, s, masks):
    """Returns ``[(leaf, support)]`` in left-to-right order for the classes of ``s``."""
    if isinstance(tree, Leaf):
        return [(tree, s)]
    s_l, s_r = split(s, tree.feature, masks)
    return route(tree.left, s_l, masks) + route(tree.right, s_r, masks)


def find_leaf(tree, row):
    while isinstance(tree, Split):
        tree = tree.right if row[tree.feature] else tree.left
    return tree


def predict(tree, bits):
    bits = np.atleast_2d(np.asarray(bits, dtype=bool))
    return np.array([find_leaf(tree, row).label for row in bits], dtype=np.int8)


def outputs(tree, bits):
    bits = np.atleast_2d(np.asarray(bits, dtype=bool))
    return np.array([find_leaf(tree, row).output for row in bits], dtype=float)


def leaf_index(tree, bits):
    """Left-to-right position of the leaf each row of ``bits`` lands in."""
    bits = np.atleast_2d(np.asarray(bits, dtype=bool))
    index = np.zeros(len(bits), dtype=np.int64)

    def walk(node, rows, offset):
        if isinstance(node, Leaf):
            index[rows] = offset
            return offset + 1
        right = bits[rows, node.feature]
        offset = walk(node.left, rows[~right], offset)
        return walk(node.right, rows[right], offset)

    walk(tree, np.arange(len(bits)), 0)
    return index


def tree_from_leaves(leaves):
    """
    Builds a tree from a leaf set. Each entry is ``(path, leaf)`` where ``path`` is
    the ordered conjunction ``((feature, value), ...)`` leading to the leaf.
    """

    leaves = list(leaves)
    if len(leaves) == 1 and not leaves[0][0]:
        return leaves[0][1]
    features = {path[0][0] for path, _ in leaves if path}
    if len(features) != 1 or any(not path for path, _ in leaves):
        raise ValueError("leaf paths do not form a tree")
    (feature,) = features
    branches = {0: [], 1: []}
    for path, leaf in leaves:
        branches[int(path[0][1])].append((path[1:], leaf))
    if not branches[0] or not branches[1]:
        raise ValueError(f"split on feature {feature} has an empty side")
    return Split(feature, tree_from_leaves(branches[0]), tree_from_leaves(branches[1]))


def structure_key(tree):
    """Orders trees by shape and features for deterministic tie-breaking."""
    if isinstance(tree, Leaf):
        return ()
    return (tree.feature, structure_key(tree.left), structure_key(tree.right))


def as_dict(tree, schema=None):
    if isinstance(tree, Leaf):
        if tree.score is not None and tree.prediction is None:
            return {"score": tree.score}
        return {"prediction": tree.label}
    feature = schema.features[tree.feature].as_dict() if schema is not None else tree.feature
    if isinstance(feature, dict):
        feature.pop("aliases", None)
    return {
        "feature": feature,
        "left": as_dict(tree.left, schema),
        "right": as_dict(tree.right, schema),
    }
