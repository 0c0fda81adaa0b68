import numpy as np
import pytest

from pysparsetree.errors import FeatureOutOfRange
from pysparsetree.support import (
    BitPlanes,
    FeatureMasks,
    SupportSet,
    prefix_sums,
    selective_sum,
    split,
)


# --- Test SupportSet ---


def test_from_string_lists_class_zero_first():
    s = SupportSet.from_string("1011")

    assert list(s.indices()) == [0, 2, 3]
    assert str(s) == "1011"
    assert len(s) == 3
    assert 1 not in s
    assert 2 in s


def test_set_operations():
    a = SupportSet.from_string("1100")
    b = SupportSet.from_string("1010")

    assert str(a & b) == "1000"
    assert str(a | b) == "1110"
    assert str(a ^ b) == "0110"
    assert str(a - b) == "0100"
    assert (a & b).issubset(a)
    assert not a.issubset(b)


def test_empty_and_full():
    assert not SupportSet.empty(5)
    assert SupportSet.empty(5).is_empty()
    assert SupportSet.full(5).popcount() == 5
    assert str(SupportSet.full(3)) == "111"


def test_support_sets_are_hashable_and_ordered():
    a = SupportSet.from_string("0011")
    b = SupportSet.from_string("0011")
    c = SupportSet.from_string("1100")

    assert a == b
    assert len({a, b, c}) == 2
    assert sorted([c, a]) == sorted([a, c])


def test_runs():
    s = SupportSet.from_string("0111001101")

    assert list(s.runs()) == [(1, 4), (6, 8), (9, 10)]


# --- Test split ---


def test_split_sends_zeros_left_and_ones_right():
    Z = np.array([[0, 1], [1, 1], [1, 0], [0, 0]], dtype=bool)
    masks = FeatureMasks(Z)
    s = SupportSet.full(4)

    s_l, s_r = split(s, 0, masks)

    assert str(s_l) == "1001"
    assert str(s_r) == "0110"
    assert (s_l | s_r) == s
    assert not (s_l & s_r)


def test_split_restricted_support():
    Z = np.array([[0, 1], [1, 1], [1, 0], [0, 0]], dtype=bool)
    s = SupportSet.from_string("1100")

    s_l, s_r = split(s, 1, Z)

    assert s_l.is_empty()
    assert str(s_r) == "1100"


def test_split_rejects_unknown_feature():
    Z = np.zeros((3, 2), dtype=bool)

    with pytest.raises(FeatureOutOfRange):
        split(SupportSet.full(3), 2, FeatureMasks(Z))


def test_distinct_partitions_skips_complements():
    Z = np.array([[1, 0, 1], [0, 1, 1], [1, 0, 0]], dtype=bool)

    assert FeatureMasks(Z).distinct_partitions() == (0, 2)


# --- Test selective_sum ---


def test_prefix_sums_has_leading_zero():
    assert prefix_sums([1, 2, 3]).tolist() == [0, 1, 3, 6]


def test_selective_sum_matches_direct_sum():
    rng = np.random.default_rng(7)
    values = rng.random(70)
    prefix = prefix_sums(values)
    for _ in range(25):
        mask = rng.random(70) < 0.4
        s = SupportSet.from_mask(mask)
        assert selective_sum(s, values, prefix) == pytest.approx(values[mask].sum(), abs=1e-12)


def test_selective_sum_of_integers_stays_exact():
    values = np.array([3, 0, 5, 7], dtype=np.int64)

    assert selective_sum(SupportSet.from_string("1011"), values) == 15


def test_selective_sum_empty_support_is_zero():
    assert selective_sum(SupportSet.empty(4), np.ones(4)) == 0


def test_selective_sum_rejects_mismatched_prefix():
    with pytest.raises(ValueError):
        selective_sum(SupportSet.full(3), np.ones(4), prefix_sums(np.ones(4)))


# --- Test BitPlanes ---


def test_bit_planes_match_direct_sum():
    rng = np.random.default_rng(11)
    values = rng.integers(0, 300, size=90)
    planes = BitPlanes(values)
    for _ in range(25):
        mask = rng.random(90) < 0.5
        assert planes.sum(SupportSet.from_mask(mask)) == int(values[mask].sum())


def test_bit_planes_accept_raw_bits():
    planes = BitPlanes([4, 0, 1])

    assert planes.sum(0b101) == 5
    assert planes.sum(SupportSet.empty(3)) == 0


def test_bit_planes_of_zeros():
    assert BitPlanes([0, 0]).planes == ()
    assert BitPlanes([]).sum(0) == 0


def test_bit_planes_reject_negative_weights():
    with pytest.raises(ValueError):
        BitPlanes([1, -2])
