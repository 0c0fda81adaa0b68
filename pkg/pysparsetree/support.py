"""
Support sets: fixed-width bit vectors over the equivalence classes of a data set.

Bit ``u`` of a support set is on iff equivalence class ``u`` is captured. The
string form lists class 0 first, so ``SupportSet.from_string("101")`` holds
classes 0 and 2.
"""

from dataclasses import dataclass
from functools import total_ordering

import numpy as np

from .errors import FeatureOutOfRange


@total_ordering
@dataclass(frozen=True)
class SupportSet:
    bits: int
    width: int

    @classmethod
    def full(cls, width):
        return cls((1 << width) - 1, width)

    @classmethod
    def empty(cls, width):
        return cls(0, width)

    @classmethod
    def from_indices(cls, indices, width):
        bits = 0
        for u in indices:
            bits |= 1 << int(u)
        return cls(bits, width)

    @classmethod
    def from_string(cls, text):
        return cls.from_indices((u for u, c in enumerate(text) if c == "1"), len(text))

    @classmethod
    def from_mask(cls, mask):
        """Builds a support set from a boolean vector of length U."""
        return cls.from_indices(np.flatnonzero(np.asarray(mask, dtype=bool)), len(mask))

    def __str__(self):
        return "".join("1" if (self.bits >> u) & 1 else "0" for u in range(self.width))

    def __repr__(self):
        return f"<SupportSet {self}>"

    def __len__(self):
        return self.popcount()

    def __bool__(self):
        return self.bits != 0

    def __contains__(self, u):
        return bool((self.bits >> u) & 1)

    def __and__(self, other):
        return SupportSet(self.bits & _bits(other), self.width)

    def __or__(self, other):
        return SupportSet(self.bits | _bits(other), self.width)

    def __xor__(self, other):
        return SupportSet(self.bits ^ _bits(other), self.width)

    def __sub__(self, other):
        return SupportSet(self.bits & ~_bits(other), self.width)

    def __lt__(self, other):
        return self.to_bytes() < other.to_bytes()

    def popcount(self):
        return self.bits.bit_count()

    def is_empty(self):
        return self.bits == 0

    def issubset(self, other):
        return self.bits & ~other.bits == 0

    def to_bytes(self):
        return self.bits.to_bytes((self.width + 7) // 8, "big")

    def indices(self):
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def runs(self):
        """Yields ``(start, stop)`` for every maximal run of set bits, stop exclusive."""
        bits = self.bits
        offset = 0
        while bits:
            skip = (bits & -bits).bit_length() - 1
            bits >>= skip
            offset += skip
            # Trailing ones of ``bits`` form the current run.
            length = (bits ^ (bits + 1)).bit_length() - 1
            yield offset, offset + length
            bits >>= length
            offset += length


def _bits(value):
    return value.bits if isinstance(value, SupportSet) else int(value)


class FeatureMasks:
    """
    Per-feature column masks over the equivalence classes, built once so that a
    split is two AND operations.
    """

    def __init__(self, Z):
        Z = np.asarray(Z, dtype=bool)
        self.width, self.count = Z.shape
        self.positive = tuple(SupportSet.from_mask(Z[:, j]).bits for j in range(self.count))
        full = (1 << self.width) - 1
        self.negative = tuple(full ^ mask for mask in self.positive)
        self._partitions = None

    def check(self, j):
        if not 0 <= j < self.count:
            raise FeatureOutOfRange(j, self.count)

    def distinct_partitions(self):
        """
        Feature indices with complements removed: a feature whose mask negates an
        earlier feature's mask induces the same two children with sides swapped.
        """
        if self._partitions is None:
            seen = set()
            keep = []
            for j, mask in enumerate(self.positive):
                if mask in seen or self.negative[j] in seen:
                    continue
                seen.add(mask)
                keep.append(j)
            self._partitions = tuple(keep)
        return self._partitions


def split(s, j, masks):
    """Returns ``(s_l, s_r)``: classes of ``s`` where feature ``j`` is 0, and where it is 1."""
    if not isinstance(masks, FeatureMasks):
        masks = FeatureMasks(masks)
    masks.check(j)
    return (
        SupportSet(s.bits & masks.negative[j], s.width),
        SupportSet(s.bits & masks.positive[j], s.width),
    )


class BitPlanes:
    """
    Nonnegative integer weights per class stored as bit planes, so the total weight
    of a support set is one popcount per plane instead of a pass over its classes.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=np.int64)
        if values.size and values.min() < 0:
            raise ValueError("bit planes hold nonnegative integers only")
        self.width = len(values)
        top = int(values.max()).bit_length() if values.size else 0
        self.planes = tuple(
            SupportSet.from_mask((values >> b) & 1).bits for b in range(top)
        )

    def sum(self, s):
        bits = _bits(s)
        return sum((bits & plane).bit_count() << b for b, plane in enumerate(self.planes))


def prefix_sums(values):
    """Cumulative sums with a leading zero, so ``c[b] - c[a]`` sums ``values[a:b]``."""
    values = np.asarray(values)
    return np.concatenate(([values.dtype.type(0)], np.cumsum(values)))


def selective_sum(s, values, prefix=None):
    """
    Sums ``values[u]`` over the classes in ``s`` with one range query per run of
    contiguous set bits.
    """
    if prefix is None:
        prefix = prefix_sums(values)
    if len(prefix) != s.width + 1:
        raise ValueError(f"prefix vector of length {len(prefix)} does not fit width {s.width}")
    total = prefix[0] - prefix[0]
    for start, stop in s.runs():
        total += prefix[stop] - prefix[start]
    return total.item() if hasattr(total, "item") else total
