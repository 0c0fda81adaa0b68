import json
import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from .config import settings
from .errors import EmptyFeatureSet, NonBinaryLabel, ParseError, SchemaMismatch
from .support import BitPlanes, FeatureMasks, SupportSet, prefix_sums, selective_sum

logger = logging.getLogger(__name__)

LABEL_TOKENS = {
    "0": 0,
    "1": 1,
    "no": 0,
    "yes": 1,
    "false": 0,
    "true": 1,
}

MISSING_TOKENS = {"", "?", "na", "nan", "null"}

_LINE_REGEX = re.compile(r"line (\d+)")


class ColumnKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    BINARY = "binary"


class BinarizeMode(str, Enum):
    ALL_THRESHOLDS = "all_thresholds"
    BUCKETIZE = "bucketize"


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind


@dataclass(frozen=True, eq=False)
class RawDataset:
    """
    Feature columns as read from disk plus binary labels. Feature values are kept as
    stripped strings; continuous columns are parsed on demand.
    """

    columns: Tuple[Column, ...]
    frame: pd.DataFrame
    labels: np.ndarray
    label_name: str = "label"

    @property
    def N(self):
        return len(self.labels)

    def column(self, name):
        for column in self.columns:
            if column.name == name:
                return column
        raise KeyError(name)


def parse_label(value):
    token = str(value).strip().lower()
    if token not in LABEL_TOKENS:
        raise NonBinaryLabel(value)
    return LABEL_TOKENS[token]


def _numeric(series):
    values = pd.to_numeric(series, errors="coerce")
    if values.isna().any():
        return None
    return values.astype(float)


def infer_kind(series, categorical_cap, force_continuous=False):
    values = _numeric(series)
    if values is None:
        return ColumnKind.CATEGORICAL
    distinct = set(values.unique())
    if distinct <= {0.0, 1.0}:
        return ColumnKind.BINARY
    if force_continuous or len(distinct) > categorical_cap:
        return ColumnKind.CONTINUOUS
    return ColumnKind.CATEGORICAL


def load_csv(
    path,
    label_column=None,
    categorical_cap=None,
    kinds: Optional[Mapping[str, ColumnKind]] = None,
    force_continuous=False,
):
    """
    Reads a UTF-8 CSV with a header line. The label column defaults to the last one.
    Rows holding a missing value are dropped.
    """

    if categorical_cap is None:
        categorical_cap = settings.categorical_cap
    kinds = {name: ColumnKind(kind) for name, kind in (kinds or {}).items()}

    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"{path} holds no data") from e
    except pd.errors.ParserError as e:
        match = _LINE_REGEX.search(str(e))
        raise ParseError(str(e), int(match.group(1)) if match else None) from e
    except UnicodeDecodeError as e:
        raise ParseError(f"{path} is not valid UTF-8") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    frame = frame.apply(lambda col: col.str.strip())

    if label_column is None:
        label_column = frame.columns[-1]
    if label_column not in frame.columns:
        raise ParseError(f"label column {label_column!r} not found in header")

    missing = frame.apply(lambda col: col.str.lower().isin(MISSING_TOKENS)).any(axis=1)
    if missing.any():
        logger.warning("Dropping %d rows with missing values from %s", int(missing.sum()), path)
        frame = frame.loc[~missing].reset_index(drop=True)
    if len(frame) == 0:
        raise ParseError(f"{path} has no complete rows")

    labels = np.fromiter((parse_label(v) for v in frame[label_column]), dtype=np.int8, count=len(frame))
    features = frame.drop(columns=[label_column])

    columns = []
    for name in features.columns:
        kind = kinds.get(name) or infer_kind(features[name], categorical_cap, force_continuous)
        if kind is ColumnKind.BINARY:
            values = _numeric(features[name])
            if values is None or not set(values.unique()) <= {0.0, 1.0}:
                raise ParseError(f"column {name!r} declared binary holds other values")
            features[name] = values.astype(int).astype(str)
        elif kind is ColumnKind.CONTINUOUS and _numeric(features[name]) is None:
            raise ParseError(f"column {name!r} declared continuous holds non-numeric values")
        columns.append(Column(name, kind))

    logger.info(
        "Loaded %s: %d rows, %d feature columns, label %r",
        path,
        len(features),
        len(columns),
        label_column,
    )
    return RawDataset(tuple(columns), features.reset_index(drop=True), labels, label_column)


@dataclass(frozen=True)
class FeatureDescriptor:
    """
    One binary feature. Threshold features are 1 iff ``value <= threshold``;
    category features are 1 iff the value equals ``category``.
    """

    column: str
    threshold: Optional[float] = None
    category: Optional[str] = None
    aliases: Tuple["FeatureDescriptor", ...] = ()

    @property
    def name(self):
        if self.threshold is not None:
            return f"{self.column}<={self.threshold!r}"
        return f"{self.column}=={self.category}"

    @property
    def key(self):
        return (self.column, self.threshold, self.category)

    def evaluate(self, series):
        if self.threshold is not None:
            values = _numeric(series)
            if values is None:
                raise SchemaMismatch([self.column])
            return (values <= self.threshold).to_numpy()
        return (series.astype(str) == self.category).to_numpy()

    def as_dict(self):
        context = {"column": self.column}
        if self.threshold is not None:
            context["threshold"] = self.threshold
        else:
            context["category"] = self.category
        if self.aliases:
            context["aliases"] = [alias.as_dict() for alias in self.aliases]
        return context

    @classmethod
    def from_dict(cls, data):
        return cls(
            column=data["column"],
            threshold=data.get("threshold"),
            category=data.get("category"),
            aliases=tuple(cls.from_dict(a) for a in data.get("aliases", ())),
        )


@dataclass(frozen=True)
class BinarySchema:
    features: Tuple[FeatureDescriptor, ...]

    @property
    def M(self):
        return len(self.features)

    @property
    def columns(self):
        return sorted({f.column for f in self.features})

    def index(self, descriptor):
        key = descriptor.key if isinstance(descriptor, FeatureDescriptor) else descriptor
        for j, feature in enumerate(self.features):
            if feature.key == key or any(a.key == key for a in feature.aliases):
                return j
        raise KeyError(key)

    def threshold_groups(self):
        """Threshold features of each continuous column, in ascending threshold order."""
        groups: Dict[str, list] = {}
        for j, feature in enumerate(self.features):
            if feature.threshold is not None:
                groups.setdefault(feature.column, []).append(j)
        return [
            tuple(sorted(indices, key=lambda j: self.features[j].threshold))
            for indices in groups.values()
        ]

    def encode(self, frame):
        missing = {f.column for f in self.features} - set(frame.columns)
        if missing:
            raise SchemaMismatch(missing)
        if not self.features:
            return np.zeros((len(frame), 0), dtype=bool)
        return np.column_stack([f.evaluate(frame[f.column]) for f in self.features])

    def as_list(self):
        return [f.as_dict() for f in self.features]

    def to_json(self):
        return json.dumps(self.as_list(), indent=2)

    @classmethod
    def from_list(cls, data):
        return cls(tuple(FeatureDescriptor.from_dict(d) for d in data))

    @classmethod
    def from_json(cls, text):
        return cls.from_list(json.loads(text))


def _category_order(value):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def _thresholds(values, labels, mode):
    unique = np.unique(values)
    thresholds = []
    for a, b in zip(unique[:-1], unique[1:]):
        if mode is BinarizeMode.BUCKETIZE:
            # Both neighbouring groups pure and of one label: no split between them.
            neighbours = labels[(values == a) | (values == b)]
            if neighbours.min() == neighbours.max():
                continue
        thresholds.append(float((a + b) / 2.0))
    return thresholds


def binarize(raw, mode=BinarizeMode.ALL_THRESHOLDS):
    """
    Turns every column into binary features. Columns whose bits repeat an earlier
    feature are folded into that feature's aliases.
    """

    mode = BinarizeMode(mode)
    descriptors = []
    columns = []

    for column in raw.columns:
        series = raw.frame[column.name]
        if column.kind is ColumnKind.CONTINUOUS:
            values = _numeric(series).to_numpy()
            for t in _thresholds(values, raw.labels, mode):
                descriptors.append(FeatureDescriptor(column.name, threshold=t))
                columns.append(values <= t)
        elif column.kind is ColumnKind.BINARY:
            descriptors.append(FeatureDescriptor(column.name, category="1"))
            columns.append((series == "1").to_numpy())
        else:
            for value in sorted(series.unique(), key=_category_order):
                descriptors.append(FeatureDescriptor(column.name, category=value))
                columns.append((series == value).to_numpy())

    kept = []
    kept_columns = []
    first_seen = {}
    for descriptor, bits in zip(descriptors, columns):
        signature = np.packbits(bits).tobytes()
        if signature in first_seen:
            k = first_seen[signature]
            kept[k] = replace(kept[k], aliases=kept[k].aliases + (descriptor,))
            continue
        first_seen[signature] = len(kept)
        kept.append(descriptor)
        kept_columns.append(bits)

    if not kept:
        raise EmptyFeatureSet()

    logger.info(
        "Binarized %d columns into %d features (%d aliased, mode %s)",
        len(raw.columns),
        len(kept),
        len(descriptors) - len(kept),
        mode.value,
    )
    return BinarySchema(tuple(kept)), np.column_stack(kept_columns)


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    """
    Distinct binarized feature vectors (equivalence classes) with the fraction of all
    samples that are positive / negative in each, integer counts held as bit planes,
    and prefix sums.
    """

    Z: np.ndarray
    z_plus: np.ndarray
    z_minus: np.ndarray
    z_min: np.ndarray
    count_plus: np.ndarray
    count_minus: np.ndarray
    schema: BinarySchema
    classes: np.ndarray
    prefix_plus: np.ndarray = field(repr=False, default=None)
    prefix_minus: np.ndarray = field(repr=False, default=None)
    prefix_min: np.ndarray = field(repr=False, default=None)
    planes_plus: BitPlanes = field(repr=False, default=None)
    planes_minus: BitPlanes = field(repr=False, default=None)
    impure: int = field(repr=False, default=0)
    masks: FeatureMasks = field(repr=False, default=None)
    cache: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        derived = {
            "prefix_plus": prefix_sums(self.z_plus),
            "prefix_minus": prefix_sums(self.z_minus),
            "prefix_min": prefix_sums(self.z_min),
            "planes_plus": BitPlanes(self.count_plus),
            "planes_minus": BitPlanes(self.count_minus),
            "impure": SupportSet.from_mask((self.count_plus > 0) & (self.count_minus > 0)).bits,
            "masks": FeatureMasks(self.Z),
        }
        for name, value in derived.items():
            object.__setattr__(self, name, value)

    @property
    def U(self):
        return self.Z.shape[0]

    @property
    def M(self):
        return self.Z.shape[1]

    @cached_property
    def N(self):
        return int(self.count_plus.sum() + self.count_minus.sum())

    @cached_property
    def n_pos(self):
        return int(self.count_plus.sum())

    @cached_property
    def n_neg(self):
        return int(self.count_minus.sum())

    def full_support(self):
        return SupportSet.full(self.U)

    def counts(self, s):
        """Integer ``(positives, negatives)`` captured by support set ``s``."""
        return (
            self.planes_plus.sum(s),
            self.planes_minus.sum(s),
        )

    def masses(self, s):
        return (
            selective_sum(s, self.z_plus, self.prefix_plus),
            selective_sum(s, self.z_minus, self.prefix_minus),
        )


def compress(bits, labels, schema=None):
    bits = np.asarray(bits, dtype=bool)
    labels = np.asarray(labels).astype(np.int8)
    if bits.ndim != 2 or bits.shape[0] != labels.shape[0]:
        raise ValueError(f"bit matrix {bits.shape} does not match {labels.shape[0]} labels")
    if not set(np.unique(labels)) <= {0, 1}:
        raise NonBinaryLabel(sorted(set(np.unique(labels)) - {0, 1})[0])
    if schema is None:
        schema = BinarySchema(
            tuple(FeatureDescriptor(f"x{j}", category="1") for j in range(bits.shape[1]))
        )

    N = bits.shape[0]
    Z, inverse = np.unique(bits.astype(np.uint8), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    U = Z.shape[0]
    count_plus = np.bincount(inverse[labels == 1], minlength=U).astype(np.int64)
    count_minus = np.bincount(inverse[labels == 0], minlength=U).astype(np.int64)
    z_plus = count_plus / N
    z_minus = count_minus / N

    logger.info("Compressed %d samples into %d equivalence classes over %d features", N, U, bits.shape[1])
    return BinaryDataset(
        Z=Z.astype(bool),
        z_plus=z_plus,
        z_minus=z_minus,
        z_min=np.minimum(z_plus, z_minus),
        count_plus=count_plus,
        count_minus=count_minus,
        schema=schema,
        classes=inverse,
    )


def prepare(raw, mode=BinarizeMode.ALL_THRESHOLDS):
    schema, bits = binarize(raw, mode)
    return compress(bits, raw.labels, schema)
