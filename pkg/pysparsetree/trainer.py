import logging
import os
import time

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, balanced_accuracy_score, f1_score, roc_auc_score

from . import __version__, dpb
from .config import BoundSwitches, SearchLimits, settings
from .document import build_document
from .errors import SearchTimeout
from .ingest import BinarizeMode, RawDataset, binarize, compress, load_csv
from .objectives import ObjectiveSpec
from .ranksearch import optimize_rank, roc_points
from .tree import as_dict, depth, leaf_index, predict

logger = logging.getLogger(__name__)

DEMO_DATA = os.path.join(os.path.dirname(__file__), "data", "bucketize_demo.csv")


def calc_total_time(start_time):
    return time.time() - start_time


def default_switches():
    return BoundSwitches(
        similar_support=settings.similar_support,
        subset_bound=settings.subset_bound,
    )


def search(ds, objective, limits=None, switches=None):
    """Routes additive objectives to the dynamic-programming engine and the rest to the leaf-set search."""
    switches = switches or default_switches()
    try:
        if objective.additive:
            return dpb.optimize(ds, objective, limits, switches)
        return optimize_rank(ds, objective, limits, switches)
    except SearchTimeout as e:
        logger.warning("%s; returning the best tree found", e)
        return e.result


def train(
    data,
    objective,
    label=None,
    bucketize=False,
    limits=None,
    switches=None,
    kinds=None,
    categorical_cap=None,
    force_continuous=False,
):
    """
    Loads ``data`` (a CSV path or a :class:`RawDataset`), binarizes it and returns
    the optimal tree together with its model document and a run report.
    """

    start_time = time.time()
    if not isinstance(objective, ObjectiveSpec):
        objective = ObjectiveSpec(**objective)
    limits = limits or SearchLimits(time_limit=settings.time_limit, workers=settings.threads)

    if isinstance(data, RawDataset):
        raw, source = data, None
    else:
        raw = load_csv(data, label, categorical_cap, kinds, force_continuous)
        source = str(data)

    mode = BinarizeMode.BUCKETIZE if bucketize else BinarizeMode.ALL_THRESHOLDS
    schema, bits = binarize(raw, mode)
    ds = compress(bits, raw.labels, schema)
    result = search(ds, objective, limits, switches)

    accuracy = float(accuracy_score(raw.labels, predict(result.tree, bits)))

    metadata = {
        "data": source,
        "label": raw.label_name,
        "rows": raw.N,
        "positives": ds.n_pos,
        "negatives": ds.n_neg,
        "classes": ds.U,
        "features": ds.M,
        "bucketize": bucketize,
        "engine": result.engine,
        "nodes": result.stats.nodes,
        "iterations": result.stats.iterations,
        "seconds": result.stats.seconds,
        "timed_out": result.timed_out,
        "accuracy": accuracy,
        "version": __version__,
    }
    document = build_document(result, schema, objective, metadata)

    report = {
        "objective": objective.kind.value,
        "regularization": objective.regularization,
        "risk": result.risk,
        "loss": result.loss,
        "gap": result.gap,
        "leaves": result.leaves,
        "depth": depth(result.tree),
        "accuracy": accuracy,
        "engine": result.engine,
        "nodes": result.stats.nodes,
        "iterations": result.stats.iterations,
        "timed_out": result.timed_out,
        "tree": as_dict(result.tree, schema),
        "total_time": calc_total_time(start_time),
    }

    return {
        "model": document,
        "report": report,
        "result": result,
        "dataset": ds,
    }


def hull_scores(labels, leaves):
    """
    Positive rate of each row's leaf on the rows being scored. Ranking rows by it
    walks the leaves in the order that traces the ROC convex hull.
    """
    frame = pd.DataFrame({"leaf": leaves, "label": labels})
    return frame.groupby("leaf")["label"].transform("mean").to_numpy(dtype=float)


def classification_metrics(labels, predictions, scores):
    labels = np.asarray(labels).astype(int)
    predictions = np.asarray(predictions).astype(int)
    metrics = {
        "rows": int(len(labels)),
        "accuracy": float(accuracy_score(labels, predictions)),
        "balanced_accuracy": None,
        "f1": float(f1_score(labels, predictions, zero_division=0)),
        "auc": None,
    }
    # Rank metrics need both classes.
    if len(np.unique(labels)) == 2:
        metrics["balanced_accuracy"] = float(balanced_accuracy_score(labels, predictions))
        metrics["auc"] = float(roc_auc_score(labels, scores))
    return metrics


def score(document, data, label=None):
    """Applies a model document to labeled data and reports its metrics."""
    raw = data if isinstance(data, RawDataset) else load_csv(data, label)
    schema = document.to_schema()
    tree = document.to_tree()
    bits = schema.encode(raw.frame)
    scores = hull_scores(raw.labels, leaf_index(tree, bits))
    metrics = classification_metrics(raw.labels, predict(tree, bits), scores)
    logger.info("Scored %d rows: accuracy %.4f", metrics["rows"], metrics["accuracy"])
    return metrics


def roc_table(document, data, label=None):
    """Vertices of the model's ROC convex hull on labeled data, one row per vertex."""
    raw = data if isinstance(data, RawDataset) else load_csv(data, label)
    schema = document.to_schema()
    ds = compress(schema.encode(raw.frame), raw.labels, schema)
    return pd.DataFrame(roc_points(document.to_tree(), ds), columns=["fpr", "tpr"])


def bucketize_demo(data=None, regularization=0.15, label=None, limits=None):
    """
    Trains the accuracy objective optimally with every threshold and with
    bucketized thresholds, and compares the two optimal accuracies.
    """

    start_time = time.time()
    raw = load_csv(data or DEMO_DATA, label, force_continuous=True)
    objective = ObjectiveSpec("accuracy", regularization)
    runs = {
        "all_thresholds": train(raw, objective, limits=limits),
        "bucketized": train(raw, objective, bucketize=True, limits=limits),
    }
    output = {"regularization": regularization, "rows": raw.N}
    for name, run in runs.items():
        output[name] = {
            "accuracy": run["report"]["accuracy"],
            "risk": run["report"]["risk"],
            "leaves": run["report"]["leaves"],
            "features": run["dataset"].M,
            "gap": run["report"]["gap"],
        }
    output["difference"] = output["all_thresholds"]["accuracy"] - output["bucketized"]["accuracy"]
    output["total_time"] = calc_total_time(start_time)
    return output
