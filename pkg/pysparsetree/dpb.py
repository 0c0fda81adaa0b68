"""
Dynamic programming with bounds for objectives that are additive over leaves.

Every subproblem is identified by the support set of the samples it must classify.
Subproblems live in a dependency graph and carry an interval ``[lb, ub]`` on their
optimal risk. Workers pull subproblems from a priority queue, tighten their bounds
from their children and signal parents whenever an interval shrinks. The search
stops when the root interval closes or the time limit expires.
"""

import heapq
import itertools
import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import List

from .bounds import (
    EPSILON,
    equivalent_points_lb,
    fails_bounds,
    incremental_similar_support_gap,
    leaf_support_prune,
)
from .config import BoundSwitches, SearchLimits
from .errors import BadParameters, MissingChild, SearchTimeout
from .objectives import LeafCounts, class_weights, evaluate_risk, label_leaf
from .support import split
from .tree import Leaf, Split, leaf_count

logger = logging.getLogger(__name__)

EXPLORE = 0
URGENT = 1


@dataclass
class SearchStats:
    nodes: int = 0
    iterations: int = 0
    split_requests: int = 0
    seconds: float = 0.0

    def as_dict(self):
        return {
            "nodes": self.nodes,
            "iterations": self.iterations,
            "split_requests": self.split_requests,
            "seconds": self.seconds,
        }


@dataclass
class OptimizationResult:
    tree: object
    risk: float
    loss: float
    lower_bound: float
    gap: float
    engine: str
    stats: SearchStats = field(default_factory=SearchStats)
    trace: List[dict] = field(default_factory=list)
    timed_out: bool = False

    @property
    def leaves(self):
        return leaf_count(self.tree)


class ProblemNode:
    """Bounds on the optimal risk of the subproblem over ``support``."""

    def __init__(self, support, lb, ub, leaf_risk, prediction, record_history=False):
        self.support = support
        self.lb = lb
        self.ub = ub
        self.leaf_risk = leaf_risk
        self.prediction = prediction
        self.parents = set()
        self.explored = False
        # Per threshold group: [(feature, left, right or None, moved mass)], set on first expansion.
        self.children = None
        # Largest risk at which this subproblem can still matter to the root.
        self.scope = float("-inf")
        self.history = [(lb, ub)] if record_history else None
        self._lock = threading.Lock()

    def __repr__(self):
        return f"<ProblemNode {self.support} [{self.lb:.6g}, {self.ub:.6g}]>"

    @property
    def resolved(self):
        return self.ub - self.lb <= EPSILON

    def tighten(self, lb, ub):
        """Raises ``lb`` and lowers ``ub``; never loosens. Returns True on change."""
        with self._lock:
            if self.resolved:
                return False
            new_lb = max(self.lb, lb)
            new_ub = min(self.ub, ub)
            if new_ub - new_lb <= EPSILON:
                new_lb = max(new_lb, new_ub)
            if new_lb == self.lb and new_ub == self.ub:
                return False
            self.lb, self.ub = new_lb, new_ub
            if self.history is not None:
                self.history.append((new_lb, new_ub))
            return True

    def widen_scope(self, scope):
        """Raises the scope; returns True when it grew."""
        with self._lock:
            if scope <= self.scope + EPSILON:
                return False
            self.scope = scope
            return True

    def resolve_as_leaf(self):
        with self._lock:
            self.lb = self.ub = self.leaf_risk
            if self.history is not None:
                self.history.append((self.lb, self.ub))


class DependencyGraph:
    """At most one node per support set, with child-to-parent edges."""

    def __init__(self, ds, objective, switches, record_history=False):
        self.ds = ds
        self.objective = objective
        self.switches = switches
        self.record_history = record_history
        self.w_pos, self.w_neg = class_weights(objective, ds.n_pos, ds.n_neg)
        self.nodes = {}
        self.split_requests = 0
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, s):
        return s in self.nodes

    def parents_of(self, node):
        with self._lock:
            return [self.nodes[p] for p in node.parents]

    def get(self, s):
        try:
            return self.nodes[s]
        except KeyError:
            raise MissingChild(f"no subproblem for support {s}") from None

    def mass(self, s):
        """Loss mass of the samples in ``s`` counted under both labels."""
        n_plus, n_minus = self.ds.counts(s)
        return (self.w_pos * n_plus + self.w_neg * n_minus) / self.ds.N

    def find_or_create(self, s, parent=None):
        with self._lock:
            if parent is not None:
                self.split_requests += 1
            node = self.nodes.get(s)
            if node is None:
                node = self._create(s)
                self.nodes[s] = node
            if parent is not None:
                node.parents.add(parent.support)
            return node

    def _create(self, s):
        ds = self.ds
        lam = self.objective.regularization
        n_plus, n_minus = ds.counts(s)
        prediction = label_leaf(
            LeafCounts(n_plus, n_minus), self.objective.kind, self.objective.weight, ds.n_pos, ds.n_neg
        )
        if prediction:
            loss = self.w_neg * n_minus / ds.N
        else:
            loss = self.w_pos * n_plus / ds.N
        leaf_risk = lam + loss
        if self.switches.equivalent_points:
            lb = min(equivalent_points_lb(s, ds, lam, self.objective), leaf_risk)
        else:
            lb = lam
        if leaf_risk - lb <= EPSILON:
            lb = leaf_risk
        node = ProblemNode(s, lb, leaf_risk, leaf_risk, prediction, self.record_history)
        if self.switches.incremental_progress and fails_bounds(lb, leaf_risk, lam):
            node.resolve_as_leaf()
        return node


class WorkQueue:
    """
    Two-level priority queue. Urgent parent updates come first; exploration entries
    are ordered by interval width, then support size, then tie-break.
    """

    def __init__(self, seed=None):
        self._heap = []
        self._pending = set()
        self._counter = itertools.count()
        self._random = random.Random(seed) if seed is not None else None

    def __len__(self):
        return len(self._heap)

    def push(self, node, priority=EXPLORE):
        key = (node.support, priority)
        if key in self._pending:
            return False
        self._pending.add(key)
        tiebreak = self._random.random() if self._random is not None else node.support.to_bytes()
        entry = (
            -priority,
            -(node.ub - node.lb),
            -node.support.popcount(),
            tiebreak,
            next(self._counter),
            node.support,
        )
        heapq.heappush(self._heap, entry)
        return True

    def pop(self):
        entry = heapq.heappop(self._heap)
        support = entry[-1]
        self._pending.discard((support, -entry[0]))
        return support


def feature_order(ds):
    """Threshold groups in ascending order, then every other feature on its own."""
    allowed = set(ds.masks.distinct_partitions())
    groups = []
    grouped = set()
    for group in ds.schema.threshold_groups():
        kept = tuple(j for j in group if j in allowed)
        grouped.update(group)
        if kept:
            groups.append(kept)
    groups.extend((j,) for j in range(ds.M) if j in allowed and j not in grouped)
    return groups


class DPBSearch:
    def __init__(self, ds, objective, limits=None, switches=None, record_history=False):
        if not objective.additive:
            raise BadParameters(f"{objective.kind.value} is not additive; use the leaf-set search")
        self.ds = ds
        self.objective = objective
        self.limits = limits or SearchLimits()
        self.switches = switches or BoundSwitches()
        self.graph = DependencyGraph(ds, objective, self.switches, record_history)
        self.queue = WorkQueue(self.limits.seed)
        self.order = feature_order(ds)
        self.iterations = 0
        self.trace = []
        self.timed_out = False
        self.root = None
        self._start = None
        self._deadline = None
        self._active = 0
        self._done = False
        self._condition = threading.Condition()

    def _record(self):
        self.trace.append(
            {
                "t": time.time() - self._start,
                "nodes": len(self.graph),
                "lb": self.root.lb,
                "ub": self.root.ub,
            }
        )

    def expand(self, node):
        """
        Creates the children of every admissible split of ``node``. Entries keep the
        order of ``self.order``, one list per group, each holding the loss mass that
        moved since the previous entry of its group.
        """
        s = node.support
        masks = self.ds.masks
        lam = self.objective.regularization
        switches = self.switches
        groups = []
        for group in self.order:
            entries = []
            running_left_ub = float("inf")
            previous_mask = None
            for j in group:
                s_l, s_r = split(s, j, masks)
                if not s_l or not s_r:
                    continue
                if switches.leaf_support and (
                    leaf_support_prune(self.graph.mass(s_l), lam) or leaf_support_prune(self.graph.mass(s_r), lam)
                ):
                    continue
                if switches.subset_bound and running_left_ub <= lam:
                    # An earlier left side is a zero-loss leaf; no later split can beat it.
                    break
                left = self.graph.find_or_create(s_l, node)
                dominated = switches.subset_bound and running_left_ub <= left.lb
                running_left_ub = min(running_left_ub, left.ub)
                right = None if dominated else self.graph.find_or_create(s_r, node)
                moved = 0.0
                if previous_mask is not None:
                    moved = self.graph.mass(s.bits & (previous_mask ^ masks.positive[j]))
                previous_mask = masks.positive[j]
                entries.append((j, left, right, moved))
            if entries:
                groups.append(entries)
        return groups

    def evaluate(self, node):
        """Bounds of ``node`` from the current bounds of its children, with the live splits."""
        lb_best = ub_best = node.leaf_risk
        candidates = []
        for entries in node.children:
            running_left_ub = float("inf")
            previous_lb = None
            moved = 0.0
            for _, left, right, step in entries:
                moved += step
                dominated = right is None or (self.switches.subset_bound and running_left_ub <= left.lb)
                running_left_ub = min(running_left_ub, left.ub)
                if dominated:
                    continue
                split_lb = left.lb + right.lb
                split_ub = left.ub + right.ub
                if self.switches.similar_support and previous_lb is not None:
                    shifted = previous_lb - incremental_similar_support_gap(moved, 0.0)
                    split_lb = min(max(split_lb, shifted), split_ub)
                previous_lb = split_lb
                moved = 0.0
                lb_best = min(lb_best, split_lb)
                ub_best = min(ub_best, split_ub)
                candidates.append((split_lb, split_ub, left, right))
        return lb_best, ub_best, candidates

    def process(self, node):
        if node.resolved:
            return
        if node.children is None:
            node.children = self.expand(node)
            node.explored = True
        lb_best, ub_best, candidates = self.evaluate(node)

        if node.tighten(lb_best, ub_best):
            for parent in self.graph.parents_of(node):
                self._push(parent, URGENT)
            if node is self.root:
                self._record()

        if node.resolved:
            return
        limit = min(node.ub, node.scope) if self.switches.scope else node.ub
        for split_lb, split_ub, left, right in candidates:
            if split_lb < split_ub - EPSILON and split_lb <= limit:
                for child, sibling in ((left, right), (right, left)):
                    if child.resolved:
                        continue
                    widened = self.switches.scope and child.widen_scope(limit - sibling.lb)
                    if widened or not child.explored:
                        self._push(child, EXPLORE)

    def _push(self, node, priority):
        with self._condition:
            if self.queue.push(node, priority):
                self._condition.notify()

    def _expired(self):
        return self._deadline is not None and time.time() >= self._deadline

    def _step(self):
        """Pops and processes one entry; returns False when the search is over."""
        with self._condition:
            while not self.queue and self._active > 0 and not self._done:
                self._condition.wait(0.05)
            if self._done or self.root.resolved or not self.queue:
                self._done = True
                self._condition.notify_all()
                return False
            if self._expired():
                self.timed_out = True
                self._done = True
                self._condition.notify_all()
                return False
            support = self.queue.pop()
            self._active += 1
            self.iterations += 1
            if self.iterations % 10000 == 0:
                logger.debug(
                    "%d iterations, %d nodes, root [%.6f, %.6f]",
                    self.iterations,
                    len(self.graph),
                    self.root.lb,
                    self.root.ub,
                )
        try:
            self.process(self.graph.get(support))
        finally:
            with self._condition:
                self._active -= 1
                self._condition.notify_all()
        return True

    def _worker(self):
        while self._step():
            pass

    def run(self):
        lam = self.objective.regularization
        if lam == 0:
            logger.warning("Regularization is 0; the leaf cap degenerates to 2^M")
        self._start = time.time()
        if self.limits.time_limit is not None:
            self._deadline = self._start + self.limits.time_limit

        self.root = self.graph.find_or_create(self.ds.full_support())
        self.root.scope = float("inf")
        self._record()
        logger.info(
            "Starting search: %d classes, %d features, %d workers, objective %s, lambda %g",
            self.ds.U,
            self.ds.M,
            self.limits.workers,
            self.objective.kind.value,
            lam,
        )
        if not self.root.resolved:
            self.queue.push(self.root, EXPLORE)

        if self.limits.workers <= 1:
            self._worker()
        else:
            threads = [
                threading.Thread(target=self._worker, name=f"dpb-worker-{i}", daemon=True)
                for i in range(self.limits.workers)
            ]
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()

        if not self.root.resolved and not self.timed_out:
            logger.warning("Queue emptied before the root interval closed")
        self._record()
        return self.result()

    def extract(self, s):
        node = self.graph.get(s)
        best_risk = node.leaf_risk
        best_split = None
        for group in self.order:
            for j in group:
                s_l, s_r = split(s, j, self.ds.masks)
                if not s_l or not s_r:
                    continue
                try:
                    left = self.graph.get(s_l)
                    right = self.graph.get(s_r)
                except MissingChild:
                    continue
                total = left.ub + right.ub
                if total < best_risk - EPSILON:
                    best_risk = total
                    best_split = (j, s_l, s_r)
        if best_split is None:
            return Leaf(prediction=node.prediction)
        j, s_l, s_r = best_split
        return Split(j, self.extract(s_l), self.extract(s_r))

    def result(self):
        tree = self.extract(self.root.support)
        risk = evaluate_risk(tree, self.ds, self.objective)
        lam = self.objective.regularization
        loss = risk - lam * leaf_count(tree)
        gap = 0.0 if self.root.resolved else max(0.0, risk - self.root.lb)
        stats = SearchStats(
            nodes=len(self.graph),
            iterations=self.iterations,
            split_requests=self.graph.split_requests,
            seconds=time.time() - self._start,
        )
        logger.info(
            "Search finished: risk %.6f, gap %.3g, %d leaves, %d nodes, %d iterations",
            risk,
            gap,
            leaf_count(tree),
            stats.nodes,
            stats.iterations,
        )
        return OptimizationResult(
            tree=tree,
            risk=risk,
            loss=loss,
            lower_bound=min(self.root.lb, risk),
            gap=gap,
            engine="dpb",
            stats=stats,
            trace=self.trace,
            timed_out=self.timed_out,
        )


def optimize(ds, objective, limits=None, switches=None, record_history=False):
    """
    Minimizes ``loss + lambda * leaves`` over all trees on the binary features of
    ``ds``. Raises :class:`SearchTimeout` carrying the best tree found so far when
    the time limit runs out.
    """

    search = DPBSearch(ds, objective, limits, switches, record_history)
    result = search.run()
    if result.timed_out:
        raise SearchTimeout(result)
    return result
