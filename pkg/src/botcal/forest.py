"""Random forest of Gini CART trees with hard-vote bot scores.

The raw bot score of an account is the fraction of trees whose leaf votes
bot, so every score is a multiple of ``1 / n_trees``. Alongside the main
model, one submodel is trained per feature group (subscores) and one on the
non-linguistic features (language-independent score).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from functools import cached_property
from typing import Sequence

import numpy as np

from botcal.data import BOT, HUMAN, Account, LabeledCorpus
from botcal.errors import SchemaMismatchError, ValidationError
from botcal.features import (
    DEFAULT_SCHEMA,
    GROUPS,
    FeatureSchema,
    FeatureVector,
    extract,
    extract_matrix,
    group_slice,
    strip_linguistic,
)

log = logging.getLogger(__name__)

LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    seed: int = 0
    min_leaf: int = 1
    features_per_split: int | None = None  # None -> ceil(sqrt(d))
    max_depth: int | None = None
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValidationError("features_per_split must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0")

    def resolved_mtry(self, d: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(math.sqrt(d)))
        return min(self.features_per_split, d)

    def with_seed(self, seed: int) -> "ForestParams":
        return ForestParams(**{**asdict(self), "seed": seed})


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat array tree. ``feature[i] == LEAF`` marks a leaf with ``vote[i]``.

    Internal nodes route ``x[feature] <= threshold`` to ``left``, else ``right``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vote: np.ndarray

    def __post_init__(self):
        for name in ("feature", "threshold", "left", "right", "vote"):
            getattr(self, name).setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @cached_property
    def _lists(self):
        return (self.feature.tolist(), self.threshold.tolist(), self.left.tolist(),
                self.right.tolist(), self.vote.tolist())

    def _predict_row(self, x: Sequence[float]) -> int:
        feature, threshold, left, right, vote = self._lists
        node = 0
        while feature[node] != LEAF:
            node = left[node] if x[feature[node]] <= threshold[node] else right[node]
        return vote[node]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf votes (0 human, 1 bot) for each row of X."""
        X = np.atleast_2d(X)
        if len(X) <= 4:
            return np.array([self._predict_row(row) for row in X.tolist()], dtype=np.int64)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] != LEAF
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = self.feature[node[r]] != LEAF
        return self.vote[node]

    def validate(self, n_features: int) -> None:
        internal = self.feature != LEAF
        if (self.feature[internal] >= n_features).any() or (self.feature[internal] < 0).any():
            raise ValidationError("tree references a feature outside the schema")
        if not np.isfinite(self.threshold[internal]).all():
            raise ValidationError("tree has a non-finite threshold")
        n = self.n_nodes
        for arr in (self.left[internal], self.right[internal]):
            if ((arr <= 0) | (arr >= n)).any():
                raise ValidationError("tree child index out of range")
        if not np.isin(self.vote[~internal], (HUMAN, BOT)).all():
            raise ValidationError("tree leaf without a human/bot vote")

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "vote": self.vote.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            vote=np.asarray(d["vote"], dtype=np.int64),
        )


def best_split(X: np.ndarray, y: np.ndarray, features: Sequence[int]) -> tuple[int, float] | None:
    """Gini-optimal (feature, threshold) over ``features``; None if no split exists.

    The split criterion is maximised in the exact form
    ``((l1^2 + l0^2) * nr + (r1^2 + r0^2) * nl) / (nl * nr)``; numerator and
    denominator are integers below 2**53 so equal gains compare equal. Ties go
    to the lowest feature index, then the lowest threshold.
    """
    features = np.sort(np.asarray(features, dtype=np.int64))
    n = len(y)
    if n < 2 or features.size == 0:
        return None
    Xs = X[:, features]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    ys = y[order].astype(np.int64)
    l1 = np.cumsum(ys, axis=0)[:-1]
    nl = np.arange(1, n, dtype=np.int64)[:, None]
    nr = n - nl
    r1 = ys.sum(axis=0)[None, :] - l1
    l0 = nl - l1
    r0 = nr - r1
    num = (l1 * l1 + l0 * l0) * nr + (r1 * r1 + r0 * r0) * nl
    gain = num / (nl * nr)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf).T  # feature-major for the tie rule
    flat = int(np.argmax(gain))
    col, pos = divmod(flat, n - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return int(features[col]), float(thr)


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator,
              min_leaf: int = 1, max_depth: int | None = None) -> DecisionTree:
    """Grow one CART tree on (X, y) until leaves are pure or hold <= min_leaf rows.

    At each node ``mtry`` candidate features are drawn without replacement;
    when none of them can separate the node's rows, all features are tried.
    """
    d = X.shape[1]
    feature, threshold, left, right, vote = [], [], [], [], []
    all_features = np.arange(d)

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        vote.append(HUMAN)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        n_bot = int(yn.sum())
        vote[node] = BOT if n_bot * 2 > len(idx) else HUMAN
        if n_bot == 0 or n_bot == len(idx) or len(idx) <= min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        Xn = X[idx]
        cand = rng.choice(d, size=mtry, replace=False) if mtry < d else all_features
        split = best_split(Xn, yn, cand)
        if split is None and mtry < d:
            split = best_split(Xn, yn, all_features)
        if split is None:
            continue
        f, t = split
        go_left = Xn[:, f] <= t
        feature[node] = f
        threshold[node] = t
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        stack.append((rnode, idx[~go_left], depth + 1))
        stack.append((lnode, idx[go_left], depth + 1))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        vote=np.array(vote, dtype=np.int64),
    )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    schema_fingerprint: str
    n_features: int
    params: ForestParams = field(default_factory=ForestParams)
    metadata: dict = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def check_schema(self, fingerprint: str) -> None:
        if fingerprint != self.schema_fingerprint:
            raise SchemaMismatchError(self.schema_fingerprint, fingerprint)

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Number of trees voting bot, per row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValidationError(f"expected {self.n_features} features, got {X.shape[1]}")
        total = np.zeros(len(X), dtype=np.int64)
        for tree in self.trees:
            total += tree.predict(X)
        return total

    def score_matrix(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X) / self.n_trees


def fit_forest(X: np.ndarray, y: np.ndarray, params: ForestParams, schema_fingerprint: str,
               metadata: dict | None = None) -> ForestModel:
    """Fit a forest on a feature matrix. Each tree draws from its own seeded
    substream, so trees can be grown in any order with identical results."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) != len(y) or len(y) == 0:
        raise ValidationError("training matrix and labels must be non-empty and aligned")
    if not np.isin(y, (HUMAN, BOT)).all():
        raise ValidationError("labels must be 0 (human) or 1 (bot)")
    if y.min() == y.max():
        raise ValidationError("single class: training needs at least one human and one bot")
    if X.shape[1] == 0:
        raise ValidationError("cannot train on an empty feature set")
    mtry = params.resolved_mtry(X.shape[1])
    streams = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    n = len(y)
    for ss in streams:
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        trees.append(grow_tree(X[rows], y[rows], mtry, rng, params.min_leaf, params.max_depth))
    return ForestModel(tuple(trees), schema_fingerprint, X.shape[1], params, dict(metadata or {}))


def score(model: ForestModel, vec: FeatureVector) -> float:
    """Fraction of trees voting bot for one feature vector."""
    model.check_schema(vec.schema.fingerprint)
    return float(model.score_matrix(vec.values[None, :])[0])


# -- main model + submodels -----------------------------------------------------

LANGUAGE_INDEPENDENT = "language_independent"


@dataclass(frozen=True)
class ScoreBundle:
    raw: float
    subscores: dict
    language_independent: float


@dataclass(frozen=True, eq=False)
class ForestSuite:
    """Main forest, one forest per feature group, and a language-independent forest."""

    schema: FeatureSchema
    main: ForestModel
    groups: dict  # group name -> ForestModel
    language_independent: ForestModel

    def submodel_columns(self) -> dict[str, list[int]]:
        cols = {g: self.schema.group_indices(g) for g in self.groups}
        cols[LANGUAGE_INDEPENDENT] = self.schema.nonlinguistic_indices()
        return cols

    def score_bundle(self, account: Account) -> ScoreBundle:
        vec = extract(account, self.schema)
        self.main.check_schema(vec.schema.fingerprint)
        subs = {}
        for g, model in self.groups.items():
            subs[g] = score(model, group_slice(vec, g))
        li = score(self.language_independent, strip_linguistic(vec))
        return ScoreBundle(raw=score(self.main, vec), subscores=subs, language_independent=li)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        return self.main.score_matrix(X)


def train(corpus: LabeledCorpus, schema: FeatureSchema = DEFAULT_SCHEMA,
          params: ForestParams = ForestParams(), X: np.ndarray | None = None) -> ForestSuite:
    """Train the main forest plus the six group forests and the
    language-independent forest. ``X`` may carry precomputed features."""
    n_humans, n_bots = corpus.counts()
    if n_humans == 0 or n_bots == 0:
        raise ValidationError(f"single class: corpus {corpus.name} has {n_humans} humans and {n_bots} bots")
    if X is None:
        X = extract_matrix(corpus.accounts, schema)
    y = np.array(corpus.labels, dtype=np.int64)
    meta = {"corpus": corpus.name, "n_samples": len(y), "n_bots": n_bots, "n_humans": n_humans}

    main = fit_forest(X, y, params, schema.fingerprint, meta)
    groups = {}
    for k, g in enumerate(GROUPS):
        idx = schema.group_indices(g)
        if not idx:
            log.warning("feature group %s is empty; subscore omitted", g)
            continue
        sub = schema.restrict(idx, g)
        groups[g] = fit_forest(X[:, idx], y, params.with_seed(params.seed + 1 + k), sub.fingerprint, meta)
    li_idx = schema.nonlinguistic_indices()
    if not li_idx:
        raise ValidationError("every feature is linguistic; a language-independent model is impossible")
    li_schema = schema.restrict(li_idx, "nonlinguistic") if len(li_idx) < len(schema) else schema
    li = fit_forest(X[:, li_idx], y, params.with_seed(params.seed + 1 + len(GROUPS)), li_schema.fingerprint, meta)
    return ForestSuite(schema, main, groups, li)
