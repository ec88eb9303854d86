"""AUC, stratified cross-validation and the cross-dataset generalization matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from botcal.calibration import ml_threshold
from botcal.data import LabeledCorpus
from botcal.errors import ValidationError
from botcal.features import DEFAULT_SCHEMA, FeatureSchema, extract_matrix
from botcal.forest import ForestParams, fit_forest


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC: P(bot score > human score), ties counting one half.

    Counts are accumulated as integers (doubled to keep the half-ties exact),
    so the result equals exhaustive pair enumeration bit for bit.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValidationError("scores and labels must be aligned")
    bots, humans = s[y == 1], np.sort(s[y == 0])
    if bots.size == 0 or humans.size == 0:
        raise ValidationError("single class: AUC needs both humans and bots")
    below = np.searchsorted(humans, bots, side="left")
    at_or_below = np.searchsorted(humans, bots, side="right")
    twice_wins = int((below + at_or_below).sum())
    return twice_wins / (2 * bots.size * humans.size)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    folds: np.ndarray  # fold index per corpus entry

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds != fold)


def make_fold_plan(labels: Sequence[int], k: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded stratified assignment.

    Each class is shuffled and dealt round-robin; the second class continues
    the rotation where the first stopped, so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValidationError("cross-validation needs k >= 2")
    y = np.asarray(labels)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    folds = np.empty(len(y), dtype=np.int64)
    start = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        folds[idx] = (start + np.arange(idx.size)) % k
        start = (start + idx.size) % k
    return FoldPlan(k, seed, folds)


@dataclass(frozen=True)
class Metrics:
    auc: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @staticmethod
    def header() -> str:
        return "experiment,n,auc,accuracy,tp,fp,tn,fn"

    def csv_row(self, name: str) -> str:
        return f"{name},{self.n},{self.auc!r},{self.accuracy!r},{self.tp},{self.fp},{self.tn},{self.fn}"


def confusion(pred: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    tn = int(((pred == 0) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    return tp, fp, tn, fn


def metrics_from(scores: np.ndarray, pred: np.ndarray, y: np.ndarray) -> Metrics:
    tp, fp, tn, fn = confusion(pred, y)
    return Metrics(auc(scores, y), (tp + tn) / len(y), tp, fp, tn, fn)


@dataclass(frozen=True)
class CVResult:
    metrics: Metrics
    scores: np.ndarray        # out-of-fold raw score per corpus entry
    predictions: np.ndarray   # out-of-fold bot/human call per entry
    thresholds: tuple         # per fold, fitted on that fold's training rows
    plan: FoldPlan


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate_matrix(X: np.ndarray, y: np.ndarray, params: ForestParams, plan: FoldPlan,
                          fingerprint: str = "") -> CVResult:
    y = np.asarray(y, dtype=np.int64)
    scores = np.empty(len(y))
    preds = np.empty(len(y), dtype=np.int64)
    thresholds = []
    for fold in range(plan.k):
        tr, te = plan.train_indices(fold), plan.test_indices(fold)
        for part, rows in (("training", tr), ("test", te)):
            if len(np.unique(y[rows])) < 2:
                raise ValidationError(
                    f"fold {fold} {part} rows lack a class; use a smaller k (now {plan.k})")
        model = fit_forest(X[tr], y[tr], params.with_seed(fold_seed(params.seed, fold)), fingerprint)
        thr = ml_threshold(model.score_matrix(X[tr]), y[tr])
        scores[te] = model.score_matrix(X[te])
        preds[te] = (scores[te] > thr).astype(np.int64)
        thresholds.append(thr)
    return CVResult(metrics_from(scores, preds, y), scores, preds, tuple(thresholds), plan)


def cross_validate(corpus: LabeledCorpus, schema: FeatureSchema = DEFAULT_SCHEMA,
                   params: ForestParams = ForestParams(), plan: FoldPlan | None = None,
                   k: int = 5, X: np.ndarray | None = None) -> CVResult:
    """k-fold CV of the main forest; metrics over pooled out-of-fold scores.

    Accuracy uses, for each fold, the cutoff fitted on that fold's training
    rows only.
    """
    y = np.array(corpus.labels, dtype=np.int64)
    if plan is None:
        plan = make_fold_plan(y, k, params.seed)
    if len(plan.folds) != len(y):
        raise ValidationError("fold plan does not match corpus size")
    if X is None:
        X = extract_matrix(corpus.accounts, schema)
    return cross_validate_matrix(X, y, params, plan, schema.fingerprint)


@dataclass(frozen=True)
class MatrixCell:
    train: str
    test: str
    accuracy: float
    mode: str  # "cv" (in-sample, cross-validated) or "holdout"


@dataclass(frozen=True)
class GeneralizationMatrix:
    cells: tuple[MatrixCell, ...]

    def get(self, train: str, test: str) -> MatrixCell:
        for c in self.cells:
            if c.train == train and c.test == test:
                return c
        raise KeyError((train, test))

    @property
    def rows(self) -> list[str]:
        return list(dict.fromkeys(c.train for c in self.cells))

    def to_csv(self) -> str:
        lines = ["train,test,accuracy,mode"]
        lines += [f"{c.train},{c.test},{c.accuracy!r},{c.mode}" for c in self.cells]
        return "\n".join(lines) + "\n"


def training_subsets(n: int, mode: str = "cumulative") -> list[list[int]]:
    if mode == "cumulative":
        return [list(range(r + 1)) for r in range(n)]
    if mode == "leave-one-out":
        return [[j for j in range(n) if j != i] for i in range(n)]
    raise ValidationError(f"unknown matrix mode {mode!r}")


def generalization_matrix(corpora: Sequence[LabeledCorpus], schema: FeatureSchema = DEFAULT_SCHEMA,
                          params: ForestParams = ForestParams(), k: int = 5,
                          mode: str = "cumulative") -> GeneralizationMatrix:
    """Accuracy of models trained on growing unions of corpora.

    Cells for corpora inside a row's training union are cross-validated
    (out-of-fold predictions restricted to that corpus); the others are
    scored by a model fit on the whole union.
    """
    if len(corpora) < 2:
        raise ValidationError("generalization matrix needs at least 2 corpora")
    names = [c.name for c in corpora]
    if len(set(names)) != len(names):
        raise ValidationError("corpus names must be distinct")
    Xs = [extract_matrix(c.accounts, schema) for c in corpora]
    ys = [np.array(c.labels, dtype=np.int64) for c in corpora]
    cells = []
    for members in training_subsets(len(corpora), mode):
        row = "+".join(names[i] for i in members)
        X = np.vstack([Xs[i] for i in members])
        y = np.concatenate([ys[i] for i in members])
        owner = np.concatenate([np.full(len(ys[i]), i) for i in members])
        plan = make_fold_plan(y, k, params.seed)
        cv = cross_validate_matrix(X, y, params, plan, schema.fingerprint)
        correct = cv.predictions == y
        full = fit_forest(X, y, params, schema.fingerprint)
        thr = ml_threshold(full.score_matrix(X), y)
        for j, name in enumerate(names):
            if j in members:
                cells.append(MatrixCell(row, name, float(correct[owner == j].mean()), "cv"))
            else:
                pred = (full.score_matrix(Xs[j]) > thr).astype(np.int64)
                cells.append(MatrixCell(row, name, float((pred == ys[j]).mean()), "holdout"))
    return GeneralizationMatrix(tuple(cells))
