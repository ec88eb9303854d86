"""End-to-end training of a model bundle and the per-account score response."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from botcal.bundle import ModelBundle
from botcal.calibration import calibrate, fit_platt, to_display
from botcal.data import Account, LabeledCorpus
from botcal.evaluation import CVResult, cross_validate
from botcal.features import DEFAULT_SCHEMA, FeatureSchema, extract_matrix
from botcal.forest import ForestParams, train
from botcal.posterior import DEFAULT_DEGREE, DEFAULT_PRIOR, cap_detail, fit_cap, validate_prior


def train_bundle(corpus: LabeledCorpus, schema: FeatureSchema = DEFAULT_SCHEMA,
                 params: ForestParams = ForestParams(), k: int = 5, smooth_targets: bool = True,
                 degree: int = DEFAULT_DEGREE, prior: float = DEFAULT_PRIOR) -> tuple[ModelBundle, CVResult]:
    """Train forests on the full corpus; fit Platt scaling and the CAP
    likelihoods on k-fold out-of-fold raw scores of the same corpus."""
    X = extract_matrix(corpus.accounts, schema)
    y = np.array(corpus.labels, dtype=np.int64)
    suite = train(corpus, schema, params, X=X)
    cv = cross_validate(corpus, schema, params, k=k, X=X)
    cal = fit_platt(cv.scores, y, smooth_targets=smooth_targets,
                    provenance=f"out-of-fold ({k}-fold) raw scores of {corpus.name}")
    cap_model = fit_cap(cv.scores, y, degree=degree, prior=prior)
    meta = {
        "corpus": corpus.name,
        "n_samples": len(y),
        "seed": params.seed,
        "n_trees": params.n_trees,
        "folds": k,
        "schema": schema.fingerprint,
        "cv_auc": cv.metrics.auc,
        "cv_accuracy": cv.metrics.accuracy,
    }
    return ModelBundle(suite, cal, cap_model, meta), cv


@dataclass(frozen=True)
class ScoreResponse:
    id: str
    raw: float
    calibrated: float
    display: float
    cap: float
    cap_prior_used: float
    subscores: dict
    language_independent: float
    degenerate_evidence: bool
    model_version: str

    def to_dict(self) -> dict:
        return asdict(self)


def respond(bundle: ModelBundle, account: Account, prior: float | None = None,
            model_version: str | None = None) -> ScoreResponse:
    if prior is not None:
        prior = validate_prior(prior)
    scores = bundle.forests.score_bundle(account)
    calibrated = calibrate(bundle.calibrator, scores.raw)
    post = cap_detail(bundle.cap_model, scores.raw, prior)
    return ScoreResponse(
        id=account.id,
        raw=scores.raw,
        calibrated=calibrated,
        display=to_display(calibrated),
        cap=post.value,
        cap_prior_used=post.prior,
        subscores=dict(scores.subscores),
        language_independent=scores.language_independent,
        degenerate_evidence=post.degenerate,
        model_version=model_version or bundle.version,
    )
