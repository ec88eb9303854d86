import numpy as np
import pytest
from helpers import pipeline_cv, synth

from botcal.data import BOT, HUMAN, dumps_account
from botcal.errors import ValidationError
from botcal.evaluation import auc, cross_validate_matrix, make_fold_plan
from botcal.features import DEFAULT_SCHEMA
from botcal.forest import ForestParams
from botcal.synth import ARCHETYPES, HUMAN_PROFILE, SynthConfig, blended_profile, generate_synthetic


def _dump(corpus):
    return "\n".join(dumps_account(a) for a in corpus.accounts) + repr(corpus.labels)


def test_same_config_is_byte_identical():
    cfg = SynthConfig(seed=11, n_humans=40, n_bots=40)
    assert _dump(generate_synthetic(cfg)) == _dump(generate_synthetic(cfg))
    other = SynthConfig(seed=12, n_humans=40, n_bots=40)
    assert _dump(generate_synthetic(cfg)) != _dump(generate_synthetic(other))


def test_layout_and_counts():
    corpus = generate_synthetic(SynthConfig(seed=1, n_humans=3, n_bots=2, name="c"))
    assert corpus.labels == [HUMAN] * 3 + [BOT] * 2
    assert [a.id for a in corpus.accounts] == [f"c-{i:06d}" for i in range(5)]


@pytest.mark.parametrize("kw", [
    {"n_humans": 0, "n_bots": 0},
    {"n_humans": -1},
    {"separation": 1.5},
    {"mix": {"robot": 1.0}},
    {"mix": {"spam": 0.0}},
])
def test_bad_configs(kw):
    with pytest.raises(ValidationError):
        SynthConfig(**kw)


def test_zero_separation_bots_share_human_profile():
    for a in ARCHETYPES:
        assert blended_profile(a, 0.0) == HUMAN_PROFILE


def test_indistinguishable_classes_give_chance_auc():
    cv, y = pipeline_cv(3, 0.0)
    assert 0.45 <= auc(cv.scores, y) <= 0.55


def test_full_separation_gives_high_auc():
    cv, y = pipeline_cv(3, 1.0)
    assert auc(cv.scores, y) >= 0.95


def test_separability_grows_with_separation():
    aucs = []
    for sep in (0.0, 0.25, 0.5, 0.75, 1.0):
        _, X, y = synth(21, sep, 300, 300)
        params = ForestParams(n_trees=40, seed=21)
        cv = cross_validate_matrix(X, y, params, make_fold_plan(y, 3, 21), DEFAULT_SCHEMA.fingerprint)
        aucs.append(cv.metrics.auc)
    # CV noise may invert neighbours slightly; the trend must hold end to end
    assert all(b >= a - 0.02 for a, b in zip(aucs, aucs[1:])), aucs
    assert aucs[-1] - aucs[0] > 0.3


def test_single_archetype_mix():
    corpus, _, y = synth(2, 1.0, 20, 20, mix=(("spam", 1.0),), name="spam")
    assert np.sum(y) == 20
    assert len(corpus) == 40
