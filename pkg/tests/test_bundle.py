import pytest
from helpers import make_account, synth
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from botcal.bundle import dumps, load_model, loads, save_model
from botcal.errors import ParseError, ValidationError, VersionError
from botcal.pipeline import respond


@pytest.fixture(scope="module")
def text(small_bundle):
    return dumps(small_bundle)


def test_save_load_scores_identically(small_bundle, tmp_path):
    path = tmp_path / "m.botcal"
    save_model(small_bundle, path)
    again = load_model(path)
    assert again.version == small_bundle.version
    assert dumps(again) == dumps(small_bundle)
    accounts = synth(77, 0.5, 50, 50)[0].accounts
    assert len(accounts) == 100
    for a in accounts:
        assert respond(again, a).to_dict() == respond(small_bundle, a).to_dict()


def test_bumped_version_is_refused(text):
    bumped = text.replace("botcal-model v1", "botcal-model v2", 1)
    with pytest.raises(VersionError, match="v2.*v1"):
        loads(bumped)


def test_foreign_file_is_refused():
    with pytest.raises(ParseError):
        loads('{"hello": 1}\n')


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.floats(0.0, 1.0, exclude_max=True))
def test_truncation_gives_parse_error(text, frac):
    cut = int(frac * len(text))
    with pytest.raises(ParseError):
        loads(text[:cut])


def test_truncation_just_before_final_newline(text):
    with pytest.raises(ParseError):
        loads(text[:-1])


def test_structurally_broken_document(text):
    broken = text.replace('"calibrator"', '"calibrat0r"', 1)
    with pytest.raises(ParseError):
        loads(broken)


def test_tampered_tree_is_rejected(text):
    broken = text.replace('"feature":[', '"feature":[9999,', 1)
    with pytest.raises(ValidationError):
        loads(broken)


def test_version_tracks_content(small_bundle):
    other = small_bundle.replace(metadata={**small_bundle.metadata, "note": "x"})
    assert other.version != small_bundle.version
    assert small_bundle.version.startswith("v1-")


def test_response_invariants(small_bundle):
    r = respond(small_bundle, make_account(posts=()))
    assert abs(r.display - 5 * r.calibrated) <= 1e-9
    assert 0.0 <= r.cap <= 1.0
    assert r.cap_prior_used == 0.15
    assert respond(small_bundle, make_account(), prior=0.0).cap == 0.0
    assert respond(small_bundle, make_account(), prior=1.0).cap == 1.0
    with pytest.raises(ValidationError):
        respond(small_bundle, make_account(), prior=2.0)
