import hashlib
import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest
from helpers import make_account, make_posts, synth

from botcal.bundle import dumps, save_model
from botcal.cli import main
from botcal.data import account_to_record, write_accounts
from botcal.service import MAX_BODY, make_server

FIELDS = {"id", "raw", "calibrated", "display", "cap", "cap_prior_used", "subscores",
          "language_independent", "degenerate_evidence", "model_version"}


@pytest.fixture(scope="module")
def server(small_bundle):
    srv = make_server(small_bundle, port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()
    srv.server_close()


def call(url, path, body=None, raw=None):
    data = raw if raw is not None else (json.dumps(body).encode() if body is not None else None)
    req = urllib.request.Request(url + path, data=data, method="POST" if data is not None else "GET",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read() or b"{}")


def record(**kw):
    return account_to_record(make_account(posts=make_posts(5), **kw))


def test_score_returns_every_field(server, small_bundle):
    status, body = call(server, "/score", record())
    assert status == 200
    assert set(body) == FIELDS
    assert body["model_version"] == small_bundle.version
    assert body["cap_prior_used"] == 0.15
    assert abs(body["display"] - 5 * body["calibrated"]) <= 1e-9
    assert len(body["subscores"]) == 6


def test_prior_zero_gives_zero_cap(server):
    assert call(server, "/score", {**record(), "prior": 0})[1]["cap"] == 0.0
    assert call(server, "/score?prior=0", record())[1]["cap"] == 0.0


def test_query_prior_wins_over_body(server):
    status, body = call(server, "/score?prior=0.3", {**record(), "prior": 0.9})
    assert status == 200 and body["cap_prior_used"] == 0.3


@pytest.mark.parametrize("path, extra", [("/score?prior=1.5", {}), ("/score", {"prior": -0.2}),
                                         ("/score", {"prior": "lots"})])
def test_bad_prior_is_400(server, path, extra):
    status, body = call(server, path, {**record(), **extra})
    assert status == 400 and "prior" in body["error"]


@pytest.mark.parametrize("raw", [b"{not json", b"[1, 2]", json.dumps({"id": "x"}).encode(), b"\xff\xfe"])
def test_malformed_body_is_400(server, raw):
    status, body = call(server, "/score", raw=raw)
    assert status == 400 and body["error"]


def test_oversized_body_is_413(server):
    rec = record()
    rec["description"] = "x" * (MAX_BODY + 10)
    status, _ = call(server, "/score", rec)
    assert status == 413


def test_health_and_unknown_paths(server, small_bundle):
    status, body = call(server, "/health")
    assert status == 200 and body["status"] == "ok"
    assert body["model_version"] == small_bundle.version and body["uptime_seconds"] >= 0
    assert call(server, "/nope")[0] == 404
    assert call(server, "/nope", {"a": 1})[0] == 404


def test_concurrent_identical_requests(server, small_bundle):
    before = hashlib.sha256(dumps(small_bundle).encode()).hexdigest()
    rec = record(id="same")
    with ThreadPoolExecutor(max_workers=32) as pool:
        results = list(pool.map(lambda _: call(server, "/score", rec), range(100)))
    assert all(status == 200 for status, _ in results)
    assert all(body == results[0][1] for _, body in results)
    assert hashlib.sha256(dumps(small_bundle).encode()).hexdigest() == before


def test_service_matches_cli(server, small_bundle, tmp_path):
    accounts = synth(78, 0.5, 10, 10)[0].accounts
    save_model(small_bundle, tmp_path / "m.botcal")
    write_accounts(tmp_path / "a.jsonl", accounts)
    assert main(["score", "--model", str(tmp_path / "m.botcal"), "--accounts", str(tmp_path / "a.jsonl"),
                 "--out", str(tmp_path / "out.jsonl")]) == 0
    cli = [json.loads(line) for line in (tmp_path / "out.jsonl").read_text().splitlines()]
    served = [call(server, "/score", account_to_record(a))[1] for a in accounts]
    assert cli == served
