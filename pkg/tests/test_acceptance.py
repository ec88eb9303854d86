"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s``; the summary block at
the end of any pytest run repeats the lines.
"""

import time
from contextlib import contextmanager

import numpy as np
from conftest import ACCEPTANCE_LINES
from helpers import (
    archetype_corpora,
    archetype_matrix,
    cart_oracle,
    oracle_predict,
    pair_auc,
    pipeline_cv,
    run_pipeline,
    synth,
)
from scipy import integrate

from botcal.calibration import calibrate, fit_platt, reliability
from botcal.data import write_accounts, write_labels
from botcal.evaluation import auc
from botcal.features import DEFAULT_SCHEMA
from botcal.forest import ForestParams, fit_forest
from botcal.posterior import BernsteinDensity, CapModel, cap, fit_density, posterior


@contextmanager
def criterion(number, title, limit_seconds=None):
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - start
        if limit_seconds is not None:
            assert elapsed < limit_seconds, f"took {elapsed:.1f}s, limit {limit_seconds}s"
    except BaseException as exc:
        line = f"criterion {number}: FAIL  {title} ({exc})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    extra = "; ".join(f"{k}={v}" for k, v in detail.items())
    line = f"criterion {number}: PASS  {title} [{elapsed:.1f}s{'; ' + extra if extra else ''}]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_bayes_arithmetic():
    with criterion(1, "Bayes arithmetic", 1.0) as d:
        # f_bot(s) = 2s, f_human(s) = 2(1 - s): likelihood ratio 4 at s = 0.8
        bot = BernsteinDensity(np.array([0.0, 1.0]), "bot", 2)
        human = BernsteinDensity(np.array([1.0, 0.0]), "human", 2)
        model = CapModel(bot, human, prior=0.15)
        value = cap(model, 0.8)
        assert abs(value - 12 / 29) < 1e-9
        assert abs(posterior(0.15, 4.0, 1.0).value - 12 / 29) < 1e-9
        for s in np.linspace(0, 1, 101):
            assert cap(model, s, prior=0.0) == 0.0
            assert cap(model, s, prior=1.0) == 1.0
        same = CapModel(human, human, prior=0.15)
        for s in np.linspace(0, 1, 101):
            assert cap(same, s) == 0.15
        d["cap"] = f"{value:.9f}"


def test_criterion_02_density_normalization():
    with criterion(2, "Bernstein density normalization", 30.0) as d:
        rng = np.random.default_rng(2024)
        grid = np.linspace(0, 1, 10_001)
        check = np.linspace(0, 1, 999)
        worst = 0.0
        for i in range(50):
            n = (10, 100, 10_000)[i % 3]
            a, b = rng.uniform(0.3, 5.0, 2)
            s = rng.beta(a, b, n)
            if i % 2:
                s = np.round(s * 100) / 100  # quantized like raw forest scores
            dens = fit_density(s, degree=40)
            mass = integrate.simpson(dens(grid), x=grid)
            worst = max(worst, abs(mass - 1.0))
            assert abs(mass - 1.0) < 1e-6
            assert (dens(check) >= 0).all()
        d["max |mass-1|"] = f"{worst:.2e}"


def test_criterion_03_uniform_recovery():
    with criterion(3, "uniform recovery", 5.0) as d:
        dens = fit_density(np.linspace(0.0, 1.0, 10_000), degree=40)
        x = np.linspace(0.01, 0.99, 99)
        dev = float(np.max(np.abs(dens(x) - 1.0)))
        assert dev < 0.05
        d["max deviation"] = f"{dev:.4f}"


def test_criterion_04_auc_invariance():
    with criterion(4, "AUC invariance under Platt scaling", 120.0) as d:
        cv, y = pipeline_cv(4, 0.5)
        assert len(y) == 2000
        cal = fit_platt(cv.scores, y)
        assert cal.slope > 0
        raw_auc = auc(cv.scores, y)
        cal_auc = auc(calibrate(cal, cv.scores), y)
        assert raw_auc == cal_auc
        d["auc"] = repr(raw_auc)


def test_criterion_05_calibration_efficacy():
    with criterion(5, "calibration efficacy on held-out data", 120.0) as d:
        cv, y = pipeline_cv(4, 0.5)
        _, X, _ = synth(4, 0.5)
        cal = fit_platt(cv.scores, y)
        model = fit_forest(X, y, ForestParams(n_trees=100, seed=4), DEFAULT_SCHEMA.fingerprint)
        _, Xh, yh = synth(44, 0.5)
        raw = model.score_matrix(Xh)
        before = reliability(raw, yh).mean_gap()
        after = reliability(calibrate(cal, raw), yh).mean_gap()
        assert after <= before + 0.01
        d["gap before"] = f"{before:.4f}"
        d["gap after"] = f"{after:.4f}"


def test_criterion_06_forest_semantics():
    with criterion(6, "forest quantization and CART oracle") as d:
        _, X, y = synth(5, 0.5, 150, 150)
        _, Xt, _ = synth(6, 0.5, 500, 500)
        model = fit_forest(X, y, ForestParams(n_trees=100, seed=6), DEFAULT_SCHEMA.fingerprint)
        s = model.score_matrix(Xt)
        assert len(s) == 1000
        assert np.array_equal(np.rint(s * 100) / 100, s)
        rng = np.random.default_rng(6)
        checked = 0
        while checked < 200:
            n, dim = int(rng.integers(2, 9)), int(rng.integers(1, 4))
            pts = rng.integers(0, 5, size=(n, dim))
            ys = rng.integers(0, 2, size=n)
            if ys.min() == ys.max():
                continue
            params = ForestParams(n_trees=1, seed=int(rng.integers(1 << 30)), bootstrap=False,
                                  features_per_split=dim)
            tree_model = fit_forest(pts.astype(float), ys, params, "fp")
            oracle = cart_oracle([tuple(map(int, p)) for p in pts], ys.tolist())
            grid = np.array(np.meshgrid(*[np.arange(-1, 6)] * dim)).reshape(dim, -1).T
            want = [float(oracle_predict(oracle, row)) for row in grid.tolist()]
            assert tree_model.score_matrix(grid.astype(float)).tolist() == want
            checked += 1
        d["oracle datasets"] = checked


def test_criterion_07_pipeline_separability():
    with criterion(7, "pipeline separability and permutation control", 300.0) as d:
        cv, y = pipeline_cv(3, 1.0)
        null, y_shuffled = pipeline_cv(3, 1.0, shuffle=True)
        a = auc(cv.scores, y)
        assert len(y) == 2000 and cv.plan.k == 5
        assert a >= 0.95
        assert cv.metrics.accuracy >= 0.90
        a0 = auc(null.scores, y_shuffled)
        assert 0.4 <= a0 <= 0.6
        d["auc"] = f"{a:.4f}"
        d["accuracy"] = f"{cv.metrics.accuracy:.4f}"
        d["shuffled auc"] = f"{a0:.4f}"


def test_criterion_08_generalization_matrix(tmp_path):
    from botcal.cli import main

    with criterion(8, "generalization matrix shape", 600.0) as d:
        args = []
        for c in archetype_corpora():
            write_accounts(tmp_path / f"{c.name}.jsonl", c.accounts)
            write_labels(tmp_path / f"{c.name}.csv", c)
            args += ["--corpus", f"{c.name}={tmp_path / c.name}.jsonl,{tmp_path / c.name}.csv"]
        assert main(["matrix", *args, "--seed", "8", "--trees", "100", "--folds", "5",
                     "--out", str(tmp_path / "m.csv")]) == 0
        cli_csv = (tmp_path / "m.csv").read_text()
        matrix = archetype_matrix(8, 100)
        assert cli_csv == matrix.to_csv()  # independent second run, same seeds
        names = [c.name for c in archetype_corpora()]
        assert len(matrix.cells) == len(names) ** 2
        rows = matrix.rows
        gains = []
        for r in range(1, len(names)):
            before = matrix.get(rows[r - 1], names[r])
            after = matrix.get(rows[r], names[r])
            assert before.mode == "holdout" and after.mode == "cv"
            assert after.accuracy >= before.accuracy
            gains.append(f"{names[r]} {before.accuracy:.3f}->{after.accuracy:.3f}")
        d["gains"] = ", ".join(gains)


def test_criterion_09_auc_oracle():
    with criterion(9, "AUC equals pair enumeration") as d:
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.integers(2, 201))
            y = rng.integers(0, 2, size=n)
            y[0], y[-1] = 0, 1
            s = rng.integers(0, 25, size=n) / 24 if rng.uniform() < 0.5 else rng.uniform(size=n)
            assert auc(s, y) == float(pair_auc(s.tolist(), y.tolist()))
        d["samples"] = 50


def test_criterion_10_end_to_end_determinism(tmp_path):
    import json
    import threading
    import urllib.request

    from botcal.bundle import load_model
    from botcal.cli import main
    from botcal.data import account_to_record
    from botcal.service import make_server

    with criterion(10, "end-to-end determinism and service/CLI parity") as d:
        (tmp_path / "one").mkdir()
        (tmp_path / "two").mkdir()
        first = run_pipeline(tmp_path / "one")
        second = run_pipeline(tmp_path / "two")
        differing = [name for name in first if first[name] != second[name]]
        assert not differing, differing
        accounts = synth(1010, 0.6, 50, 50)[0].accounts
        write_accounts(tmp_path / "q.jsonl", accounts)
        model_path = tmp_path / "one" / "model.botcal"
        assert main(["score", "--model", str(model_path), "--accounts", str(tmp_path / "q.jsonl"),
                     "--out", str(tmp_path / "q.out")]) == 0
        cli = [json.loads(line) for line in (tmp_path / "q.out").read_text().splitlines()]
        srv = make_server(load_model(model_path), port=0)
        threading.Thread(target=srv.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{srv.server_address[1]}/score"
            served = []
            for a in accounts:
                req = urllib.request.Request(url, data=json.dumps(account_to_record(a)).encode(), method="POST")
                with urllib.request.urlopen(req, timeout=30) as resp:
                    served.append(json.loads(resp.read()))
        finally:
            srv.shutdown()
            srv.server_close()
        assert len(served) == 100 and served == cli
        d["artifacts"] = len(first)
