"""Shared builders; pipeline-scale artifacts are memoized per test session."""

from datetime import datetime, timedelta, timezone
from fractions import Fraction
from functools import lru_cache

import numpy as np

from botcal.data import BOT, HUMAN, Account, NeighborSummary, Post
from botcal.evaluation import cross_validate_matrix, make_fold_plan
from botcal.features import DEFAULT_SCHEMA, extract_matrix
from botcal.forest import ForestParams
from botcal.synth import SynthConfig, generate_synthetic

NOW = datetime(2019, 6, 1, tzinfo=timezone.utc)


def make_account(id="a1", posts=(), neighbors=(), **kw):
    base = dict(
        screen_name="alice",
        created_at=NOW - timedelta(days=400),
        followers_count=120,
        friends_count=80,
        statuses_count=900,
        description="coffee and trains",
        lang="en",
        tz_offset_minutes=-300,
        collected_at=NOW,
    )
    base.update(kw)
    return Account(id=id, posts=tuple(posts), neighbors=tuple(neighbors), **base)


def make_posts(n, start=NOW, gap=timedelta(hours=3), text="hello world", source="web", **kw):
    return [Post(text=text, created_at=start - i * gap, source=source, **kw) for i in range(n)]


def neighbors(langs=(), tzs=None, relation="friend"):
    tzs = tzs if tzs is not None else [None] * len(langs)
    return [NeighborSummary(relation=relation, lang=l, tz_offset_minutes=t) for l, t in zip(langs, tzs)]


@lru_cache(maxsize=None)
def synth(seed, separation, n_humans=1000, n_bots=1000, mix=None, name="synthetic"):
    mix_dict = dict(mix) if mix else {"spam": 1.0, "fake_follower": 1.0, "porn_like": 1.0, "political": 1.0}
    corpus = generate_synthetic(SynthConfig(seed=seed, n_humans=n_humans, n_bots=n_bots,
                                            mix=mix_dict, separation=separation, name=name))
    X = extract_matrix(corpus.accounts, DEFAULT_SCHEMA)
    X.setflags(write=False)
    return corpus, X, np.array(corpus.labels)


@lru_cache(maxsize=None)
def pipeline_cv(seed, separation, shuffle=False, n_trees=100, k=5):
    """5-fold CV on a 2,000-account synthetic corpus."""
    _, X, y = synth(seed, separation)
    if shuffle:
        y = np.random.default_rng(seed + 1000).permutation(y)
    params = ForestParams(n_trees=n_trees, seed=seed)
    return cross_validate_matrix(X, y, params, make_fold_plan(y, k, seed), DEFAULT_SCHEMA.fingerprint), y


MATRIX_ARCHETYPES = ("spam", "fake_follower", "political")


def archetype_corpora(separation=0.6, n=300):
    """One single-archetype corpus per name, each with its own humans."""
    return [synth(100 + i, separation, n, n, mix=((a, 1.0),), name=a)[0]
            for i, a in enumerate(MATRIX_ARCHETYPES)]


@lru_cache(maxsize=None)
def archetype_matrix(seed=8, n_trees=100):
    from botcal.evaluation import generalization_matrix

    return generalization_matrix(archetype_corpora(), params=ForestParams(n_trees=n_trees, seed=seed), k=5)


PIPELINE_FILES = ("c.jsonl", "c.csv", "model.botcal", "oof.csv", "cal.json", "reliability.csv",
                  "reliability_cal.csv", "cap.json", "curve.csv", "scores.jsonl")


def run_pipeline(workdir, seed=7, humans=100, bots=100, trees=20, folds=3):
    """synth -> train -> calibrate -> cap-fit -> score through the CLI entry point."""
    from botcal.cli import main

    w = lambda name: str(workdir / name)
    steps = [
        ["synth", "--seed", str(seed), "--humans", str(humans), "--bots", str(bots), "--separation", "0.6",
         "--out", w("c.jsonl"), "--labels", w("c.csv")],
        ["train", "--seed", str(seed), "--trees", str(trees), "--folds", str(folds), "--accounts", w("c.jsonl"),
         "--labels", w("c.csv"), "--model", w("model.botcal"), "--scores-out", w("oof.csv")],
        ["calibrate", "--scores", w("oof.csv"), "--out", w("cal.json"), "--reliability", w("reliability.csv"),
         "--calibrated-reliability", w("reliability_cal.csv"), "--model", w("model.botcal")],
        ["cap-fit", "--scores", w("oof.csv"), "--out", w("cap.json"), "--curve", w("curve.csv"),
         "--model", w("model.botcal")],
        ["score", "--model", w("model.botcal"), "--accounts", w("c.jsonl"), "--out", w("scores.jsonl")],
    ]
    for argv in steps:
        code = main(argv)
        if code != 0:
            raise AssertionError(f"botcal {argv[0]} exited {code}")
    return {name: (workdir / name).read_bytes() for name in PIPELINE_FILES}


# -- independent oracles ------------------------------------------------------

def pair_auc(scores, labels):
    bots = [s for s, y in zip(scores, labels) if y == 1]
    humans = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(Fraction(1) if b > h else Fraction(1, 2) if b == h else Fraction(0) for b in bots for h in humans)
    return wins / (len(bots) * len(humans))


def _gini(ys):
    n = len(ys)
    if n == 0:
        return Fraction(0)
    p = Fraction(sum(ys), n)
    return 1 - p * p - (1 - p) * (1 - p)


def cart_oracle(points, labels):
    """Exhaustive CART: try every feature and every midpoint, keep the lowest
    weighted Gini impurity; ties go to the lower feature, then lower threshold."""
    n = len(labels)
    bots = sum(labels)
    vote = BOT if 2 * bots > n else HUMAN
    if bots in (0, n) or n <= 1:
        return ("leaf", vote)
    best = None
    for f in range(len(points[0])):
        values = sorted({Fraction(p[f]) for p in points})
        for lo, hi in zip(values, values[1:]):
            t = (lo + hi) / 2
            left = [y for p, y in zip(points, labels) if p[f] <= t]
            right = [y for p, y in zip(points, labels) if p[f] > t]
            imp = Fraction(len(left), n) * _gini(left) + Fraction(len(right), n) * _gini(right)
            if best is None or imp < best[0]:
                best = (imp, f, t)
    if best is None:
        return ("leaf", vote)
    _, f, t = best
    li = [i for i, p in enumerate(points) if p[f] <= t]
    ri = [i for i, p in enumerate(points) if p[f] > t]
    return ("split", f, t,
            cart_oracle([points[i] for i in li], [labels[i] for i in li]),
            cart_oracle([points[i] for i in ri], [labels[i] for i in ri]))


def oracle_predict(node, x):
    while node[0] == "split":
        _, f, t, left, right = node
        node = left if x[f] <= t else right
    return node[1]
