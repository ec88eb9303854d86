"""``botcal`` command line.

Exit status: 0 success, 1 validation/usage error, 2 runtime error.
Every random choice derives from ``--seed`` (falling back to $BOTCAL_SEED).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from botcal import bundle as bundle_io
from botcal.calibration import calibrate, fit_platt, reliability
from botcal.data import LABEL_NAMES, LABEL_TOKENS, load_corpus, read_accounts, write_accounts, write_labels
from botcal.errors import BotcalError, ValidationError
from botcal.evaluation import Metrics, cross_validate, generalization_matrix
from botcal.features import DEFAULT_SCHEMA
from botcal.forest import ForestParams
from botcal.pipeline import respond, train_bundle
from botcal.posterior import DEFAULT_DEGREE, DEFAULT_PRIOR, curve_csv, fit_cap, validate_prior
from botcal.synth import ARCHETYPES, SynthConfig, generate_synthetic

log = logging.getLogger("botcal")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValidationError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def default_seed() -> int:
    env = os.environ.get("BOTCAL_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BOTCAL_SEED must be an integer, got {env!r}")


def parse_mix(text: str) -> dict:
    mix = {}
    for part in text.split(","):
        name, _, weight = part.partition("=")
        name = name.strip()
        if name not in ARCHETYPES:
            raise UsageError(f"unknown archetype {name!r}; choose from {', '.join(ARCHETYPES)}")
        try:
            mix[name] = float(weight) if weight else 1.0
        except ValueError:
            raise UsageError(f"bad weight for archetype {name!r}: {weight!r}")
    return mix


def forest_params(args) -> ForestParams:
    return ForestParams(n_trees=args.trees, seed=args.seed, min_leaf=args.min_leaf,
                        features_per_split=args.mtry)


def read_scores(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Read a score CSV with columns score,label and an optional id column."""
    ids, scores, labels = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"score", "label"} <= set(reader.fieldnames):
            raise ValidationError(f"{path}: expected columns score,label")
        for rowno, row in enumerate(reader, 2):
            token = row["label"].strip().lower()
            if token in LABEL_TOKENS:
                y = LABEL_TOKENS[token]
            elif token in ("0", "1"):
                y = int(token)
            else:
                raise ValidationError(f"{path}:{rowno}: unknown label {row['label']!r}")
            try:
                s = float(row["score"])
            except ValueError:
                raise ValidationError(f"{path}:{rowno}: bad score {row['score']!r}")
            ids.append(row.get("id") or str(rowno - 1))
            scores.append(s)
            labels.append(y)
    return ids, np.array(scores), np.array(labels, dtype=np.int64)


def write_scores(path, ids, scores, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id,score,label\n")
        for i, s, y in zip(ids, scores, labels):
            fh.write(f"{i},{float(s)!r},{LABEL_NAMES[int(y)]}\n")


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


# -- subcommands ------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = SynthConfig(seed=args.seed, n_humans=args.humans, n_bots=args.bots,
                      mix=parse_mix(args.mix) if args.mix else {a: 1.0 for a in ARCHETYPES},
                      separation=args.separation, name=args.name)
    corpus = generate_synthetic(cfg)
    write_accounts(args.out, corpus.accounts)
    write_labels(args.labels, corpus)
    log.info("wrote %d accounts to %s", len(corpus), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = load_corpus(args.accounts, args.labels, name=args.name)
    model, cv = train_bundle(corpus, DEFAULT_SCHEMA, forest_params(args), k=args.folds,
                             smooth_targets=not args.no_smooth, degree=args.degree, prior=args.prior)
    bundle_io.save_model(model, args.model)
    if args.scores_out:
        write_scores(args.scores_out, [a.id for a in corpus.accounts], cv.scores, corpus.labels)
    log.info("trained %s: out-of-fold AUC %.4f", args.model, cv.metrics.auc)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _, s, y = read_scores(args.scores)
    cal = fit_platt(s, y, smooth_targets=not args.no_smooth, provenance=f"scores from {Path(args.scores).name}")
    _write_json(args.out, cal.to_dict())
    if args.reliability:
        Path(args.reliability).write_text(reliability(s, y).to_csv(), encoding="utf-8")
    if args.calibrated_reliability:
        Path(args.calibrated_reliability).write_text(reliability(calibrate(cal, s), y).to_csv(), encoding="utf-8")
    if args.model:
        model = bundle_io.load_model(args.model)
        bundle_io.save_model(model.replace(calibrator=cal), args.model)
    return EXIT_OK


def cmd_cap_fit(args) -> int:
    _, s, y = read_scores(args.scores)
    cap_model = fit_cap(s, y, degree=args.degree, prior=args.prior)
    _write_json(args.out, cap_model.to_dict())
    if args.curve:
        Path(args.curve).write_text(curve_csv(cap_model, resolution=args.resolution), encoding="utf-8")
    if args.model:
        model = bundle_io.load_model(args.model)
        bundle_io.save_model(model.replace(cap_model=cap_model), args.model)
    return EXIT_OK


def cmd_score(args) -> int:
    prior = validate_prior(args.prior) if args.prior is not None else None
    model = bundle_io.load_model(args.model)
    accounts = read_accounts(args.accounts)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for a in accounts:
            r = respond(model, a, prior)
            if args.format == "table":
                out.write(f"{r.id}\traw={r.raw:.2f}\tdisplay={r.display:.1f}/5\tcap={r.cap:.3f}\n")
            else:
                out.write(json.dumps(r.to_dict()) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.accounts, args.labels, name=args.name)
    if args.shuffle_labels:
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 7919]))
        corpus = corpus.relabeled(rng.permutation(corpus.labels), name=f"{corpus.name}-shuffled")
    cv = cross_validate(corpus, DEFAULT_SCHEMA, forest_params(args), k=args.folds)
    text = Metrics.header() + "\n" + cv.metrics.csv_row(corpus.name) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.scores_out:
        write_scores(args.scores_out, [a.id for a in corpus.accounts], cv.scores, corpus.labels)
    return EXIT_OK


def parse_corpus_arg(text: str):
    name, eq, paths = text.partition("=")
    accounts, comma, labels = paths.partition(",")
    if not (eq and comma and name):
        raise UsageError(f"--corpus expects NAME=ACCOUNTS,LABELS, got {text!r}")
    return load_corpus(accounts, labels, name=name)


def cmd_matrix(args) -> int:
    corpora = [parse_corpus_arg(c) for c in args.corpus]
    matrix = generalization_matrix(corpora, DEFAULT_SCHEMA, forest_params(args), k=args.folds, mode=args.mode)
    if args.out:
        Path(args.out).write_text(matrix.to_csv(), encoding="utf-8")
    else:
        sys.stdout.write(matrix.to_csv())
    return EXIT_OK


def cmd_serve(args) -> int:
    from botcal.service import serve

    prior = validate_prior(args.prior) if args.prior is not None else None
    serve(bundle_io.load_model(args.model), args.host, args.port, prior)
    return EXIT_OK


def cmd_schema(args) -> int:
    sys.stdout.write(DEFAULT_SCHEMA.to_csv())
    return EXIT_OK


def build_parser() -> Parser:
    p = Parser(prog="botcal", description="Bot scores, Platt calibration and complete automation probability.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def with_seed(sp):
        sp.add_argument("--seed", type=int, default=None, help="random seed (default $BOTCAL_SEED or 0)")

    def with_forest(sp):
        with_seed(sp)
        sp.add_argument("--trees", type=int, default=100)
        sp.add_argument("--min-leaf", type=int, default=1)
        sp.add_argument("--mtry", type=int, default=None, help="features per split (default ceil(sqrt(d)))")
        sp.add_argument("--folds", type=int, default=5)

    sp = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    with_seed(sp)
    sp.add_argument("--humans", type=int, default=500)
    sp.add_argument("--bots", type=int, default=500)
    sp.add_argument("--separation", type=float, default=1.0)
    sp.add_argument("--mix", default=None, help="archetype weights, e.g. spam=1,political=2")
    sp.add_argument("--name", default="synthetic")
    sp.add_argument("--out", required=True, help="accounts JSONL")
    sp.add_argument("--labels", required=True, help="labels CSV")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="train forests, Platt calibrator and CAP model")
    with_forest(sp)
    sp.add_argument("--accounts", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--name", default=None)
    sp.add_argument("--model", required=True, help="output model bundle")
    sp.add_argument("--scores-out", default=None, help="write out-of-fold raw scores CSV")
    sp.add_argument("--no-smooth", action="store_true", help="disable Platt target smoothing")
    sp.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    sp.add_argument("--prior", type=float, default=DEFAULT_PRIOR)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("calibrate", help="fit Platt scaling on a score,label CSV")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--out", required=True, help="calibrator JSON")
    sp.add_argument("--reliability", default=None, help="reliability CSV of the input scores")
    sp.add_argument("--calibrated-reliability", default=None, help="reliability CSV after calibration")
    sp.add_argument("--no-smooth", action="store_true")
    sp.add_argument("--model", default=None, help="also store the calibrator in this bundle")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("cap-fit", help="fit Bernstein likelihoods for CAP")
    sp.add_argument("--scores", required=True, help="held-out raw score,label CSV")
    sp.add_argument("--out", required=True, help="CAP model JSON")
    sp.add_argument("--curve", default=None, help="density/posterior curve CSV")
    sp.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    sp.add_argument("--prior", type=float, default=DEFAULT_PRIOR)
    sp.add_argument("--resolution", type=int, default=101)
    sp.add_argument("--model", default=None, help="also store the CAP model in this bundle")
    sp.set_defaults(func=cmd_cap_fit)

    sp = sub.add_parser("score", help="score accounts with a model bundle")
    sp.add_argument("--model", required=True)
    sp.add_argument("--accounts", required=True)
    sp.add_argument("--prior", type=float, default=None, help="CAP prior override")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("json", "table"), default="json")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("evaluate", help="k-fold cross-validation metrics")
    with_forest(sp)
    sp.add_argument("--accounts", required=True)
    sp.add_argument("--labels", required=True)
    sp.add_argument("--name", default=None)
    sp.add_argument("--shuffle-labels", action="store_true", help="permutation control")
    sp.add_argument("--out", default=None)
    sp.add_argument("--scores-out", default=None)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("matrix", help="cross-dataset generalization accuracy grid")
    with_forest(sp)
    sp.add_argument("--corpus", action="append", required=True, metavar="NAME=ACCOUNTS,LABELS")
    sp.add_argument("--mode", choices=("cumulative", "leave-one-out"), default="cumulative")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("serve", help="run the HTTP scoring service")
    sp.add_argument("--model", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--prior", type=float, default=None)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("schema", help="print the feature roster as CSV")
    sp.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if hasattr(args, "seed") and args.seed is None:
            args.seed = default_seed()
        return args.func(args)
    except ValidationError as exc:
        print(f"botcal: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK
    except (BotcalError, OSError) as exc:
        print(f"botcal: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
