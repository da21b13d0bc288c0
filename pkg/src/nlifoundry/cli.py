"""Top-level command line: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from nlifoundry import __version__


def _bool_flag(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {value!r}")


def _ratios(value: str) -> tuple[float, float, float]:
    parts = [float(x) for x in value.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios")
    return tuple(parts)  # type: ignore[return-value]


def build_parser(config: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlifoundry",
        description="corpus foundry and curriculum-learning toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--config", default=None,
        help="key=value file supplying defaults for all flags",
    )
    leaves: list[argparse.ArgumentParser] = []
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="dump -> filtered, length-bounded sentences")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("auto", "xml", "jsonl"), default="auto")
    p.add_argument("--min-len", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="sentences -> distantly supervised pairs")
    p.add_argument("--sentences", required=True)
    p.add_argument("--neutral-rate", default="balance",
                   help="probability in [0,1], or 'balance'")
    p.add_argument("--neutral-mode", choices=("contiguous", "cross-article"),
                   default="contiguous")
    p.add_argument("--keep-cues", type=_bool_flag, default=False,
                   help="leave cues in hypotheses (shortcut-pattern ablation)")
    p.add_argument("--phrases", default=None,
                   help="JSON file with add/remove phrase overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("split", help="assign stratified train/val/test splits")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", type=_ratios, default=(0.906, 0.047, 0.047))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="corpus statistics per split and class")
    p.add_argument("--corpus", required=True)
    p.add_argument("--table2", action="store_true",
                   help="print the class-distribution summary table")
    p.add_argument("--json", dest="json_out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("oversample", help="class-balancing id list for train")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oversample)

    p = sub.add_parser("annotate", help="manual re-annotation campaigns")
    annotate_sub = p.add_subparsers(dest="annotate_command", required=True)
    c = annotate_sub.add_parser("create", help="deal tasks to annotators")
    c.add_argument("--pairs", required=True)
    c.add_argument("--split", default=None,
                   help="restrict to one split (e.g. val or test)")
    c.add_argument("--annotators", required=True,
                   help="comma-separated annotator ids")
    c.add_argument("--votes", type=int, default=3)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_annotate_create)
    s = annotate_sub.add_parser("serve", help="run the annotation service")
    s.add_argument("--campaign", required=True)
    s.add_argument("--port", type=int, default=8400)
    s.add_argument("--guidelines", default=None,
                   help="markdown file shown to annotators")
    s.add_argument("--static", default=None, help="directory with the web UI")
    s.add_argument("--groups", default=None,
                   help="pair_id,group CSV for filtered agreement")
    s.set_defaults(func=cmd_annotate_serve)

    p = sub.add_parser("carto", help="dynamics log -> data map")
    p.add_argument("--dynamics", required=True)
    p.add_argument("--gold", required=True, help="pairs JSONL with gold labels")
    p.add_argument("--fraction", type=float, default=1 / 3)
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-plot", default=None)
    p.set_defaults(func=cmd_carto)

    p = sub.add_parser("schedule", help="build a curriculum batch schedule")
    p.add_argument("--strategy", required=True,
                   choices=("standard", "length", "sts", "cart", "cartpp",
                            "cartstrapp"))
    p.add_argument("--pairs", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--dynamics", default=None,
                   help="data-map CSV (cart, cartpp, cartstrapp)")
    p.add_argument("--scores", default=None,
                   help="JSON id->score file (external similarity scores)")
    p.add_argument("--n", type=int, required=True, help="total batches")
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--curriculum-fraction", type=float, default=0.5)
    p.add_argument("--oversample", action="store_true",
                   help="balance the pool before scheduling")
    p.add_argument("--hashed-dim", type=int, default=300,
                   help="feature dim for the sts strategy")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("train", help="fit a shallow classifier on a schedule")
    p.add_argument("--pairs", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--schedule", default=None)
    p.add_argument("--model", choices=("softmax", "svm"), default="softmax")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--hashed-dim", type=int, default=300)
    p.add_argument("--mode", choices=("both", "hypothesis-only"), default="both")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--reg-c", dest="reg_c", type=float, default=None,
                   help="inverse l2 strength C (softmax 1, svm 0.5)")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--val-split", default=None,
                   help="split used for early stopping")
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dynamics-out", default=None)
    p.add_argument("--model-out", required=True)
    p.add_argument("--model-json", default=None, help="debug JSON export")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label pairs with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--hashed-dim", type=int, default=300)
    p.add_argument("--mode", choices=("both", "hypothesis-only"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="metrics and significance tests")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)
    r = eval_sub.add_parser("report", help="per-class and aggregate metrics")
    r.add_argument("--gold", required=True)
    r.add_argument("--split", default=None)
    r.add_argument("--pred", required=True)
    r.add_argument("--report", required=True)
    r.set_defaults(func=cmd_eval_report)
    c = eval_sub.add_parser("compare", help="significance tests between two models")
    c.add_argument("--gold", required=True)
    c.add_argument("--split", default=None)
    c.add_argument("--pred-a", required=True)
    c.add_argument("--pred-b", required=True)
    c.add_argument("--tests", default="cochran,mannwhitney")
    c.add_argument("--report", default=None)
    c.set_defaults(func=cmd_eval_compare)

    if config:
        _apply_config(parser, config, leaves)
    return parser


def _apply_config(parser, config: dict, leaves: list) -> None:
    """Replace option defaults everywhere the config names one.

    Subcommands parse into their own namespace, so the defaults must be
    rewritten on every (nested) subparser, not just the root.
    """

    def walk(p):
        leaves.append(p)
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                for child in action.choices.values():
                    walk(child)

    walk(parser)
    for p in leaves:
        dests = {a.dest for a in p._actions}
        matching = {k: v for k, v in config.items() if k in dests}
        if matching:
            p.set_defaults(**matching)


# --- helpers ----------------------------------------------------------------

def _open_dump(path: str):
    import bz2
    import gzip

    if path.endswith(".bz2"):
        return bz2.open(path, "rb")
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _load_split_pairs(path: str, split: str | None):
    from nlifoundry.corpus import read_corpus

    corpus = read_corpus(path)
    if split is None:
        return corpus, corpus.pairs
    selected = corpus.pairs_in(split)
    if not selected and split != "unassigned":
        # corpora without assignments: treat the whole file as the split
        assigned = set(corpus.split_assignment.values())
        if not assigned:
            return corpus, corpus.pairs
    return corpus, selected


def _read_predictions(path: str) -> dict[str, object]:
    from nlifoundry.relations import parse_relation

    out: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            out[record["pair_id"]] = parse_relation(record["label"])
    return out


def _embedding_table(args):
    from nlifoundry.trainer import hashed_table, load_embeddings

    if args.embeddings:
        return load_embeddings(args.embeddings, seed=args.seed)
    return hashed_table(args.hashed_dim, seed=args.seed)


# --- subcommand implementations ----------------------------------------------

def cmd_ingest(args) -> int:
    from nlifoundry.ingest import filter_pages, parse_dump, split_sentences
    from nlifoundry.ingest.sentences import write_sentences
    from nlifoundry.ingest.wikitext import page_to_article
    from nlifoundry.manifest import write_manifest

    counters: dict = {}

    def sentences():
        with _open_dump(args.input) as source:
            for page in parse_dump(source):
                if filter_pages(page, counters) is None:
                    continue
                article = page_to_article(page, counters)
                yield from split_sentences(article, args.min_len)

    count = write_sentences(sentences(), args.out)
    write_manifest(args.out, "ingest", vars(args), [args.input])
    print(f"wrote {count} sentences to {args.out}")
    if counters:
        print("counters:", json.dumps(counters, sort_keys=True))
    return 0


def cmd_label(args) -> int:
    from nlifoundry.corpus import Corpus, write_corpus
    from nlifoundry.ingest.sentences import read_sentences
    from nlifoundry.labeler import ExtractionStats, extract_pairs, load_phrase_table
    from nlifoundry.manifest import write_manifest

    overrides = None
    if args.phrases:
        overrides = json.loads(Path(args.phrases).read_text(encoding="utf-8"))
    table = load_phrase_table(overrides)
    sentences = read_sentences(args.sentences)
    rate = args.neutral_rate
    if rate != "balance":
        rate = float(rate)
    stats = ExtractionStats()
    pairs = extract_pairs(
        sentences,
        table,
        neutral_rate=rate,
        neutral_mode=args.neutral_mode,
        keep_cues=args.keep_cues,
        seed=args.seed,
        stats=stats,
    )
    write_corpus(Corpus(pairs=pairs), args.out)
    write_manifest(args.out, "label", vars(args), [args.sentences, args.phrases])
    print(f"wrote {len(pairs)} pairs to {args.out}")
    print("emitted:", json.dumps(stats.emitted, sort_keys=True),
          f"(discarded empty: {stats.discarded_empty_hypothesis})")
    return 0


def cmd_split(args) -> int:
    from nlifoundry.corpus import read_corpus, stratified_split, write_corpus
    from nlifoundry.manifest import write_manifest

    corpus = read_corpus(args.corpus)
    corpus = stratified_split(corpus, args.ratios, args.seed)
    write_corpus(corpus, args.out)
    write_manifest(args.out, "split", vars(args), [args.corpus])
    sizes = {s: len(corpus.pairs_in(s)) for s in ("train", "val", "test")}
    print(f"split sizes: {json.dumps(sizes)}")
    return 0


def cmd_stats(args) -> int:
    from nlifoundry.corpus import compute_stats, format_stats_table, read_corpus

    corpus = read_corpus(args.corpus)
    stats = compute_stats(corpus)
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(stats.to_json(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.json_out}")
    if args.table2 or not args.json_out:
        print(format_stats_table(stats))
    return 0


def cmd_oversample(args) -> int:
    from nlifoundry.corpus import oversample, read_corpus
    from nlifoundry.manifest import write_manifest

    corpus = read_corpus(args.corpus)
    pairs = corpus.pairs_in(args.split) or corpus.pairs
    ids = oversample(pairs, seed=args.seed)
    Path(args.out).write_text("\n".join(ids) + "\n", encoding="utf-8")
    write_manifest(args.out, "oversample", vars(args), [args.corpus])
    print(f"wrote {len(ids)} ids ({len(set(ids))} distinct) to {args.out}")
    return 0


def cmd_annotate_create(args) -> int:
    from nlifoundry.annotate import create_campaign, save_campaign
    from nlifoundry.manifest import write_manifest

    _, pairs = _load_split_pairs(args.pairs, args.split)
    annotators = [a.strip() for a in args.annotators.split(",") if a.strip()]
    campaign = create_campaign(pairs, annotators, args.votes)
    save_campaign(campaign, args.out)
    write_manifest(args.out, "annotate-create", vars(args), [args.pairs])
    print(f"campaign with {len(campaign.tasks)} tasks for {len(annotators)} "
          f"annotators -> {args.out}")
    return 0


def cmd_annotate_serve(args) -> int:
    from nlifoundry.annotate import DEFAULT_GUIDELINES, load_campaign
    from nlifoundry.annotate_server import load_group_file, serve

    campaign = load_campaign(args.campaign)
    guidelines = DEFAULT_GUIDELINES
    if args.guidelines:
        guidelines = Path(args.guidelines).read_text(encoding="utf-8")
    groups = load_group_file(args.groups) if args.groups else None
    static = args.static
    if static is None and Path("frontend/dist/index.html").is_file():
        static = "frontend/dist"
    serve(campaign, args.campaign, args.port, guidelines, static, groups)
    return 0


def cmd_carto(args) -> int:
    from nlifoundry.cartography import (
        assign_groups,
        compute_points,
        export_map,
        read_dynamics,
    )
    from nlifoundry.corpus import read_corpus
    from nlifoundry.manifest import write_manifest

    records = read_dynamics(args.dynamics)
    gold = {p.pair_id: p.label for p in read_corpus(args.gold).pairs}
    points = assign_groups(compute_points(records, gold), args.fraction)
    export_map(points, args.out_csv, args.out_plot)
    write_manifest(args.out_csv, "carto", vars(args), [args.dynamics, args.gold])
    print(f"wrote {len(points)} points to {args.out_csv}")
    return 0


def cmd_schedule(args) -> int:
    from nlifoundry.cartography import group_pools, read_points_csv
    from nlifoundry.corpus import oversample
    from nlifoundry.curriculum import (
        PacingConfig,
        length_scores,
        schedule_cart_cl,
        schedule_cart_stra_clpp,
        schedule_scored,
        schedule_standard,
        similarity_scores,
        write_schedule,
    )
    from nlifoundry.manifest import write_manifest

    _, pairs = _load_split_pairs(args.pairs, args.split)
    cfg = PacingConfig(
        total_batches=args.n,
        batch_size=args.batch,
        curriculum_fraction=args.curriculum_fraction,
        seed=args.seed,
    )
    pool = (
        oversample(pairs, seed=args.seed)
        if args.oversample
        else [p.pair_id for p in pairs]
    )
    pool_set = set(pool)

    def map_scores() -> dict[str, float]:
        points = read_points_csv(args.dynamics)
        return {p.example_id: p.score for p in points if p.example_id in pool_set}

    if args.strategy == "standard":
        schedule = schedule_standard(pool, cfg)
    elif args.strategy == "length":
        schedule = schedule_scored(
            length_scores(pairs), cfg, pool=pool, strategy="length"
        )
    elif args.strategy == "sts":
        if args.scores:
            scores = {
                k: float(v)
                for k, v in json.loads(
                    Path(args.scores).read_text(encoding="utf-8")
                ).items()
            }
        else:
            from nlifoundry.trainer import featurize_pairs

            table = _embedding_table(args)
            ids, matrix = featurize_pairs(pairs, table)
            scores = similarity_scores(dict(zip(ids, matrix)))
        schedule = schedule_scored(scores, cfg, pool=pool, strategy="sts")
    elif args.strategy == "cart":
        if not args.dynamics:
            raise SystemExit("--dynamics (data-map CSV) is required for cart")
        points = [
            p for p in read_points_csv(args.dynamics) if p.example_id in pool_set
        ]
        schedule = schedule_cart_cl(group_pools(points), cfg)
    elif args.strategy == "cartpp":
        if not args.dynamics:
            raise SystemExit("--dynamics (data-map CSV) is required for cartpp")
        schedule = schedule_scored(map_scores(), cfg, pool=pool, strategy="cartpp")
    else:  # cartstrapp
        if not args.dynamics:
            raise SystemExit("--dynamics (data-map CSV) is required for cartstrapp")
        labels = {p.pair_id: p.label for p in pairs}
        schedule = schedule_cart_stra_clpp(map_scores(), labels, cfg)

    write_schedule(schedule, args.out)
    write_manifest(args.out, "schedule", vars(args),
                   [args.pairs, args.dynamics, args.scores])
    print(f"wrote {len(schedule.batches)} batches "
          f"(curriculum boundary {schedule.phase_boundary}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    from nlifoundry.cartography import write_dynamics
    from nlifoundry.curriculum import read_schedule
    from nlifoundry.manifest import write_manifest
    from nlifoundry.trainer import (
        LinearSvmClassifier,
        SoftmaxClassifier,
        featurize_pairs,
        model_to_json,
        save_model,
    )

    corpus, pairs = _load_split_pairs(args.pairs, args.split)
    if not pairs:
        raise SystemExit(f"no pairs in split {args.split!r}")
    table = _embedding_table(args)
    ids, X = featurize_pairs(pairs, table, args.mode)
    y = [p.label for p in pairs]

    if args.model == "softmax":
        cls, defaults = SoftmaxClassifier, {"C": 1.0, "tol": 1e-3, "epochs": 10}
    else:
        cls, defaults = LinearSvmClassifier, {"C": 0.5, "tol": 1e-5, "epochs": 2500}
    model = cls(
        learning_rate=args.lr,
        C=args.reg_c if args.reg_c is not None else defaults["C"],
        tol=args.tol if args.tol is not None else defaults["tol"],
        epochs=args.epochs if args.epochs is not None else defaults["epochs"],
        batch_size=args.batch,
        seed=args.seed,
        patience=args.patience,
    )
    schedule = read_schedule(args.schedule) if args.schedule else None
    X_val = y_val = None
    if args.val_split:
        val_pairs = corpus.pairs_in(args.val_split)
        if val_pairs:
            _, X_val = featurize_pairs(val_pairs, table, args.mode)
            y_val = [p.label for p in val_pairs]
    model.fit(X, y, example_ids=ids, schedule=schedule, X_val=X_val, y_val=y_val)

    save_model(model, args.model_out)
    inputs = [args.pairs, args.schedule, args.embeddings]
    write_manifest(args.model_out, "train", vars(args), inputs)
    if args.dynamics_out:
        write_dynamics(model.dynamics_, args.dynamics_out)
        write_manifest(args.dynamics_out, "train", vars(args), inputs)
    if args.model_json:
        Path(args.model_json).write_text(
            json.dumps(model_to_json(model), indent=2) + "\n", encoding="utf-8"
        )
    last = model.history_[-1] if model.history_ else {}
    print(
        f"trained {args.model} for {model.n_epochs_run_} epochs "
        f"(loss {last.get('loss', float('nan')):.4f}, "
        f"digest {model.weights_digest()[:12]})"
    )
    return 0


def cmd_predict(args) -> int:
    from nlifoundry.manifest import write_manifest
    from nlifoundry.trainer import featurize_pairs, load_model

    model = load_model(args.model)
    _, pairs = _load_split_pairs(args.pairs, args.split)
    table = _embedding_table(args)
    ids, X = featurize_pairs(pairs, table, args.mode)
    probs = model.predict_proba(X)
    labels = model.predict(X)
    with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
        for pair_id, label, row in zip(ids, labels, probs):
            handle.write(
                json.dumps(
                    {
                        "pair_id": pair_id,
                        "label": str(label),
                        "probabilities": [float(v) for v in row],
                    }
                )
                + "\n"
            )
    write_manifest(args.out, "predict", vars(args), [args.model, args.pairs])
    print(f"wrote {len(ids)} predictions to {args.out}")
    return 0


def cmd_eval_report(args) -> int:
    from nlifoundry.evaluation import classification_report
    from nlifoundry.manifest import write_manifest

    _, pairs = _load_split_pairs(args.gold, args.split)
    predictions = _read_predictions(args.pred)
    gold, pred = [], []
    for pair in pairs:
        if pair.pair_id not in predictions:
            raise SystemExit(f"no prediction for pair {pair.pair_id!r}")
        gold.append(pair.label)
        pred.append(predictions[pair.pair_id])
    report = classification_report(gold, pred)
    Path(args.report).write_text(
        json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    write_manifest(args.report, "eval-report", vars(args), [args.gold, args.pred])
    print(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f} "
          f"-> {args.report}")
    return 0


def cmd_eval_compare(args) -> int:
    import numpy as np

    from nlifoundry.evaluation import cochran_q, mann_whitney_u
    from nlifoundry.manifest import write_manifest

    _, pairs = _load_split_pairs(args.gold, args.split)
    pred_a = _read_predictions(args.pred_a)
    pred_b = _read_predictions(args.pred_b)
    correct_a, correct_b = [], []
    for pair in pairs:
        if pair.pair_id not in pred_a or pair.pair_id not in pred_b:
            raise SystemExit(f"missing prediction for pair {pair.pair_id!r}")
        correct_a.append(int(pred_a[pair.pair_id] is pair.label))
        correct_b.append(int(pred_b[pair.pair_id] is pair.label))

    results = {}
    wanted = {t.strip() for t in args.tests.split(",") if t.strip()}
    if "cochran" in wanted:
        matrix = np.column_stack([correct_a, correct_b])
        results["cochran_q"] = cochran_q(matrix).to_json()
    if "mannwhitney" in wanted:
        try:
            result = mann_whitney_u(correct_a, correct_b, mode="exact")
        except ValueError:
            # tied samples too large to enumerate: use the approximation
            result = mann_whitney_u(correct_a, correct_b, mode="normal")
        results["mann_whitney_u"] = result.to_json()
    unknown = wanted - {"cochran", "mannwhitney"}
    if unknown:
        raise SystemExit(f"unknown tests: {sorted(unknown)}")

    body = json.dumps(results, indent=2)
    print(body)
    if args.report:
        Path(args.report).write_text(body + "\n", encoding="utf-8")
        write_manifest(args.report, "eval-compare", vars(args),
                       [args.gold, args.pred_a, args.pred_b])
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # config-file values become option defaults, so explicit flags still win
    config = None
    if "--config" in argv:
        from nlifoundry.manifest import read_config

        config = read_config(argv[argv.index("--config") + 1])
    args = build_parser(config).parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
