"""Command line interface: train / predict / evaluate / update / bench / synth.

Exit codes: 0 success, 2 validation or configuration error, 3 data error,
4 model-format error. Every command logs its fully resolved configuration
and, when it writes a primary output, drops a ``<output>.config.json``
next to it so runs can be reproduced from their artifacts.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
from filelock import FileLock

from . import __version__
from .centroids import apply_increment, build_centroids
from .classifier import DualCentroidClassifier, KnnBaseline, MajorityBaseline, RandomBaseline
from .data import (
    SplitSpec,
    clean,
    balance_cap,
    ingest,
    merge_small_categories,
    stratified_split,
    tickets_to_texts,
    write_dataset,
    write_rejects,
)
from .errors import (
    DataError,
    EmbeddingNotFoundError,
    ModelFormatError,
    ReclusterRequiredError,
    ValidationError,
)
from .evaluation import EvalReport, aggregate_runs, evaluate_predictions, render_table
from .persist import load_model
from .synth import SynthSpec, generate_synthetic, write_synthetic
from .taxonomy import TaxonomyTree

logger = logging.getLogger("dualcentroid")

MODEL_OPTION_KEYS = (
    "scoring",
    "rrf_k",
    "top_k",
    "multi_centroid",
    "cluster_min_samples",
    "max_clusters",
    "child_sampling",
    "child_sample_proportion",
    "max_features",
    "min_df",
    "max_df",
    "embedding_dim",
    "embedder",
    "embedding_source",
    "seed",
)


def _common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master random seed (default 0)")
    parser.add_argument(
        "--config", type=Path, default=None, help="JSON file with option defaults"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")


def _model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scoring", choices=["leaf_only", "simple_average", "weighted"], default=None)
    parser.add_argument("--rrf-k", type=float, default=None, dest="rrf_k")
    parser.add_argument("--top-k", type=int, default=None, dest="top_k")
    parser.add_argument("--multi-centroid", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--cluster-min-samples", type=int, default=None)
    parser.add_argument("--max-clusters", type=int, default=None)
    parser.add_argument("--child-sampling", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--child-sample-proportion", type=float, default=None)
    parser.add_argument("--max-features", type=int, default=None)
    parser.add_argument("--min-df", type=int, default=None)
    parser.add_argument("--max-df", type=float, default=None)
    parser.add_argument("--embedding-dim", type=int, default=None)
    parser.add_argument("--embedder", choices=["hash", "precomputed"], default=None)
    parser.add_argument(
        "--embeddings",
        type=Path,
        default=None,
        dest="embedding_source",
        help="precomputed embedding sidecar (implies --embedder precomputed)",
    )


class Resolver:
    """Layers option values: CLI flag > config file > built-in default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_config: dict = {}
        if getattr(args, "config", None):
            try:
                self.file_config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except OSError as exc:
                raise ValidationError(f"cannot read config file {args.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config file {args.config} is not valid JSON: {exc}") from exc
            if not isinstance(self.file_config, dict):
                raise ValidationError(f"config file {args.config} must hold a JSON object")
        self.resolved: dict = {}

    def get(self, key: str, default):
        value = getattr(self.args, key, None)
        if value is None:
            value = self.file_config.get(key, default)
        if isinstance(value, Path):
            value = str(value)
        self.resolved[key] = value
        return value

    def model_params(self) -> dict:
        defaults = {
            "scoring": "leaf_only",
            "rrf_k": 40.0,
            "top_k": 3,
            "multi_centroid": False,
            "cluster_min_samples": 50,
            "max_clusters": 5,
            "child_sampling": False,
            "child_sample_proportion": 0.5,
            "max_features": 10_000,
            "min_df": 2,
            "max_df": 0.95,
            "embedding_dim": 512,
            "embedder": "hash",
            "embedding_source": None,
            "seed": 0,
        }
        params = {k: self.get(k, defaults[k]) for k in MODEL_OPTION_KEYS}
        # config-file-only knobs (no dedicated flags)
        for key in ("depth_weights", "ngram_range"):
            value = self.get(key, None)
            if value is not None:
                params[key] = tuple(value)
        if params["embedding_source"] and params["embedder"] == "hash":
            params["embedder"] = "precomputed"
            self.resolved["embedder"] = "precomputed"
        return params

    def log(self) -> None:
        logger.info("resolved config: %s", json.dumps(self.resolved, sort_keys=True))


def _write_resolved_config(primary: Path, resolved: dict) -> None:
    out = primary.with_name(primary.name + ".config.json")
    out.write_text(json.dumps(resolved, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("resolved config written to %s", out)


def _load_prepared(path: Path) -> tuple[list[str], list[str], list[str]]:
    """(ids, texts, paths) from a labeled dataset file, applying the cleaning
    rules but no merging/capping."""
    tickets, rejects = ingest(path)
    if rejects:
        logger.warning("%s: %d malformed row(s) skipped", path, len(rejects))
    samples, _ = clean(tickets)
    if not samples:
        raise DataError(f"{path}: no usable labeled samples after cleaning")
    return tickets_to_texts(samples)


# -- train ---------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    res = Resolver(args)
    params = res.model_params()
    min_samples = res.get("min_samples", 10)
    max_per_category = res.get("max_per_category", 200)
    split_fracs = res.get("split", "0.8,0.1,0.1")
    seed = params["seed"]

    data_path = Path(args.data)
    model_path = Path(args.model)
    out_dir = Path(args.out_dir) if args.out_dir else model_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)

    res.log()
    tickets, rejects = ingest(data_path)
    if rejects:
        rejects_path = out_dir / (data_path.stem + ".rejects.csv")
        write_rejects(rejects, rejects_path)
        logger.warning("%d malformed row(s) written to %s", len(rejects), rejects_path)
    samples, drops = clean(tickets)
    if not samples:
        raise DataError(f"{data_path}: no usable samples after cleaning")
    samples = merge_small_categories(samples, min_samples)
    if not samples:
        raise DataError(f"{data_path}: every category fell below min_samples={min_samples}")
    samples = balance_cap(samples, max_per_category, seed)

    fracs = [float(x) for x in str(split_fracs).split(",")]
    if len(fracs) != 3:
        raise ValidationError(f"--split expects three comma-separated fractions, got {split_fracs!r}")
    spec = SplitSpec(train=fracs[0], validation=fracs[1], test=fracs[2], seed=seed)
    train, val, test = stratified_split(samples, spec)
    for name, part in (("train", train), ("validation", val), ("test", test)):
        write_dataset(part, out_dir / f"{name}.csv")

    ids, texts, paths = tickets_to_texts(train)
    clf = DualCentroidClassifier(**params)
    keys = ids if params["embedder"] == "precomputed" else None
    clf.fit(texts, paths, semantic_keys=keys)
    clf.save(model_path)

    report = {
        "dataset": str(data_path),
        "model": str(model_path),
        "rows_ingested": len(tickets),
        "rows_rejected": len(rejects),
        "drops": drops,
        "samples_after_prep": len(samples),
        "split_sizes": {"train": len(train), "validation": len(val), "test": len(test)},
        "taxonomy": {
            "total_nodes": clf.tree_.n_nodes,
            "leaves": clf.tree_.n_leaves,
            "internal": clf.tree_.n_internal,
            "stale": clf.tree_.n_stale,
            "predictable": clf.tree_.n_predictable,
        },
        "depth_histogram": {str(k): v for k, v in clf.tree_.depth_histogram().items()},
        "timings": clf.timings_,
    }
    report_path = out_dir / "train_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    # debugging dump: one "path<TAB>kind<TAB>count" line per node
    (out_dir / "taxonomy.txt").write_text(
        "\n".join(clf.tree_.summary_lines()) + "\n", encoding="utf-8"
    )
    _write_resolved_config(model_path, res.resolved)

    print(f"trained on {len(train)} samples, {clf.tree_.n_predictable} categories")
    print(
        f"taxonomy: {clf.tree_.n_nodes} nodes "
        f"({clf.tree_.n_leaves} leaves, {clf.tree_.n_internal} internal, {clf.tree_.n_stale} stale)"
    )
    print(
        f"timings: embedding {clf.timings_['embedding_s']:.3f}s, "
        f"centroids {clf.timings_['centroid_s']:.3f}s"
    )
    print(f"model written to {model_path}; report at {report_path}")
    return 0


# -- predict ---------------------------------------------------------------------


def _read_queries(path: Path) -> list[tuple[str, str]]:
    """(query id, text) pairs from a dataset file, JSON lines, or plain text
    lines (one query per line)."""
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read queries {path}: {exc}") from exc
    if not raw.strip():
        raise DataError(f"{path} is empty")
    first = raw.splitlines()[0]
    if first.lstrip().startswith("{"):
        out = []
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: bad json query record: {exc.msg}") from exc
            text = rec.get("text") or " ".join(
                x for x in (rec.get("title", ""), rec.get("description", "")) if x
            )
            out.append((str(rec.get("id", f"q{lineno}")), text))
        return out
    header = [h.strip().lower() for h in next(csv.reader(io.StringIO(first), delimiter="\t" if "\t" in first else ","))]
    if "id" in header and ("description" in header or "title" in header or "text" in header):
        delim = "\t" if "\t" in first else ","
        reader = csv.DictReader(io.StringIO(raw), delimiter=delim)
        out = []
        for lineno, rec in enumerate(reader, start=2):
            rec = {(k or "").strip().lower(): (v or "") for k, v in rec.items()}
            text = rec.get("text") or " ".join(
                x for x in (rec.get("title", ""), rec.get("description", "")) if x
            )
            out.append((rec.get("id") or f"q{lineno}", text))
        return out
    return [(f"q{i}", line) for i, line in enumerate(raw.splitlines(), start=1) if line.strip()]


def cmd_predict(args: argparse.Namespace) -> int:
    res = Resolver(args)
    k = res.get("k", 3)
    res.log()
    clf = load_model(args.model)

    if args.text is not None:
        queries = [("q1", args.text)]
    elif args.queries is not None:
        queries = _read_queries(Path(args.queries))
    else:
        raise ValidationError("predict needs --text or --queries")

    out_fh = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    missing: list[str] = []
    try:
        for qid, text in queries:
            try:
                prediction = clf.predict_one(
                    text,
                    k=k,
                    semantic_key=qid if clf.config_.embedder == "precomputed" else None,
                )
            except EmbeddingNotFoundError as exc:
                logger.error("query %s: %s", qid, exc)
                missing.append(qid)
                continue
            out_fh.write(json.dumps(prediction.to_record(qid), sort_keys=True) + "\n")
    finally:
        if args.output:
            out_fh.close()
    if args.output:
        _write_resolved_config(Path(args.output), res.resolved)
        logger.info("predictions written to %s", args.output)
    if missing:
        raise DataError(f"{len(missing)} query(ies) had no precomputed embedding: {missing}")
    return 0


# -- evaluate ---------------------------------------------------------------------


def _predict_report(clf, ids, texts, paths, k) -> EvalReport:
    keys = ids if clf.config_.embedder == "precomputed" else None
    predictions = clf.predict_topk(texts, k=k, semantic_keys=keys)
    return evaluate_predictions(paths, predictions, k)


def cmd_evaluate(args: argparse.Namespace) -> int:
    res = Resolver(args)
    k = res.get("k", 3)
    data_path = Path(args.data)

    if args.with_baselines and not args.end_to_end:
        raise ValidationError("--with-baselines requires --end-to-end (baselines need a training split)")
    if args.end_to_end:
        params = res.model_params()
        n_runs = res.get("runs", 5)
        min_samples = res.get("min_samples", 10)
        max_per_category = res.get("max_per_category", 200)
        base_seed = params["seed"]

        tickets, rejects = ingest(data_path)
        if rejects:
            logger.warning("%d malformed row(s) skipped", len(rejects))
        samples, _ = clean(tickets)
        samples = merge_small_categories(samples, min_samples)
        if not samples:
            raise DataError("no samples left after preprocessing")
        samples = balance_cap(samples, max_per_category, base_seed)

        rows: dict[str, list[EvalReport]] = {"dual-centroid": []}
        if args.with_baselines:
            rows.update({"knn": [], "majority": [], "random": []})
        for run in range(n_runs):
            run_seed = base_seed + run
            train, _, test = stratified_split(samples, SplitSpec(seed=run_seed))
            if not test:
                raise DataError("empty test split")
            train_ids, train_texts, train_paths = tickets_to_texts(train)
            test_ids, test_texts, test_paths = tickets_to_texts(test)

            run_params = dict(params, seed=run_seed)
            clf = DualCentroidClassifier(**run_params)
            fit_keys = train_ids if run_params["embedder"] == "precomputed" else None
            clf.fit(train_texts, train_paths, semantic_keys=fit_keys)
            rows["dual-centroid"].append(
                _predict_report(clf, test_ids, test_texts, test_paths, k)
            )
            if args.with_baselines:
                knn = KnnBaseline(seed=run_seed).fit(train_texts, train_paths)
                rows["knn"].append(
                    evaluate_predictions(test_paths, knn.predict_topk(test_texts, k=k), k)
                )
                maj = MajorityBaseline().fit(train_texts, train_paths)
                rows["majority"].append(
                    evaluate_predictions(test_paths, maj.predict_topk(test_texts, k=k), k)
                )
                rnd = RandomBaseline(seed=run_seed).fit(train_texts, train_paths)
                rows["random"].append(
                    evaluate_predictions(test_paths, rnd.predict_topk(test_texts, k=k), k)
                )
        reports = {name: aggregate_runs(rs) for name, rs in rows.items()}
    else:
        if not args.model:
            raise ValidationError("evaluate needs --model, or --end-to-end with --data")
        clf = load_model(args.model)
        ids, texts, paths = _load_prepared(data_path)
        reports = {"dual-centroid": _predict_report(clf, ids, texts, paths, k)}

    res.log()
    print(render_table(reports))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            for name, report in reports.items():
                fh.write(json.dumps(report.to_record(name), sort_keys=True) + "\n")
        _write_resolved_config(Path(args.output), res.resolved)
    return 0


# -- update ---------------------------------------------------------------------


def cmd_update(args: argparse.Namespace) -> int:
    res = Resolver(args)
    model_path = Path(args.model)
    out_path = Path(args.output) if args.output else model_path

    res.log()
    lock = FileLock(str(model_path) + ".lock")
    with lock:
        clf = load_model(model_path)
        ids, texts, paths = _load_prepared(Path(args.data))
        keys = ids if clf.config_.embedder == "precomputed" else None
        clf.partial_fit(texts, paths, semantic_keys=keys)
        clf.save(out_path)

    timings = clf.last_update_timings_
    print(f"applied {len(texts)} new sample(s); model written to {out_path}")
    print(
        f"timings: embedding {timings['embedding_s']:.4f}s (excluded), "
        f"centroid update {timings['update_s']:.4f}s"
    )
    print(f"recomputed {len(clf.last_update_nodes_)} node(s):")
    for path in clf.last_update_nodes_:
        print(f"  {path}")
    _write_resolved_config(out_path, res.resolved)
    return 0


# -- bench ---------------------------------------------------------------------


def _best_of(fn, repeats: int, setup=None) -> float:
    """Minimum wall time across repeats; per-repeat setup stays untimed."""
    best = float("inf")
    for _ in range(repeats):
        state = setup() if setup else None
        t0 = time.perf_counter()
        fn(state) if setup else fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args: argparse.Namespace) -> int:
    res = Resolver(args)
    seed = res.get("seed", 0)
    base_size = res.get("bench_samples", 5000)
    categories = res.get("categories", 50)
    batch_sizes = [int(x) for x in str(res.get("batch_sizes", "1,10,100,1000")).split(",")]
    probes = res.get("probes", 100)
    repeats = res.get("repeats", 3)

    if args.data:
        _, texts, paths = _load_prepared(Path(args.data))
        if len(texts) < max(batch_sizes) + 10:
            raise DataError(
                f"bench needs at least {max(batch_sizes) + 10} samples, got {len(texts)}"
            )
    else:
        spec = SynthSpec(
            categories=categories,
            samples_per_category=None,
            total_samples=base_size + max(batch_sizes),
            seed=seed,
        )
        samples, _ = generate_synthetic(spec)
        texts = [s.text for s in samples]
        paths = [s.path for s in samples]

    res.log()
    n_update = max(batch_sizes)
    base_texts, base_paths = texts[:-n_update], paths[:-n_update]
    extra_texts, extra_paths = texts[-n_update:], paths[-n_update:]

    clf = DualCentroidClassifier(seed=seed).fit(base_texts, base_paths)
    print(
        f"base model: {len(base_texts)} samples, {clf.tree_.n_predictable} categories; "
        f"fit embedding {clf.timings_['embedding_s']:.3f}s, "
        f"centroids {clf.timings_['centroid_s']:.3f}s"
    )

    # pre-encode everything once: embedding cost is identical on both sides
    # of the comparison and excluded from the timed region
    t0 = time.perf_counter()
    base_encoded = clf._encode(base_texts)
    extra_encoded = clf._encode(extra_texts)
    encode_s = time.perf_counter() - t0

    config = clf.config_
    results = []
    for b in batch_sizes:
        batch = list(zip(extra_encoded[:b], extra_paths[:b]))
        all_paths = base_paths + extra_paths[:b]
        all_encoded = base_encoded + extra_encoded[:b]

        def retrain():
            tree = TaxonomyTree.from_paths(all_paths)
            build_centroids(
                tree,
                [dv.lexical for dv in all_encoded],
                np.stack([dv.semantic for dv in all_encoded]),
                all_paths,
                config,
            )

        def fresh_state():
            return copy.deepcopy(clf.tree_), copy.deepcopy(clf.centroids_)

        def update(state):
            tree, cents = state
            apply_increment(
                tree, cents, batch, config,
                lex_dim=clf.tfidf_.dim, sem_dim=clf.embedder_.dim,
                start_ordinal=clf.n_seen_,
            )

        retrain_s = _best_of(retrain, repeats)
        update_s = _best_of(update, repeats, setup=fresh_state)
        results.append(
            {
                "batch": b,
                "update_s": update_s,
                "retrain_s": retrain_s,
                "speedup": retrain_s / update_s,
            }
        )

    probe_texts = base_texts[: min(probes, len(base_texts))]
    probe_encoded = base_encoded[: len(probe_texts)]
    t0 = time.perf_counter()
    for dv in probe_encoded:
        clf.predict_encoded(dv, k=3)
    scoring_ms = (time.perf_counter() - t0) * 1000 / len(probe_texts)
    t0 = time.perf_counter()
    for text in probe_texts:
        clf.predict_one(text, k=3)
    total_ms = (time.perf_counter() - t0) * 1000 / len(probe_texts)

    print(f"\nencoding {len(base_encoded) + len(extra_encoded)} docs once: {encode_s:.3f}s (excluded below)")
    print("\nincremental update vs full centroid retrain (embeddings precomputed):")
    print(f"{'batch':>8} {'update_s':>12} {'retrain_s':>12} {'speedup':>10}")
    for row in results:
        print(
            f"{row['batch']:>8} {row['update_s']:>12.5f} {row['retrain_s']:>12.5f} "
            f"{row['speedup']:>9.1f}x"
        )
    print(f"\ninference latency per query: {total_ms:.3f} ms total, {scoring_ms:.3f} ms scoring-only")

    if args.output:
        payload = {
            "base_samples": len(base_texts),
            "encode_s": encode_s,
            "fit_timings": clf.timings_,
            "updates": results,
            "inference_ms": {"total": total_ms, "scoring_only": scoring_ms},
        }
        Path(args.output).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
        _write_resolved_config(Path(args.output), res.resolved)
    return 0


# -- synth ---------------------------------------------------------------------


def _parse_depth_profile(text: str) -> dict[int, float]:
    out: dict[int, float] = {}
    for piece in text.split(","):
        depth, _, weight = piece.partition(":")
        try:
            out[int(depth)] = float(weight)
        except ValueError as exc:
            raise ValidationError(
                f"bad --depth-profile entry {piece!r}; expected depth:weight"
            ) from exc
    return out


def cmd_synth(args: argparse.Namespace) -> int:
    res = Resolver(args)
    spec_kwargs: dict = {}
    if args.spec_file:
        spec_kwargs = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
    if args.preset == "helpdesk-8k":
        spec_kwargs.setdefault("categories", 123)
        spec_kwargs.setdefault("total_samples", 8968)
        spec_kwargs.setdefault("samples_per_category", None)
        spec_kwargs.setdefault("imbalance", 1.0)

    overrides = {
        "categories": args.categories,
        "samples_per_category": args.per_category,
        "total_samples": args.samples,
        "vocab_per_category": args.vocab_per_category,
        "overlap": args.overlap,
        "noise_rate": args.noise_rate,
        "stale_ratio": args.stale_ratio,
        "imbalance": args.imbalance,
        "seed": res.get("seed", 0),
    }
    for key, value in overrides.items():
        if value is not None:
            spec_kwargs[key] = value
    if args.depth_profile:
        spec_kwargs["depth_profile"] = _parse_depth_profile(args.depth_profile)
    if spec_kwargs.get("total_samples") is not None and args.per_category is None:
        spec_kwargs["samples_per_category"] = None  # total mode wins over the default

    spec = SynthSpec.from_dict(spec_kwargs)
    res.resolved.update(spec.to_dict())
    res.log()
    samples, manifest = generate_synthetic(spec)
    out_path = Path(args.output)
    manifest_path = Path(args.manifest) if args.manifest else out_path.with_name(
        out_path.stem + ".manifest.json"
    )
    write_synthetic(samples, manifest, out_path, manifest_path)
    _write_resolved_config(out_path, res.resolved)
    print(
        f"wrote {len(samples)} samples across {manifest['n_categories']} categories "
        f"to {out_path}"
    )
    print(f"taxonomy manifest at {manifest_path}")
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualcentroid",
        description="Dual-embedding centroid classifier for hierarchical ticket taxonomies",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="preprocess a dataset and train a model")
    p.add_argument("--data", required=True, type=Path, help="labeled dataset (csv/tsv/jsonl)")
    p.add_argument("--model", required=True, type=Path, help="output model file")
    p.add_argument("--out-dir", type=Path, default=None, help="where split files and reports go")
    p.add_argument("--min-samples", type=int, default=None, help="merge categories below this size (default 10)")
    p.add_argument("--max-per-category", type=int, default=None, help="cap per-category samples (default 200)")
    p.add_argument("--split", default=None, help="train,val,test fractions (default 0.8,0.1,0.1)")
    _model_options(p)
    _common_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="rank categories for queries")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--text", default=None, help="single query text")
    p.add_argument("--queries", type=Path, default=None, help="query file (csv/tsv/jsonl/plain lines)")
    p.add_argument("-k", type=int, default=None, help="entries per query (default 3)")
    p.add_argument("--output", type=Path, default=None, help="write JSON-lines records here")
    _common_options(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="hierarchy-aware metrics on a labeled set")
    p.add_argument("--model", type=Path, default=None, help="evaluate this model on --data")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--end-to-end", action="store_true", help="re-run split+train+eval per seed")
    p.add_argument("--runs", type=int, default=None, help="end-to-end runs (default 5)")
    p.add_argument("--with-baselines", action="store_true", help="also score knn/majority/random")
    p.add_argument("-k", type=int, default=None, help="top-k cutoff (default 3)")
    p.add_argument("--min-samples", type=int, default=None)
    p.add_argument("--max-per-category", type=int, default=None)
    p.add_argument("--output", type=Path, default=None, help="write JSON-lines report records here")
    _model_options(p)
    _common_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("update", help="fold new labeled samples into a model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", required=True, type=Path, help="new labeled samples")
    p.add_argument("--output", type=Path, default=None, help="write updated model here (default: in place)")
    _common_options(p)
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("bench", help="training/update/inference timing report")
    p.add_argument("--data", type=Path, default=None, help="labeled dataset (default: synthetic)")
    p.add_argument("--bench-samples", type=int, default=None, help="synthetic base corpus size (default 5000)")
    p.add_argument("--categories", type=int, default=None, help="synthetic category count (default 50)")
    p.add_argument("--batch-sizes", default=None, help="update batch sizes (default 1,10,100,1000)")
    p.add_argument("--probes", type=int, default=None, help="inference latency probe count (default 100)")
    p.add_argument("--repeats", type=int, default=None, help="best-of repeats per timing (default 3)")
    p.add_argument("--output", type=Path, default=None, help="write JSON report here")
    _common_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--output", required=True, type=Path, help="dataset csv to write")
    p.add_argument("--manifest", type=Path, default=None, help="taxonomy manifest path")
    p.add_argument("--spec-file", type=Path, default=None, help="JSON SynthSpec to start from")
    p.add_argument("--preset", choices=["helpdesk-8k"], default=None)
    p.add_argument("--categories", type=int, default=None)
    p.add_argument("--per-category", type=int, default=None, help="samples per category")
    p.add_argument("--samples", type=int, default=None, help="total samples (imbalanced mode)")
    p.add_argument("--vocab-per-category", type=int, default=None)
    p.add_argument("--overlap", type=float, default=None, help="cross-category vocabulary overlap [0,1]")
    p.add_argument("--noise-rate", type=float, default=None)
    p.add_argument("--stale-ratio", type=float, default=None)
    p.add_argument("--imbalance", type=float, default=None, help="Zipf-like skew exponent")
    p.add_argument("--depth-profile", default=None, help='e.g. "2:5,3:91,4:4"')
    _common_options(p)
    p.set_defaults(func=cmd_synth)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if getattr(args, "quiet", False):
        level = logging.ERROR
    elif getattr(args, "verbose", 0) >= 2:
        level = logging.DEBUG
    elif getattr(args, "verbose", 0) == 1:
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return args.func(args)
    except (ValidationError, ReclusterRequiredError) as exc:
        logger.error("%s", exc)
        return 2
    except DataError as exc:
        logger.error("%s", exc)
        return 3
    except ModelFormatError as exc:
        logger.error("%s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
