"""Command-line entry point: ``lintext <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import scipy.sparse as sp

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .classifiers import ClassifierKind, HyperGrid, TrainingError, predict_labels
from .corpus import CorpusError, Label, load_corpus, read_tokens, tokenize_corpus, write_corpus, write_tokens
from .features import TRANSFORMS, FeatureError, build_matrix, write_triplets, write_vocabulary
from .harness import (
    PCA_SETTINGS,
    ExperimentData,
    ExperimentSpec,
    HarnessError,
    expand_specs,
    fit_final,
    sweep,
)
from .ner import NerCounts, NerError, dictionary_counts, load_dictionary, load_external_counts, write_counts
from .pipeline import PipelineConfig, fit_pipeline, load_model, save_model, transform_documents
from .report import (
    ReportError,
    config_hash,
    emit_report,
    format_pivot,
    top_features,
    write_top_features,
)
from .synthetic import SyntheticConfig, generate

log = logging.getLogger("lintext")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
CONFIG_VERSION = 1
DATA_ERRORS = (CorpusError, FeatureError, NerError, HarnessError, TrainingError, ReportError, ValueError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _existing(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {p}")
    return p


def _parse_pca(value: str) -> int | None:
    if value in ("none", "None", ""):
        return None
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("PCA component count must be positive")
    return k


def _tool_file(value: str) -> tuple[str, str]:
    tool, sep, path = value.partition("=")
    if not sep or not tool or not path:
        raise argparse.ArgumentTypeError("expected TOOL=PATH")
    return tool, path


def _load_documents(args):
    if getattr(args, "tokens", None):
        return None, read_tokens(_existing(args.tokens))
    docs = load_corpus(_existing(args.corpus))
    return docs, tokenize_corpus(docs)


def _load_ner(counts: dict, dictionaries: dict, docs) -> NerCounts | None:
    """Combine external count files and dictionary matches, tools in sorted order."""
    columns = {}
    ids = [d.id for d in docs]
    for tool, path in counts.items():
        columns[tool] = load_external_counts(_existing(path), tool, ids)
    for tool, path in dictionaries.items():
        if tool in columns:
            raise UsageError(f"NER tool {tool!r} given both as counts and as a dictionary")
        if docs and not hasattr(docs[0], "title"):
            raise UsageError("dictionary matching needs the JSONL corpus, not a token file")
        columns[tool] = dictionary_counts(load_dictionary(_existing(path), tool), docs)
    if not columns:
        return None
    return NerCounts.combine([columns[t] for t in sorted(columns)])


def _ensure_out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------- config


DEFAULT_EXPERIMENT = {
    "classifiers": ["svm", "logreg", "lda", "dlda"],
    "transforms": ["none", "idf", "tfidf", "idf+norm", "tfidf+norm"],
    "pca": ["none"],
    "bigrams": [True],
    "ner_sets": [[]],
    "tfidf_length": "features",
}


def load_config(path) -> dict:
    """Read a TOML experiment config; relative paths resolve against its directory."""
    path = _existing(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    version = raw.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise UsageError(f"{path}: unsupported config version {version}")
    known = {"version", "corpus", "output_dir", "seed", "experiment", "grid", "ner"}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"{path}: unknown config keys {sorted(unknown)}")
    base = path.parent

    def resolve(p):
        return str((base / p).resolve()) if p is not None else None

    ner = raw.get("ner", {})
    cfg = {
        "version": CONFIG_VERSION,
        "corpus": resolve(raw.get("corpus")),
        "output_dir": resolve(raw.get("output_dir")),
        "seed": raw.get("seed", 0),
        "experiment": {**DEFAULT_EXPERIMENT, **raw.get("experiment", {})},
        "grid": raw.get("grid", {}),
        "ner": {
            "counts": {k: resolve(v) for k, v in ner.get("counts", {}).items()},
            "dictionaries": {k: resolve(v) for k, v in ner.get("dictionaries", {}).items()},
        },
    }
    unknown = set(cfg["experiment"]) - set(DEFAULT_EXPERIMENT)
    if unknown:
        raise UsageError(f"{path}: unknown [experiment] keys {sorted(unknown)}")
    return cfg


def _specs_from_config(cfg: dict) -> list[ExperimentSpec]:
    exp = cfg["experiment"]
    try:
        grid = HyperGrid.from_dict(cfg["grid"])
        classifiers = [ClassifierKind(c) for c in exp["classifiers"]]
    except (ValueError, TypeError) as exc:
        raise UsageError(f"config: {exc}") from exc
    bad = [t for t in exp["transforms"] if t not in TRANSFORMS]
    if bad:
        raise UsageError(f"config: unknown transforms {bad}")
    pca = [_parse_pca(str(k)) for k in exp["pca"]]
    return expand_specs(
        classifiers,
        transforms=exp["transforms"],
        pca=pca,
        bigrams=[bool(b) for b in exp["bigrams"]],
        ner_sets=[tuple(s) for s in exp["ner_sets"]],
        grid=grid,
        seed=int(cfg["seed"]),
        tfidf_length=exp["tfidf_length"],
    )


def _provenance_config(cfg: dict) -> dict:
    """The effective config minus output location, with file contents hashed."""
    out = {k: v for k, v in cfg.items() if k not in ("output_dir", "corpus", "ner")}
    out["corpus_sha256"] = _file_digest(cfg["corpus"])
    out["ner"] = {
        kind: {tool: _file_digest(p) for tool, p in paths.items()} for kind, paths in cfg["ner"].items()
    }
    return out


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args) -> int:
    docs = load_corpus(_existing(args.corpus))
    write_tokens(tokenize_corpus(docs), args.out)
    n_pos = sum(d.label.y for d in docs)
    print(f"{len(docs)} documents ({n_pos} relevant, {len(docs) - n_pos} irrelevant) -> {args.out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    raw, docs = _load_documents(args)
    if not docs:
        raise CorpusError("corpus is empty")
    out = _ensure_out_dir(args.out_dir)
    m, vocab = build_matrix(docs, args.bigrams)
    config = PipelineConfig(bigrams=args.bigrams, transform=args.transform, pca_k=args.pca, tfidf_length=args.tfidf_length)
    fitted, design = fit_pipeline(config, m, vocab)
    write_vocabulary(vocab, out / "vocabulary.tsv")
    write_triplets(m.with_values(design.X if fitted.pca is None else sp.csr_matrix(design.X)), out / "matrix.csv")
    if fitted.pca is not None:
        with open(out / "pca.json", "w", encoding="utf-8") as fh:
            json.dump(fitted.pca.to_json(), fh)
    if args.top:
        write_top_features(top_features(m, vocab, args.top), out / "top_features.csv")
    print(f"{m.shape[0]} documents x {len(vocab)} features; transform={args.transform}; output -> {out}")
    return EXIT_OK


def cmd_ner(args) -> int:
    docs = load_corpus(_existing(args.corpus))
    dictionary = load_dictionary(_existing(args.dict), args.tool_id)
    counts = dictionary_counts(dictionary, docs, distinct=args.distinct)
    write_counts(counts, [d.id for d in docs], args.out)
    total = sum(int(v[0]) for v in counts.counts.values())
    print(f"{dictionary.tool_id}: {len(dictionary.terms)} terms, {total} matches in {len(docs)} documents -> {args.out}")
    return EXIT_OK


def _single_spec(args) -> ExperimentSpec:
    spec = ExperimentSpec(
        classifier=ClassifierKind(args.clf),
        transform=args.transform,
        pca_k=args.pca,
        bigrams=args.bigrams,
        ner_tools=tuple(sorted(t for t, _ in args.ner_counts + args.ner_dict)),
        seed=args.seed,
        tfidf_length=args.tfidf_length,
    )
    problems = spec.violations()
    if problems:
        raise UsageError("; ".join(problems))
    return spec


def _explicit_params(args, kind: ClassifierKind, n_ner: int) -> dict | None:
    if kind in (ClassifierKind.SVM, ClassifierKind.LOGREG):
        return None if args.C is None else {"C": args.C}
    if kind is ClassifierKind.NAIVE_BAYES:
        return None if args.alpha is None else {"alpha": args.alpha}
    if kind in (ClassifierKind.LDA, ClassifierKind.DLDA):
        return None if args.shrinkage is None else {"shrinkage": args.shrinkage}
    if args.lambda_quantile is None:
        return None
    beta = args.beta or [1.0] * n_ner
    if len(beta) != n_ner:
        raise UsageError(f"--beta needs {n_ner} values, one per NER tool")
    return {"lambda_quantile": args.lambda_quantile, "beta": beta}


def cmd_train(args) -> int:
    spec = _single_spec(args)
    raw = load_corpus(_existing(args.corpus))
    ner = _load_ner(dict(args.ner_counts), dict(args.ner_dict), raw)
    params = _explicit_params(args, spec.classifier, len(spec.ner_tools))
    model, fitted, chosen = fit_final(spec, ExperimentData(raw, ner), params=params)
    save_model(model, fitted, args.out)
    how = "given" if params is not None else "selected by 4x4 cross-validation"
    print(f"{spec.name}: params {json.dumps(chosen, sort_keys=True)} ({how}) -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, fitted = load_model(_existing(args.model))
    raw = load_corpus(_existing(args.corpus))
    tools = fitted.config.ner_tools
    ner = _load_ner(dict(args.ner_counts), dict(args.ner_dict), raw)
    if tools:
        missing = set(tools) - set(ner.tool_ids if ner else ())
        if missing:
            raise UsageError(f"model needs NER counts for {sorted(missing)}")
        ner = ner.select(tools)
    design = transform_documents(fitted, tokenize_corpus(raw), ner)
    scores = model.decision_function(design.X, design.ner)
    labels = [Label.RELEVANT if y else Label.IRRELEVANT for y in predict_labels(scores)]
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["id", "score", "label"])
        for doc_id, s, lab in zip(design.ids, scores, labels):
            w.writerow([doc_id, repr(float(s)), lab.value])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _apply_overrides(cfg: dict, args) -> dict:
    if args.corpus:
        cfg["corpus"] = str(Path(args.corpus).resolve())
    if args.out_dir:
        cfg["output_dir"] = str(Path(args.out_dir).resolve())
    if args.seed is not None:
        cfg["seed"] = args.seed
    exp = cfg["experiment"]
    for key in ("classifiers", "transforms", "pca"):
        value = getattr(args, key, None)
        if value:
            exp[key] = value
    if getattr(args, "bigrams", None) is not None:
        exp["bigrams"] = [args.bigrams]
    if cfg["corpus"] is None:
        raise UsageError("no corpus: set 'corpus' in the config or pass --corpus")
    if cfg["output_dir"] is None:
        raise UsageError("no output directory: set 'output_dir' in the config or pass --out-dir")
    _existing(cfg["corpus"])
    for paths in cfg["ner"].values():
        for p in paths.values():
            _existing(p)
    return cfg


def _run_config(args) -> tuple[dict, list[dict]]:
    cfg = _apply_overrides(load_config(args.config), args)
    specs = _specs_from_config(cfg)
    if not specs:
        raise UsageError("the experiment grid is empty after removing forbidden combinations")
    needed = {t for s in specs for t in s.ner_tools}
    available = set(cfg["ner"]["counts"]) | set(cfg["ner"]["dictionaries"])
    if needed - available:
        raise UsageError(f"ner_sets name unconfigured tools {sorted(needed - available)}")
    out = _ensure_out_dir(cfg["output_dir"])
    raw = load_corpus(cfg["corpus"])
    ner = _load_ner(cfg["ner"]["counts"], cfg["ner"]["dictionaries"], raw)
    log.info("running %d experiment(s) on %d documents", len(specs), len(raw))
    report = sweep(specs, ExperimentData(raw, ner))
    provenance = _provenance_config(cfg)
    emit_report(report, out, provenance, metric=args.metric)
    with open(out / "config.effective.json", "w", encoding="utf-8") as fh:
        json.dump({**cfg, "tool_version": __version__, "config_hash": config_hash(provenance)}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for err in report.errors:
        print(f"skipped {err['classifier']}/{err['transform']}/pca={err['pca_k']}: {err['error']}", file=sys.stderr)
    return cfg, report.summary_rows


def cmd_run(args) -> int:
    cfg, summary = _run_config(args)
    print(format_pivot(summary, args.metric) if summary else "no experiment completed")
    print(f"results -> {cfg['output_dir']}")
    return EXIT_OK if summary else EXIT_DATA


def cmd_sweep(args) -> int:
    return cmd_run(args)


def cmd_report(args) -> int:
    path = Path(args.results)
    if path.is_dir():
        path = path / "results.json"
    with open(_existing(path), encoding="utf-8") as fh:
        data = json.load(fh)
    summary = data.get("summary", [])
    if not summary:
        raise HarnessError(f"{path} holds no summary rows")
    print(format_pivot(summary, args.metric, args.rows, args.cols))
    print(f"tool_version={data.get('tool_version')} config_hash={data.get('config_hash')}")
    return EXIT_OK


def cmd_synth(args) -> int:
    corpus = generate(
        SyntheticConfig(
            n_docs=args.n_docs,
            vocab_size=args.vocab_size,
            n_planted=args.n_planted,
            signal=args.signal,
            seed=args.seed,
        )
    )
    write_corpus(corpus.documents, args.out)
    print(f"{len(corpus.documents)} synthetic documents, planted words {', '.join(corpus.planted[:5])}... -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_pipeline_flags(p):
    p.add_argument("--bigrams", action="store_true", help="add within-field bigram features")
    p.add_argument("--transform", choices=TRANSFORMS, default="none", help="feature transform regime")
    p.add_argument("--pca", type=_parse_pca, default=None, metavar="K", help="project onto K principal components")
    p.add_argument(
        "--tfidf-length",
        choices=("features", "tokens"),
        default="features",
        help="TFIDF row divisor: distinct features (default) or token count",
    )


def _add_ner_flags(p):
    p.add_argument("--ner-counts", type=_tool_file, action="append", default=[], metavar="TOOL=CSV", help="external doc_id,count file")
    p.add_argument("--ner-dict", type=_tool_file, action="append", default=[], metavar="TOOL=TXT", help="dictionary to match")


def _add_run_flags(p):
    p.add_argument("--config", required=True, help="TOML experiment config")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--corpus", help="overrides the config corpus path")
    p.add_argument("--out-dir", help="overrides the config output directory")
    p.add_argument("--metric", choices=("mcc", "f1", "iauc"), default="mcc", help="metric of the pivot table")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lintext", description="Linear classifiers for labelled abstracts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress (repeat for debug)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="tokenise a JSONL corpus")
    p.add_argument("--corpus", required=True, help="JSONL corpus")
    p.add_argument("--out", required=True, help="token JSONL output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="build and dump the occurrence matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="JSONL corpus")
    src.add_argument("--tokens", help="token JSONL from 'ingest'")
    p.add_argument("--out-dir", required=True, help="directory for matrix.csv, vocabulary.tsv")
    p.add_argument("--top", type=int, default=10, help="rank this many features by information gain (0 disables)")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("ner", help="count dictionary matches per document")
    p.add_argument("--dict", required=True, help="dictionary file, one term per line")
    p.add_argument("--corpus", required=True, help="JSONL corpus")
    p.add_argument("--out", required=True, help="doc_id,count CSV output")
    p.add_argument("--tool-id", help="tool name (default: dictionary file stem)")
    p.add_argument("--distinct", action="store_true", help="count distinct terms instead of occurrences")
    p.set_defaults(func=cmd_ner)

    p = sub.add_parser("train", help="train one model on a whole corpus")
    p.add_argument("--clf", required=True, choices=[k.value for k in ClassifierKind], help="classifier")
    p.add_argument("--corpus", required=True, help="JSONL corpus")
    p.add_argument("--out", required=True, help="model JSON output")
    p.add_argument("--seed", type=int, default=0, help="seed for the selection folds")
    p.add_argument("--C", type=float, help="SVM / logistic regression regularisation")
    p.add_argument("--alpha", type=float, help="Naive Bayes smoothing")
    p.add_argument("--shrinkage", type=float, help="LDA / dLDA shrinkage")
    p.add_argument("--lambda-quantile", type=float, help="VTT threshold as a training-score quantile")
    p.add_argument("--beta", type=float, nargs="+", help="VTT NER weights, one per tool (sorted tool order)")
    _add_pipeline_flags(p)
    _add_ner_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score documents with a saved model")
    p.add_argument("--model", required=True, help="model JSON from 'train'")
    p.add_argument("--corpus", required=True, help="JSONL corpus (labels are ignored)")
    p.add_argument("--out", default=None, help="CSV output (default: stdout)")
    _add_ner_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("run", help="nested cross-validation of a config's experiment grid")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="like 'run', with axes overridable from the command line")
    _add_run_flags(p)
    p.add_argument("--classifiers", nargs="+", choices=[k.value for k in ClassifierKind], help="classifier axis")
    p.add_argument("--transforms", nargs="+", choices=TRANSFORMS, help="transform axis")
    p.add_argument("--pca", nargs="+", choices=[str(k).lower() for k in PCA_SETTINGS], help="PCA axis")
    ngram = p.add_mutually_exclusive_group()
    ngram.add_argument("--bigrams", dest="bigrams", action="store_true", default=None, help="unigrams plus bigrams")
    ngram.add_argument("--unigrams", dest="bigrams", action="store_false", help="unigrams only")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="print the summary table of a finished run")
    p.add_argument("--results", required=True, help="results.json or its directory")
    p.add_argument("--metric", choices=("mcc", "f1", "iauc"), default="mcc")
    p.add_argument("--rows", default="classifier", help="summary column for table rows")
    p.add_argument("--cols", default="transform", help="summary column for table columns")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write a synthetic planted-signal corpus")
    p.add_argument("--out", required=True, help="JSONL output")
    p.add_argument("--n-docs", type=int, default=1213)
    p.add_argument("--vocab-size", type=int, default=5000)
    p.add_argument("--n-planted", type=int, default=20)
    p.add_argument("--signal", type=float, default=1.0, help="0 = no signal, 1 = full planted contrast")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lintext {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"lintext {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
