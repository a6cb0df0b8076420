"""Nested cross-validation: 4x4 outer folds, 4x4 inner folds per outer block.

Each outer fold refits the whole featurisation on its 75% block, chooses a
hyperparameter by mean inner-fold MCC, retrains on the 75% block and scores
the 25% block.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classifiers import ClassifierKind, HyperGrid, TrainingError, train_path
from .corpus import Document, TokenizedDocument, tokenize
from .evaluation import Confusion, evaluate, mcc, mean_and_se
from .features import TRANSFORMS, FeatureIndex
from .ner import NerCounts
from .pipeline import PipelineConfig, fit_pipeline, ner_tool_subset

log = logging.getLogger(__name__)

N_REPEATS = 4
N_FOLDS = 4
METRICS = ("f1", "mcc", "iauc")
PCA_SETTINGS = (None, 100, 200, 400, 600, 800, 1000)


class HarnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class Fold:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    repeat: int
    block: int

    def to_json(self) -> dict:
        return {
            "repeat": self.repeat,
            "block": self.block,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    outer: tuple[Fold, ...]
    inner: tuple[tuple[Fold, ...], ...]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "outer": [
                {**f.to_json(), "inner": [g.to_json() for g in inner]}
                for f, inner in zip(self.outer, self.inner)
            ],
        }


def _stratified_blocks(ids, labels, n_blocks, rng) -> list[list[str]]:
    """Shuffle each class and deal documents round-robin into blocks.

    Dealing continues across classes, so block sizes differ by at most one
    and each block's class counts differ by at most one.
    """
    ordered = []
    for cls in (1, 0):
        members = [i for i, y in zip(ids, labels) if y == cls]
        ordered.extend(members[j] for j in rng.permutation(len(members)))
    blocks = [[] for _ in range(n_blocks)]
    for pos, doc_id in enumerate(ordered):
        blocks[pos % n_blocks].append(doc_id)
    return blocks


def _repeated_folds(ids, labels, rng, n_repeats, n_folds) -> tuple[Fold, ...]:
    position = {doc_id: i for i, doc_id in enumerate(ids)}
    folds = []
    for r in range(n_repeats):
        blocks = _stratified_blocks(ids, labels, n_folds, rng)
        for b, block in enumerate(blocks):
            test = set(block)
            folds.append(
                Fold(
                    train_ids=tuple(i for i in ids if i not in test),
                    test_ids=tuple(sorted(block, key=position.__getitem__)),
                    repeat=r,
                    block=b,
                )
            )
    return tuple(folds)


def _ids_labels(corpus) -> tuple[list[str], list[int]]:
    return [d.id for d in corpus], [d.label.y for d in corpus]


def make_fold_plan(corpus, seed: int, n_repeats: int = N_REPEATS, n_folds: int = N_FOLDS) -> FoldPlan:
    ids, labels = _ids_labels(corpus)
    if len(ids) < 2 * n_folds:
        raise HarnessError(f"corpus of {len(ids)} documents is too small; need at least {2 * n_folds}")
    for cls, name in ((1, "Relevant"), (0, "Irrelevant")):
        if labels.count(cls) < n_folds:
            raise HarnessError(
                f"class {name} has {labels.count(cls)} documents; stratified {n_folds}-fold splits need {n_folds}"
            )
    outer = _repeated_folds(ids, labels, np.random.default_rng(seed), n_repeats, n_folds)
    label_of = dict(zip(ids, labels))
    inner = []
    for k, fold in enumerate(outer):
        train_labels = [label_of[i] for i in fold.train_ids]
        rng = np.random.default_rng([seed, k + 1])
        inner.append(_repeated_folds(list(fold.train_ids), train_labels, rng, n_repeats, n_folds))
    return FoldPlan(seed=seed, outer=outer, inner=tuple(inner))


@dataclass(frozen=True)
class ExperimentSpec:
    classifier: ClassifierKind
    transform: str = "none"
    pca_k: int | None = None
    bigrams: bool = False
    ner_tools: tuple[str, ...] = ()
    grid: HyperGrid = field(default_factory=HyperGrid)
    seed: int = 0
    tfidf_length: str = "features"

    def __post_init__(self):
        if isinstance(self.classifier, str):
            object.__setattr__(self, "classifier", ClassifierKind(self.classifier))
        object.__setattr__(self, "ner_tools", tuple(self.ner_tools))

    def violations(self) -> list[str]:
        out = []
        if self.transform not in TRANSFORMS:
            out.append(f"unknown transform {self.transform!r}")
        if "norm" in self.transform and self.ner_tools:
            out.append("length normalisation cannot be combined with NER count features")
        if self.classifier in (ClassifierKind.VTT, ClassifierKind.NAIVE_BAYES) and self.pca_k is not None:
            out.append(f"{self.classifier.value} is not evaluated on PCA-reduced data")
        if self.classifier is ClassifierKind.NAIVE_BAYES and (self.transform != "none" or self.ner_tools):
            out.append("binomial Naive Bayes needs binary, untransformed occurrence features")
        return out

    def validate(self):
        problems = self.violations()
        if problems:
            raise HarnessError(f"invalid experiment {self.name}: " + "; ".join(problems))

    @property
    def name(self) -> str:
        pca = "-" if self.pca_k is None else str(self.pca_k)
        ner = "+".join(self.ner_tools) or "-"
        ngram = "bigram" if self.bigrams else "unigram"
        return f"{self.classifier.value}/{self.transform}/pca={pca}/{ngram}/ner={ner}"

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            bigrams=self.bigrams,
            transform=self.transform,
            pca_k=self.pca_k,
            ner_tools=self.ner_tools,
            ner_as_columns=self.classifier is not ClassifierKind.VTT,
            lda_fallback=self.classifier is ClassifierKind.LDA,
            tfidf_length=self.tfidf_length,
        )

    def grid_points(self) -> list[dict]:
        n_ner = len(self.ner_tools) if self.classifier is ClassifierKind.VTT else 0
        return self.grid.points(self.classifier, n_ner)

    def describe(self) -> dict:
        return {
            "classifier": self.classifier.value,
            "transform": self.transform,
            "pca_k": self.pca_k,
            "bigrams": self.bigrams,
            "ner_set": list(self.ner_tools),
            "seed": self.seed,
        }


class ExperimentData:
    """Tokenised corpus plus lazily built feature indices, shared by specs."""

    def __init__(self, corpus: Sequence, ner: NerCounts | None = None):
        docs = [tokenize(d) if isinstance(d, Document) else d for d in corpus]
        if not all(isinstance(d, TokenizedDocument) for d in docs):
            raise TypeError("corpus must hold Document or TokenizedDocument records")
        ids = [d.id for d in docs]
        if len(set(ids)) != len(ids):
            raise HarnessError("corpus ids are not unique")
        self.docs = docs
        self.ner = ner
        self._indices: dict[bool, FeatureIndex] = {}

    def index(self, bigrams: bool) -> FeatureIndex:
        if bigrams not in self._indices:
            self._indices[bigrams] = FeatureIndex(self.docs, bigrams)
        return self._indices[bigrams]


FoldHook = Callable[[str, int, int | None, object], None]


@dataclass
class _Counter:
    trainings: int = 0


def _fit_fold(data: ExperimentData, spec: ExperimentSpec, train_ids, test_ids):
    train_m, test_m, vocab = data.index(spec.bigrams).split(train_ids, test_ids)
    ner = ner_tool_subset(data.ner, spec.ner_tools)
    fitted, train = fit_pipeline(spec.pipeline_config(), train_m, vocab, ner)
    test = fitted.apply(test_m, ner)
    return fitted, train, test


def _train_points(spec, design, points, counter: _Counter):
    counter.trainings += len(points)
    return train_path(spec.classifier, design.X, design.y, points, design.ner, spec.ner_tools)


def _score(model, design) -> np.ndarray:
    return model.decision_function(design.X, design.ner)


@dataclass(frozen=True)
class Selection:
    point: dict
    mean_mcc: tuple[float | None, ...]  # aligned with the grid; None = failed


def inner_select(
    spec: ExperimentSpec,
    inner_folds: Sequence[Fold],
    data: ExperimentData,
    counter: _Counter | None = None,
    hook: FoldHook | None = None,
    outer_index: int = 0,
) -> Selection:
    """Pick the grid point with the best mean MCC over the inner folds."""
    points = spec.grid_points()
    if not points:
        raise HarnessError(f"{spec.name}: empty hyperparameter grid")
    counter = counter or _Counter()
    per_point: list[list[float] | None] = [[] for _ in points]
    for j, fold in enumerate(inner_folds):
        fitted, train, val = _fit_fold(data, spec, fold.train_ids, fold.test_ids)
        if hook:
            hook("inner", outer_index, j, fitted)
        for p, model in enumerate(_train_points(spec, train, points, counter)):
            if per_point[p] is None:
                continue
            if isinstance(model, TrainingError):
                log.debug("%s inner fold %d: %s rejected (%s)", spec.name, j, points[p], model)
                per_point[p] = None
                continue
            scores = _score(model, val)
            per_point[p].append(mcc(Confusion.from_predictions(val.y, (scores > 0).astype(int))))
    means = tuple(None if v is None else float(np.mean(v)) for v in per_point)
    valid = [(m, -i) for i, m in enumerate(means) if m is not None]
    if not valid:
        raise HarnessError(f"{spec.name}: every grid value failed to train")
    best = -max(valid)[1]
    return Selection(point=points[best], mean_mcc=means)


@dataclass
class RunResult:
    spec: ExperimentSpec
    folds: list[dict]
    summary: dict
    n_trainings: int
    plan: FoldPlan

    def rows(self) -> list[dict]:
        base = self.spec.describe()
        return [{**base, **f} for f in self.folds]


def run_experiment(
    spec: ExperimentSpec,
    corpus,
    ner: NerCounts | None = None,
    plan: FoldPlan | None = None,
    hook: FoldHook | None = None,
) -> RunResult:
    spec.validate()
    data = corpus if isinstance(corpus, ExperimentData) else ExperimentData(corpus, ner)
    if plan is None:
        plan = make_fold_plan(data.docs, spec.seed)
    counter = _Counter()
    folds = []
    for k, (outer, inner) in enumerate(zip(plan.outer, plan.inner)):
        try:
            chosen = inner_select(spec, inner, data, counter, hook, k)
            fitted, train, test = _fit_fold(data, spec, outer.train_ids, outer.test_ids)
            if hook:
                hook("outer", k, None, fitted)
            (model,) = _train_points(spec, train, [chosen.point], counter)
            if isinstance(model, TrainingError):
                raise model
            metrics = evaluate(test.y, _score(model, test))
        except (TrainingError, ValueError, HarnessError) as exc:
            raise HarnessError(f"{spec.name}: outer fold {k}: {exc}") from exc
        folds.append(
            {
                "fold": k,
                "repeat": outer.repeat,
                "block": outer.block,
                **metrics,
                "params": chosen.point,
                "n_features": int(train.X.shape[1]),
            }
        )
        log.info("%s fold %d: mcc=%.4f params=%s", spec.name, k, metrics["mcc"], chosen.point)
    summary = {}
    for metric in METRICS:
        summary[metric], summary[f"{metric}_se"] = mean_and_se([f[metric] for f in folds])
    return RunResult(spec=spec, folds=folds, summary=summary, n_trainings=counter.trainings, plan=plan)


def expand_specs(
    classifiers: Sequence,
    transforms: Sequence[str] = ("none",),
    pca: Sequence[int | None] = (None,),
    bigrams: Sequence[bool] = (False,),
    ner_sets: Sequence[Sequence[str]] = ((),),
    grid: HyperGrid | None = None,
    seed: int = 0,
    tfidf_length: str = "features",
) -> list[ExperimentSpec]:
    """Cartesian product of the axes, dropping forbidden combinations."""
    grid = grid or HyperGrid()
    specs = []
    for clf, tr, k, bi, ner in itertools.product(classifiers, transforms, pca, bigrams, ner_sets):
        spec = ExperimentSpec(
            classifier=ClassifierKind(clf) if isinstance(clf, str) else clf,
            transform=tr,
            pca_k=k,
            bigrams=bool(bi),
            ner_tools=tuple(ner),
            grid=grid,
            seed=seed,
            tfidf_length=tfidf_length,
        )
        if not spec.violations():
            specs.append(spec)
    return specs


@dataclass
class Report:
    fold_rows: list[dict] = field(default_factory=list)
    summary_rows: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    plans: dict = field(default_factory=dict)


def sweep(
    specs: Sequence[ExperimentSpec],
    corpus,
    ner: NerCounts | None = None,
    runner=run_experiment,
) -> Report:
    """Run every spec; a failing spec is recorded in ``errors`` and skipped."""
    report = Report()
    if not specs:
        return report
    data = corpus if isinstance(corpus, ExperimentData) else ExperimentData(corpus, ner)
    plans: dict[int, FoldPlan] = {}
    for index, spec in enumerate(specs):
        tag = {"spec": index}
        try:
            if spec.seed not in plans:
                plans[spec.seed] = make_fold_plan(data.docs, spec.seed)
            result = runner(spec, data, plan=plans[spec.seed])
        except (HarnessError, TrainingError, ValueError) as exc:
            log.warning("skipping %s: %s", spec.name, exc)
            report.errors.append({**tag, **spec.describe(), "error": str(exc)})
            continue
        report.fold_rows.extend({**tag, **row} for row in result.rows())
        report.summary_rows.append(
            {**tag, **spec.describe(), **result.summary, "n_folds": len(result.folds), "n_trainings": result.n_trainings}
        )
    report.plans = {seed: p.to_json() for seed, p in plans.items()}
    return report


def fit_final(spec: ExperimentSpec, corpus, ner: NerCounts | None = None, params: dict | None = None):
    """Train one deployable model on the whole corpus.

    Without ``params`` the grid value is chosen by 4x4 cross-validation over
    the corpus (the inner protocol, applied once).  Returns
    ``(model, fitted_pipeline, params)``.
    """
    spec.validate()
    data = corpus if isinstance(corpus, ExperimentData) else ExperimentData(corpus, ner)
    if params is None:
        ids, labels = _ids_labels(data.docs)
        folds = _repeated_folds(ids, labels, np.random.default_rng(spec.seed), N_REPEATS, N_FOLDS)
        params = inner_select(spec, folds, data).point
    ids = [d.id for d in data.docs]
    fitted, train, _ = _fit_fold(data, spec, ids, ())
    (model,) = _train_points(spec, train, [params], _Counter())
    if isinstance(model, TrainingError):
        raise model
    return model, fitted, params
