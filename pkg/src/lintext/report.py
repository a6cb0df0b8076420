"""Result tables, provenance and information-gain feature rankings."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .features import OccurrenceMatrix, Vocabulary
from .harness import METRICS, Report

FOLD_COLUMNS = (
    "spec", "classifier", "transform", "pca_k", "bigrams", "ner_set", "seed",
    "fold", "repeat", "block", "f1", "mcc", "iauc", "params", "n_features",
    "tool_version", "config_hash",
)  # fmt: skip
SUMMARY_COLUMNS = (
    "spec", "classifier", "transform", "pca_k", "bigrams", "ner_set", "seed",
    "f1", "f1_se", "mcc", "mcc_se", "iauc", "iauc_se", "n_folds", "n_trainings",
    "tool_version", "config_hash",
)  # fmt: skip


class ReportError(OSError):
    pass


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _entropy_bits(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of the distributions along the last axis."""
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / total, 0.0)
        terms = np.where(p > 0, -p * np.log2(p), 0.0)
    return terms.sum(axis=-1)


def information_gain(m: OccurrenceMatrix) -> np.ndarray:
    """Mutual information (bits) between each binary column and the label."""
    y = np.asarray(m.labels) == 1
    n = y.size
    if n == 0:
        return np.zeros(m.shape[1])
    present = np.asarray((m.X != 0).sum(axis=0)).ravel().astype(np.float64)
    present_pos = np.asarray((m.X[np.flatnonzero(y)] != 0).sum(axis=0)).ravel().astype(np.float64)
    n_pos = float(y.sum())
    # joint table per feature: [present, absent] x [pos, neg]
    table = np.stack(
        [
            np.stack([present_pos, present - present_pos], axis=-1),
            np.stack([n_pos - present_pos, (n - n_pos) - (present - present_pos)], axis=-1),
        ],
        axis=1,
    )
    h_label = _entropy_bits(np.array([n_pos, n - n_pos]))
    weights = table.sum(axis=-1) / n
    h_cond = (weights * _entropy_bits(table)).sum(axis=1)
    return np.maximum(h_label - h_cond, 0.0)


@dataclass(frozen=True)
class RankedFeature:
    feature: str
    information_gain: float
    relevant_docs: int
    irrelevant_docs: int


def top_features(m: OccurrenceMatrix, vocab: Vocabulary, n: int = 10) -> list[RankedFeature]:
    ig = information_gain(m)
    y = np.asarray(m.labels) == 1
    pos = np.asarray((m.X[np.flatnonzero(y)] != 0).sum(axis=0)).ravel()
    tot = np.asarray((m.X != 0).sum(axis=0)).ravel()
    order = sorted(range(ig.size), key=lambda i: (-ig[i], vocab.features[i]))[:n]
    return [RankedFeature(vocab.features[i], float(ig[i]), int(pos[i]), int(tot[i] - pos[i])) for i in order]


def write_top_features(ranked: Sequence[RankedFeature], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature", "information_gain_bits", "relevant_docs", "irrelevant_docs"])
        for r, f in enumerate(ranked, start=1):
            w.writerow([r, f.feature, repr(f.information_gain), f.relevant_docs, f.irrelevant_docs])


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _csv_row(row: dict, columns) -> list[str]:
    out = []
    for c in columns:
        v = row.get(c)
        out.append("+".join(v) if c == "ner_set" else _cell(v))
    return out


def _write_csv(path: Path, rows, columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(_csv_row(row, columns))


def _sort_key(row: dict):
    return row.get("spec", 0), row.get("fold", -1)


def pivot(summary_rows: Sequence[dict], metric: str = "mcc", rows: str = "classifier", cols: str = "transform"):
    """Return (row_keys, col_keys, {(r, c): (mean, se)}) in first-seen order."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    row_keys, col_keys, cells = [], [], {}
    for s in summary_rows:
        r, c = _cell(s[rows]) or "-", _cell(s[cols]) or "-"
        if r not in row_keys:
            row_keys.append(r)
        if c not in col_keys:
            col_keys.append(c)
        cells[(r, c)] = (s[metric], s[f"{metric}_se"])
    return row_keys, col_keys, cells


def format_pivot(summary_rows, metric: str = "mcc", rows: str = "classifier", cols: str = "transform") -> str:
    row_keys, col_keys, cells = pivot(summary_rows, metric, rows, cols)
    header = [f"{rows}\\{cols}"] + col_keys
    body = [
        [r] + [f"{cells[(r, c)][0]:.3f}±{cells[(r, c)][1]:.3f}" if (r, c) in cells else "" for c in col_keys]
        for r in row_keys
    ]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() for line in [header] + body)


def write_pivot_csv(summary_rows, path, metric: str = "mcc", rows: str = "classifier", cols: str = "transform"):
    row_keys, col_keys, cells = pivot(summary_rows, metric, rows, cols)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([rows] + [f"{c} {metric}" for c in col_keys] + [f"{c} {metric}_se" for c in col_keys])
        for r in row_keys:
            means = [repr(cells[(r, c)][0]) if (r, c) in cells else "" for c in col_keys]
            ses = [repr(cells[(r, c)][1]) if (r, c) in cells else "" for c in col_keys]
            w.writerow([r] + means + ses)


def emit_report(report: Report, out_dir, config: dict, metric: str = "mcc") -> dict[str, Path]:
    """Write results.csv, summary.csv, table.csv, results.json and foldplan.json.

    Rows are sorted so the files do not depend on execution order.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ReportError(f"output directory {out} is not writable: {exc}") from exc

    provenance = {"tool_version": __version__, "config_hash": config_hash(config)}
    fold_rows = sorted(report.fold_rows, key=_sort_key)
    summary_rows = sorted(report.summary_rows, key=_sort_key)
    paths = {
        "results_csv": out / "results.csv",
        "summary_csv": out / "summary.csv",
        "table_csv": out / "table.csv",
        "results_json": out / "results.json",
        "foldplan_json": out / "foldplan.json",
    }
    _write_csv(paths["results_csv"], [{**r, **provenance} for r in fold_rows], FOLD_COLUMNS)
    _write_csv(paths["summary_csv"], [{**r, **provenance} for r in summary_rows], SUMMARY_COLUMNS)
    write_pivot_csv(summary_rows, paths["table_csv"], metric)
    with open(paths["results_json"], "w", encoding="utf-8") as fh:
        json.dump(
            {**provenance, "summary": summary_rows, "folds": fold_rows, "errors": report.errors},
            fh, indent=1, sort_keys=True,
        )  # fmt: skip
        fh.write("\n")
    with open(paths["foldplan_json"], "w", encoding="utf-8") as fh:
        json.dump({**provenance, "plans": {str(k): v for k, v in report.plans.items()}}, fh, sort_keys=True)
        fh.write("\n")
    return paths
