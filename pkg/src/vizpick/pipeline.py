"""End-to-end wiring: corpus loading, training-pair construction, batch
recommendation, judging-session artifacts, and report evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import IoFailure, MalformedInput
from .evaluation import (
    JudgmentRecord,
    Metrics,
    Task,
    aggregate_tally,
    build_tasks,
    metrics,
)
from .features import true_features
from .render import RenderConfig, image_id, render_candidates, write_png
from .selector import Recommendation, Scoring, select
from .synth import read_manifest
from .tables import DataTable, DatasetSplit, PlotType, normalize, parse_table, split_dataset
from .training import ModelBundle, TrainConfig, TrainPair, train


@dataclass(frozen=True)
class LabeledTable:
    table: DataTable  # raw values; normalize before rendering
    gold: PlotType | None
    archetype: str | None = None


def load_corpus_tables(corpus_dir) -> list[LabeledTable]:
    """Load every table listed in a corpus manifest, in manifest order."""
    corpus = Path(corpus_dir)
    manifest = read_manifest(corpus)
    out = []
    for entry in manifest["tables"]:
        path = corpus / entry["file"]
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read table file {path}: {exc}") from exc
        table = parse_table(data, fmt="csv", table_id=entry["id"])
        gold = PlotType(entry["gold"]) if "gold" in entry else None
        out.append(LabeledTable(table, gold, entry.get("archetype")))
    return out


def training_pairs(
    tables: Sequence[DataTable], cfg: RenderConfig | None = None
) -> dict[PlotType, list[TrainPair]]:
    """Render all candidates and pair each image with the table's true features."""
    pairs: dict[PlotType, list[TrainPair]] = {pt: [] for pt in PlotType}
    for raw in tables:
        t = normalize(raw)
        feats = true_features(t)
        for pt, img in render_candidates(t, cfg).items():
            pairs[pt].append((img, feats))
    return pairs


def train_from_corpus(
    corpus_dir,
    cfg: TrainConfig,
    render_cfg: RenderConfig | None = None,
    split_seed: int = 0,
) -> tuple[ModelBundle, DatasetSplit]:
    """80:10:10 split of the corpus, then per-type training on the train+val parts."""
    labeled = load_corpus_tables(corpus_dir)
    by_id = {lt.table.id: lt.table for lt in labeled}
    split = split_dataset([lt.table.id for lt in labeled], split_seed)
    train_pairs = training_pairs([by_id[i] for i in split.train], render_cfg)
    val_pairs = training_pairs([by_id[i] for i in split.validation], render_cfg)
    return train(train_pairs, cfg, val_pairs), split


def recommend_tables(
    tables: Sequence[DataTable],
    bundles: "ModelBundle | Sequence[ModelBundle]",
    scoring: Scoring | None = None,
    render_cfg: RenderConfig | None = None,
) -> list[Recommendation]:
    return [select(normalize(t), bundles, scoring, render_cfg) for t in tables]


def write_session(
    session_dir,
    tables: Sequence[DataTable],
    recommendations: Sequence[Recommendation],
    render_cfg: RenderConfig | None = None,
    plan: str = "default",
) -> None:
    """Write the artifacts the judging service serves: plots, tasks, recommendations."""
    session = Path(session_dir)
    plots = session / "plots"
    try:
        plots.mkdir(parents=True, exist_ok=True)
        normalized = [normalize(t) for t in tables]
        for t in normalized:
            for pt, img in render_candidates(t, render_cfg).items():
                write_png(img, plots / f"{image_id(t.id, pt)}.png")
        tasks = build_tasks(normalized, plan=plan)
        (session / "tasks.json").write_text(
            json.dumps([t.to_json_dict() for t in tasks], indent=2), encoding="utf-8"
        )
        (session / "recommendations.json").write_text(
            json.dumps([r.to_json_dict() for r in recommendations], indent=2), encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailure(f"cannot write session to {session_dir}: {exc}") from exc


def read_session_tasks(session_dir) -> list[Task]:
    path = Path(session_dir) / "tasks.json"
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read tasks from {path}: {exc}") from exc
    except ValueError as exc:
        raise MalformedInput(f"tasks file {path} is not valid JSON: {exc}") from exc
    return [Task.from_json_dict(d) for d in payload]


def read_session_recommendations(session_dir) -> dict[str, PlotType]:
    path = Path(session_dir) / "recommendations.json"
    if not path.exists():
        return {}
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise MalformedInput(f"recommendations file {path} is not valid JSON: {exc}") from exc
    return {d["table_id"]: PlotType(d["chosen"]) for d in payload}


def crowd_gold(
    judgments: Sequence[JudgmentRecord], tasks: Sequence[Task]
) -> dict[str, frozenset[PlotType]]:
    """Preferred plot type sets derived from the judgment log."""
    return {t.table_id: t.preferred for t in aggregate_tally(judgments, tasks)}


def evaluate_models(
    tables: Sequence[DataTable],
    golds: Mapping[str, frozenset[PlotType]],
    model_groups: Sequence[tuple[str, Sequence[ModelBundle]]],
    scorings: Sequence[Scoring],
    render_cfg: RenderConfig | None = None,
) -> list[tuple[str, str, Metrics]]:
    """Metrics for every (extraction model, scoring) combination.

    Each group's predictions are computed once per scoring; groups with more
    than one bundle are prediction-averaging ensembles.
    """
    rows = []
    gold_map = {tid: golds[tid] for tid in (t.id for t in tables)}
    for name, bundles in model_groups:
        for scoring in scorings:
            recs = recommend_tables(tables, list(bundles), scoring, render_cfg)
            preds = {r.table_id: r.chosen for r in recs}
            rows.append((name, scoring.label, metrics(preds, gold_map)))
    return rows


def selection_accuracy(
    recommendations: Sequence[Recommendation], golds: Mapping[str, frozenset[PlotType]]
) -> float:
    preds = {r.table_id: r.chosen for r in recommendations}
    return metrics(preds, {tid: golds[tid] for tid in preds}).accuracy
