"""Human-judgment harness: CSI/FT tasks, the point scheme, tallies, and metrics.

CSI tasks show all three charts of a table plus its per-column mean/std and
collect an easiest/doable/impossible rating per chart.  FT tasks show one
chart and collect an estimate of the fraction of points whose x (or y) value
exceeds 0.5.  Points follow the fixed scheme (2/1/0); per-table point tallies
define the preferred plot type, possibly a tie set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import AbstractSet, Mapping, Sequence

import numpy as np

from .errors import EmptyInput, KeyMismatch, MalformedInput, UnknownTask
from .features import column_stats
from .render import image_id
from .tables import CANONICAL_PLOT_ORDER, DataTable, PlotType


class TaskKind(Enum):
    CSI = "csi"
    FT = "ft"


class CsiRating(Enum):
    EASIEST = "easiest"
    DOABLE = "doable"
    IMPOSSIBLE = "impossible"


CSI_POINTS = {CsiRating.EASIEST: 2, CsiRating.DOABLE: 1, CsiRating.IMPOSSIBLE: 0}

# Relative-error bands of the FT point scheme.
FT_FULL_CREDIT = 0.2
FT_HALF_CREDIT = 0.4


def score_csi(rating: CsiRating) -> int:
    return CSI_POINTS[rating]


def true_fraction(t: DataTable, axis: str) -> float:
    """Fraction of rows whose x (or y) value is strictly greater than 0.5."""
    col = t.column_values(0 if axis == "x" else 1)
    return float(np.count_nonzero(col > 0.5)) / len(col)


def score_ft(estimate: float, truth: float) -> int:
    """2/1/0 points by relative error; a zero truth only rewards an exact zero."""
    err = abs(estimate - truth)
    if err <= FT_FULL_CREDIT * truth:
        return 2
    if err <= FT_HALF_CREDIT * truth:
        return 1
    return 0


@dataclass
class Task:
    id: str
    kind: TaskKind
    table_id: str
    # CSI fields
    csi_images: dict[PlotType, str] | None = None
    shown_stats: dict[str, float] | None = None
    # FT fields
    ft_image: str | None = None
    ft_plot_type: PlotType | None = None
    ft_axis: str | None = None
    ft_true_fraction: float | None = None

    def client_dict(self) -> dict:
        """The task as served to judges (answers withheld)."""
        if self.kind is TaskKind.CSI:
            return {
                "id": self.id,
                "kind": "csi",
                "table_id": self.table_id,
                "images": {pt.value: self.csi_images[pt] for pt in CANONICAL_PLOT_ORDER},
                "shown_stats": self.shown_stats,
            }
        return {
            "id": self.id,
            "kind": "ft",
            "table_id": self.table_id,
            "image": self.ft_image,
            "axis": self.ft_axis,
        }

    def to_json_dict(self) -> dict:
        d = self.client_dict()
        if self.kind is TaskKind.FT:
            d["plot_type"] = self.ft_plot_type.value
            d["true_fraction"] = self.ft_true_fraction
        return d

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "Task":
        kind = TaskKind(d["kind"])
        if kind is TaskKind.CSI:
            return cls(
                id=d["id"],
                kind=kind,
                table_id=d["table_id"],
                csi_images={PlotType(k): v for k, v in d["images"].items()},
                shown_stats=dict(d["shown_stats"]),
            )
        return cls(
            id=d["id"],
            kind=kind,
            table_id=d["table_id"],
            ft_image=d["image"],
            ft_plot_type=PlotType(d["plot_type"]),
            ft_axis=d["axis"],
            ft_true_fraction=float(d["true_fraction"]),
        )


@dataclass
class JudgmentRecord:
    task_id: str
    judge_id: str
    timestamp: float
    ratings: dict[PlotType, CsiRating] | None = None
    fraction: float | None = None

    def to_json_dict(self) -> dict:
        d: dict = {"task_id": self.task_id, "judge_id": self.judge_id, "timestamp": self.timestamp}
        if self.ratings is not None:
            d["ratings"] = {pt.value: r.value for pt, r in self.ratings.items()}
        if self.fraction is not None:
            d["fraction"] = self.fraction
        return d

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "JudgmentRecord":
        ratings = None
        if "ratings" in d and d["ratings"] is not None:
            ratings = {PlotType(k): CsiRating(v) for k, v in d["ratings"].items()}
        fraction = d.get("fraction")
        return cls(
            task_id=d["task_id"],
            judge_id=d["judge_id"],
            timestamp=float(d.get("timestamp", 0.0)),
            ratings=ratings,
            fraction=None if fraction is None else float(fraction),
        )


@dataclass(frozen=True)
class PointsTally:
    table_id: str
    points: dict[PlotType, int]
    preferred: frozenset[PlotType]

    def to_json_dict(self) -> dict:
        return {
            "table_id": self.table_id,
            "points": {pt.value: self.points[pt] for pt in CANONICAL_PLOT_ORDER},
            "preferred": [pt.value for pt in CANONICAL_PLOT_ORDER if pt in self.preferred],
        }


def build_tasks(tables: Sequence[DataTable], plan: str = "default") -> list[Task]:
    """One CSI task per table plus FT tasks per the chosen plan.

    "default" pairs each table with two FT tasks (axis x and y) whose shown
    plot type cycles with the table index; "full" emits one FT task per plot
    type per axis.
    """
    if plan not in ("default", "full"):
        raise ValueError(f"unknown task plan {plan!r}")
    tasks: list[Task] = []
    types = CANONICAL_PLOT_ORDER
    for i, t in enumerate(tables):
        xs = column_stats(t.column_values(0))
        ys = column_stats(t.column_values(1))
        tasks.append(
            Task(
                id=f"{t.id}:csi",
                kind=TaskKind.CSI,
                table_id=t.id,
                csi_images={pt: image_id(t.id, pt) for pt in types},
                shown_stats={
                    "x_mean": float(xs[2]),
                    "x_std": float(xs[3]),
                    "y_mean": float(ys[2]),
                    "y_std": float(ys[3]),
                },
            )
        )
        if plan == "default":
            ft_specs = [("x", types[i % 3]), ("y", types[(i + 1) % 3])]
        else:
            ft_specs = [(axis, pt) for pt in types for axis in ("x", "y")]
        for axis, pt in ft_specs:
            tasks.append(
                Task(
                    id=f"{t.id}:ft:{axis}:{pt.value}",
                    kind=TaskKind.FT,
                    table_id=t.id,
                    ft_image=image_id(t.id, pt),
                    ft_plot_type=pt,
                    ft_axis=axis,
                    ft_true_fraction=true_fraction(t, axis),
                )
            )
    return tasks


def validate_judgment(
    record: JudgmentRecord, tasks_by_id: Mapping[str, Task], distinct_csi: bool = False
) -> None:
    """Raise UnknownTask/MalformedInput when a judgment cannot be tallied."""
    task = tasks_by_id.get(record.task_id)
    if task is None:
        raise UnknownTask(f"judgment references unknown task {record.task_id!r}")
    if not record.judge_id:
        raise MalformedInput("judge_id must be non-empty")
    if task.kind is TaskKind.CSI:
        if record.fraction is not None or record.ratings is None:
            raise MalformedInput("CSI judgment must carry ratings and no fraction")
        if set(record.ratings) != set(PlotType):
            raise MalformedInput("CSI judgment must rate all three plot types")
        if distinct_csi and len(set(record.ratings.values())) != len(record.ratings):
            raise MalformedInput("CSI ratings must be distinct under this configuration")
    else:
        if record.ratings is not None or record.fraction is None:
            raise MalformedInput("FT judgment must carry a fraction and no ratings")
        if not 0.0 <= record.fraction <= 1.0:
            raise MalformedInput(f"FT fraction {record.fraction} outside [0, 1]")


def aggregate_tally(
    judgments: Sequence[JudgmentRecord], tasks: Sequence[Task]
) -> list[PointsTally]:
    """Per-table per-plot-type point totals over all judgments, sorted by table id."""
    by_id = {t.id: t for t in tasks}
    points: dict[str, dict[PlotType, int]] = {}
    for rec in judgments:
        task = by_id.get(rec.task_id)
        if task is None:
            raise UnknownTask(f"judgment references unknown task {rec.task_id!r}")
        tally = points.setdefault(task.table_id, {pt: 0 for pt in PlotType})
        if task.kind is TaskKind.CSI:
            for pt, rating in rec.ratings.items():
                tally[pt] += score_csi(rating)
        else:
            tally[task.ft_plot_type] += score_ft(rec.fraction, task.ft_true_fraction)

    out = []
    for table_id in sorted(points):
        tally = points[table_id]
        best = max(tally.values())
        preferred = frozenset(pt for pt, v in tally.items() if v == best)
        out.append(PointsTally(table_id=table_id, points=tally, preferred=preferred))
    return out


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1: dict[PlotType, float]
    weighted_f1: float
    confusion: dict[tuple[PlotType, PlotType], int]
    support: dict[PlotType, int]

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1": {pt.value: self.f1[pt] for pt in CANONICAL_PLOT_ORDER},
            "weighted_f1": self.weighted_f1,
            "support": {pt.value: self.support[pt] for pt in CANONICAL_PLOT_ORDER},
            "confusion": {
                f"{g.value}->{p.value}": n for (g, p), n in sorted(
                    self.confusion.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
                )
            },
        }


def metrics(
    preds: Mapping[str, PlotType], golds: Mapping[str, AbstractSet[PlotType]]
) -> Metrics:
    """Accuracy and F1 against (possibly tied) gold label sets.

    A tied gold set containing the prediction resolves to the prediction,
    otherwise to its canonically-first member; per-class F1 and supports come
    from the resolved confusion counts.
    """
    if set(preds) != set(golds):
        raise KeyMismatch("prediction and gold maps cover different tables")
    if not preds:
        raise EmptyInput("no tables to score")

    confusion: dict[tuple[PlotType, PlotType], int] = {}
    hits = 0
    for table_id, pred in preds.items():
        gold_set = golds[table_id]
        if pred in gold_set:
            hits += 1
            resolved = pred
        else:
            resolved = min(gold_set, key=lambda p: p.canonical_index)
        confusion[(resolved, pred)] = confusion.get((resolved, pred), 0) + 1

    f1: dict[PlotType, float] = {}
    support: dict[PlotType, int] = {}
    for c in PlotType:
        tp = confusion.get((c, c), 0)
        fp = sum(n for (g, p), n in confusion.items() if p is c and g is not c)
        fn = sum(n for (g, p), n in confusion.items() if g is c and p is not c)
        support[c] = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1[c] = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    total_support = sum(support.values())
    weighted = sum(support[c] * f1[c] for c in PlotType) / total_support
    return Metrics(
        accuracy=hits / len(preds),
        f1=f1,
        weighted_f1=weighted,
        confusion=confusion,
        support=support,
    )


SCORING_DISPLAY = {"l1": "L1-Loss"}


def scoring_display(label: str) -> str:
    if label in SCORING_DISPLAY:
        return SCORING_DISPLAY[label]
    if label.startswith("top"):
        return f"Top-{label[3:]} Closest Loss"
    return label


def format_report_table(rows: Sequence[tuple[str, str, Metrics]]) -> str:
    """Plain-text report, one row per (extraction model, scoring) combination."""
    header = (
        "Statistics Extraction Model",
        "Visualization Selection Model",
        "Accuracy",
        "F1-Score(Scatter)",
        "F1-Score(Density)",
        "F1-Score(Line)",
        "Weighted F1-Score",
    )
    body = [
        (
            model,
            scoring_display(scoring),
            f"{m.accuracy:.2f}",
            f"{m.f1[PlotType.SCATTER]:.2f}",
            f"{m.f1[PlotType.DENSITY]:.2f}",
            f"{m.f1[PlotType.LINE]:.2f}",
            f"{m.weighted_f1:.2f}",
        )
        for model, scoring, m in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = [" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in [header, *body]]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def report_to_json(rows: Sequence[tuple[str, str, Metrics]]) -> list[dict]:
    return [
        {"model": model, "scoring": scoring, "metrics": m.to_json_dict()}
        for model, scoring, m in rows
    ]


def read_judgment_log(path) -> list[JudgmentRecord]:
    """Parse an append-only JSON-lines judgment log."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(JudgmentRecord.from_json_dict(json.loads(line)))
    return records
