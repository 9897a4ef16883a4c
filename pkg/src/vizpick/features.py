"""Two-stage aggregate statistics of a table: the 26-value feature schema.

Column-level statistics (min, max, mean, std, skew) are computed per column,
then aggregated across columns with (min, max, mean, std, MAD), giving 25
values laid out as index = 5 * aggregate_index + stat_index; index 25 is the
Pearson correlation of the two columns.  Conventions: std is population std,
skew is Fisher-Pearson g1 (m3 / m2^1.5), MAD is mean absolute deviation about
the mean.  Near-zero variance (< 1e-12) degrades skew and pearson_r to 0.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptySequence, LengthMismatch, WrongArity
from .tables import DataTable

COLUMN_STAT_NAMES = ("min", "max", "mean", "std", "skew")
TABLE_AGGREGATE_NAMES = ("min", "max", "mean", "std", "mad")
FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{agg}_of_{stat}" for agg in TABLE_AGGREGATE_NAMES for stat in COLUMN_STAT_NAMES
) + ("pearson_r",)
N_FEATURES = len(FEATURE_NAMES)

VARIANCE_FLOOR = 1e-12


def column_stats(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """(min, max, mean, std, skew) of one column."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptySequence("cannot compute statistics of an empty column")
    mean = v.mean()
    centered = v - mean
    m2 = (centered**2).mean()
    if m2 < VARIANCE_FLOOR:
        skew = 0.0
    else:
        m3 = (centered**3).mean()
        skew = m3 / m2**1.5
    return np.array([v.min(), v.max(), mean, math.sqrt(m2), skew])


def table_aggregate(col_stats: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Aggregate per-column stat 5-tuples across columns into the 25-value block."""
    m = np.asarray(col_stats, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != len(COLUMN_STAT_NAMES):
        raise WrongArity(f"expected an (n_columns, 5) stats array, got shape {m.shape}")
    if m.shape[0] == 0:
        raise EmptySequence("need statistics of at least one column")
    out = np.empty(25, dtype=np.float64)
    for s in range(len(COLUMN_STAT_NAMES)):
        col = m[:, s]
        mean = col.mean()
        out[0 * 5 + s] = col.min()
        out[1 * 5 + s] = col.max()
        out[2 * 5 + s] = mean
        out[3 * 5 + s] = math.sqrt(((col - mean) ** 2).mean())
        out[4 * 5 + s] = np.abs(col - mean).mean()
    return out


def pearson_r(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Pearson correlation; 0 when either column has (near-)zero variance."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise LengthMismatch(f"column shapes {xa.shape} and {ya.shape} differ")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = (dx * dx).sum()
    syy = (dy * dy).sum()
    if sxx < VARIANCE_FLOOR or syy < VARIANCE_FLOOR:
        return 0.0
    r = (dx * dy).sum() / (math.sqrt(sxx) * math.sqrt(syy))
    return min(1.0, max(-1.0, float(r)))


def true_features(t: DataTable) -> np.ndarray:
    """The 26 ground-truth features of a normalized two-column table."""
    if t.n_columns != 2:
        raise WrongArity(f"table {t.id!r} has {t.n_columns} columns; need exactly 2")
    stats = [column_stats(c.values) for c in t.columns]
    block = table_aggregate(stats)
    r = pearson_r(t.column_values(0), t.column_values(1))
    return np.concatenate([block, [r]])


def features_to_dict(vec: np.ndarray) -> dict[str, float]:
    """FeatureVector as a JSON-ready mapping in schema order."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (N_FEATURES,):
        raise WrongArity(f"expected {N_FEATURES} features, got shape {v.shape}")
    return {name: float(v[i]) for i, name in enumerate(FEATURE_NAMES)}


def features_from_dict(payload: Mapping[str, float]) -> np.ndarray:
    if set(payload) != set(FEATURE_NAMES):
        raise WrongArity("feature mapping does not match the 26-name schema")
    return np.array([float(payload[name]) for name in FEATURE_NAMES])
