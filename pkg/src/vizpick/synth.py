"""Seeded synthetic table corpora with archetype-constructed gold plot types.

Three archetypes stand in for crowd-labeled data at desk scale: "cloud"
(dense overlapping point mixtures, gold density), "series" (smooth y = f(x)
trends, gold line), and "sparse" (a handful of separated points, gold
scatter).  Generation is deterministic per (seed, archetype, index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoFailure, MalformedInput
from .tables import DataTable, PlotType, to_csv_bytes

ARCHETYPES = ("cloud", "series", "sparse")

GOLD_BY_ARCHETYPE = {
    "cloud": PlotType.DENSITY,
    "series": PlotType.LINE,
    "sparse": PlotType.SCATTER,
}

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class SyntheticSpec:
    archetype: str
    count: int
    noise: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")


@dataclass(frozen=True)
class CorpusEntry:
    table: DataTable
    archetype: str
    gold: PlotType


# Sign prior for trends/correlations: a corpus with mean correlation near zero
# makes the pearson normalizer degenerate, which drowns the most table-specific
# feature in amplification noise.
POSITIVE_LEAN = 0.7

# Fraction of series tables that are exact flatlines (constant y).  Without
# them, 10 of the 26 features are identical for every table and carry no
# selection signal at all.
FLATLINE_FRACTION = 0.12


def _signed(rng: np.random.Generator) -> float:
    return 1.0 if rng.uniform() < POSITIVE_LEAN else -1.0


def _cloud(rng: np.random.Generator, noise: float) -> np.ndarray:
    """Saturating point-cloud mixture.

    High point counts and tight, well-separated, equal-width clusters keep the
    scatter/line renderings fully saturated: the heavily varied mixture
    weights and interior mass profiles (peaked vs flat) show up only in the
    density plot's brightness.
    """
    n = int(rng.integers(400, 901))
    k = 2 if rng.uniform() < 0.8 else 3
    weights = np.maximum(rng.dirichlet(np.full(k, 0.4)), 0.08)
    weights = weights / weights.sum()
    counts = rng.multinomial(n, weights)
    centers = rng.uniform(0.12, 0.88, size=(k, 2))
    for _ in range(60):  # push cluster centers apart
        done = True
        for i in range(k):
            for j in range(i + 1, k):
                d = centers[i] - centers[j]
                dist = np.hypot(*d)
                if dist < 0.45:
                    shift = (0.45 - dist) / 2 * (d / (dist + 1e-9))
                    centers[i] = np.clip(centers[i] + shift, 0.08, 0.92)
                    centers[j] = np.clip(centers[j] - shift, 0.08, 0.92)
                    done = False
        if done:
            break
    # one cluster width per table so silhouette size cannot stand in for count
    sigma = rng.uniform(0.045, 0.07) * (1.0 + noise)
    parts = []
    for c, center in zip(counts, centers):
        rho = _signed(rng) * rng.uniform(0.1, 0.85)
        if rng.uniform() < 0.5:
            z = rng.standard_normal((c, 2))
            # truncate at 2.2 sigma: no sparse halo whose texture would leak
            # the cluster weight into the saturated scatter silhouette
            radius = np.hypot(z[:, 0], z[:, 1])
            z = z * np.minimum(1.0, 2.2 / np.maximum(radius, 1e-9))[:, None]
        else:
            # flat disk with the same footprint: distinguishable from the
            # peaked profile only through density-plot brightness
            radius = 2.2 * np.sqrt(rng.uniform(0.0, 1.0, c))
            angle = rng.uniform(0.0, 2.0 * np.pi, c)
            z = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
        pts = np.empty((c, 2))
        pts[:, 0] = center[0] + sigma * z[:, 0]
        pts[:, 1] = center[1] + sigma * (rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1])
        parts.append(pts)
    pts = np.concatenate(parts)
    return pts[rng.permutation(len(pts))]


def _series(rng: np.random.Generator, noise: float) -> np.ndarray:
    """Clean functional trend at irregularly gapped sorted x; some exact flatlines.

    The x gaps leave a dotted rendering ambiguous where the curve bends, while
    the connected rendering bridges them.
    """
    n = int(rng.integers(25, 71))
    x = np.sort(rng.uniform(0.0, 1.0, n) ** rng.uniform(1.0, 1.8))
    if rng.uniform() < FLATLINE_FRACTION:
        return np.column_stack([x, np.full(n, rng.uniform(0.2, 0.8))])
    family = rng.choice(("linear", "sine", "cubic", "sine", "exp"))
    if family == "linear":
        a = rng.uniform(0.25, 1.0) * _signed(rng)
        y = a * x + rng.uniform(-0.2, 0.2)
    elif family == "cubic":
        c = rng.uniform(-1.0, 1.0, size=3)
        slope = rng.uniform(0.3, 1.0) * _signed(rng)
        y = c[0] + slope * x + c[1] * x**2 * 0.5 + c[2] * x**3 * 0.3
    elif family == "sine":
        amp = rng.uniform(0.2, 0.5)
        freq = rng.uniform(1.5, 4.0)
        y = amp * np.sin(2.0 * np.pi * freq * x + rng.uniform(0, 2 * np.pi)) + rng.uniform(0.3, 0.7)
    else:
        kexp = rng.uniform(1.0, 3.0) * _signed(rng)
        y = np.exp(kexp * x)
    span = y.max() - y.min()
    if span < 1e-9:
        span = 1.0
    y = y + rng.normal(0.0, noise * span, n)
    return np.column_stack([x, y])


def _sparse(rng: np.random.Generator, noise: float) -> np.ndarray:
    """A handful of points, sometimes with tight pairs.

    Tight pairs stay resolvable as overlapping marker stamps but melt into a
    single blob on the coarse density grid.
    """
    n = int(rng.integers(5, 11))
    min_sep = rng.uniform(0.04, 0.25)
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < n and tries < 500:
        cand = rng.uniform(0.05, 0.95, size=2)
        tries += 1
        if all(np.hypot(*(cand - p)) >= min_sep for p in pts):
            pts.append(cand)
    while len(pts) < n:
        pts.append(rng.uniform(0.05, 0.95, size=2))
    out = np.array(pts)
    if noise > 0:
        out = out + rng.normal(0.0, noise * 0.05, out.shape)
    return out


_GENERATORS = {"cloud": _cloud, "series": _series, "sparse": _sparse}


def generate_archetype(spec: SyntheticSpec) -> list[CorpusEntry]:
    gen = _GENERATORS[spec.archetype]
    arch_index = ARCHETYPES.index(spec.archetype)
    entries = []
    for i in range(spec.count):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, arch_index, i]))
        pts = gen(rng, spec.noise)
        table = DataTable.build(
            f"{spec.archetype}-{i:04d}", [("x", pts[:, 0]), ("y", pts[:, 1])]
        )
        entries.append(CorpusEntry(table, spec.archetype, GOLD_BY_ARCHETYPE[spec.archetype]))
    return entries


def generate_corpus(count_per_archetype: int, noise: float = 0.05, seed: int = 0) -> list[CorpusEntry]:
    entries: list[CorpusEntry] = []
    for archetype in ARCHETYPES:
        entries.extend(
            generate_archetype(SyntheticSpec(archetype, count_per_archetype, noise, seed))
        )
    return entries


def write_corpus(entries: list[CorpusEntry], out_dir, noise: float, seed: int) -> None:
    out = Path(out_dir)
    try:
        (out / "tables").mkdir(parents=True, exist_ok=True)
        manifest = {
            "version": 1,
            "seed": seed,
            "noise": noise,
            "tables": [
                {
                    "id": e.table.id,
                    "archetype": e.archetype,
                    "gold": e.gold.value,
                    "file": f"tables/{e.table.id}.csv",
                }
                for e in entries
            ],
        }
        for e in entries:
            (out / "tables" / f"{e.table.id}.csv").write_bytes(to_csv_bytes(e.table))
        (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write corpus to {out_dir}: {exc}") from exc


def read_manifest(corpus_dir) -> dict:
    path = Path(corpus_dir) / MANIFEST_NAME
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read corpus manifest {path}: {exc}") from exc
    except ValueError as exc:
        raise MalformedInput(f"corpus manifest {path} is not valid JSON: {exc}") from exc
    if "tables" not in manifest:
        raise MalformedInput(f"corpus manifest {path} lacks a 'tables' list")
    return manifest
