import numpy as np
import pytest

from vizpick.synth import (
    ARCHETYPES,
    GOLD_BY_ARCHETYPE,
    SyntheticSpec,
    generate_archetype,
    generate_corpus,
    read_manifest,
    write_corpus,
)
from vizpick.tables import MIN_ROWS, PlotType, normalize


class TestSpec:
    def test_gold_mapping(self):
        assert GOLD_BY_ARCHETYPE["cloud"] is PlotType.DENSITY
        assert GOLD_BY_ARCHETYPE["series"] is PlotType.LINE
        assert GOLD_BY_ARCHETYPE["sparse"] is PlotType.SCATTER

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SyntheticSpec("blob", 10)
        with pytest.raises(ValueError):
            SyntheticSpec("cloud", 0)


class TestGeneration:
    def test_counts_and_ids(self):
        entries = generate_corpus(4, noise=0.05, seed=1)
        assert len(entries) == 12
        ids = [e.table.id for e in entries]
        assert len(set(ids)) == 12
        assert sum(e.archetype == "cloud" for e in entries) == 4

    def test_tables_are_pipeline_admissible(self):
        for e in generate_corpus(3, noise=0.05, seed=2):
            assert e.table.n_rows >= MIN_ROWS
            assert e.table.n_columns == 2
            norm = normalize(e.table)
            assert norm.is_normalized()

    def test_deterministic(self):
        a = generate_corpus(3, noise=0.05, seed=7)
        b = generate_corpus(3, noise=0.05, seed=7)
        for ea, eb in zip(a, b):
            assert ea.table.id == eb.table.id
            for i in range(2):
                assert np.array_equal(ea.table.column_values(i), eb.table.column_values(i))

    def test_seeds_differ(self):
        a = generate_corpus(3, noise=0.05, seed=7)
        b = generate_corpus(3, noise=0.05, seed=8)
        assert any(
            not np.array_equal(ea.table.column_values(0), eb.table.column_values(0))
            for ea, eb in zip(a, b)
        )

    def test_index_stable_prefix(self):
        # entry i is a pure function of (seed, archetype, i), not of count
        small = generate_archetype(SyntheticSpec("sparse", 3, 0.05, 5))
        big = generate_archetype(SyntheticSpec("sparse", 6, 0.05, 5))
        for a, b in zip(small, big):
            assert np.array_equal(a.table.column_values(1), b.table.column_values(1))


class TestCorpusIO:
    def test_write_and_read(self, tmp_path):
        entries = generate_corpus(2, noise=0.05, seed=3)
        write_corpus(entries, tmp_path, noise=0.05, seed=3)
        manifest = read_manifest(tmp_path)
        assert manifest["seed"] == 3
        assert len(manifest["tables"]) == 6
        for entry in manifest["tables"]:
            assert (tmp_path / entry["file"]).exists()
            assert entry["gold"] in ("scatter", "line", "density")

    def test_deterministic_bytes(self, tmp_path):
        for d in ("a", "b"):
            write_corpus(generate_corpus(2, 0.05, 4), tmp_path / d, noise=0.05, seed=4)
        for f in sorted((tmp_path / "a" / "tables").iterdir()):
            other = tmp_path / "b" / "tables" / f.name
            assert f.read_bytes() == other.read_bytes()
