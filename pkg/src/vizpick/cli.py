"""Command-line entry points for the full pipeline.

Every command honors --config (key = value file); explicit flags win over
VIZPICK_PORT / VIZPICK_DATA_DIR environment overrides, which win over the
config file.  Seeded commands are byte-for-byte reproducible.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import errors
from .config import ENV_DATA_DIR, ENV_PORT, read_config_file, setting
from .evaluation import format_report_table, read_judgment_log, report_to_json
from .features import features_to_dict, true_features
from .pipeline import (
    crowd_gold,
    evaluate_models,
    load_corpus_tables,
    read_session_tasks,
    recommend_tables,
    train_from_corpus,
    write_session,
)
from .render import RenderConfig, image_id, render_candidates, write_pgm, write_png
from .selector import parse_scoring
from .service import ServiceConfig, serve as run_service
from .synth import generate_corpus, write_corpus
from .tables import DataTable, normalize, parse_table, split_dataset, split_series
from .training import TrainConfig, load_bundle, save_bundle

EXIT_CODES: dict[type, int] = {
    errors.MalformedInput: 3,
    errors.TooFewColumns: 4,
    errors.TooFewRows: 5,
    errors.EmptyInput: 6,
    errors.EmptySequence: 7,
    errors.LengthMismatch: 8,
    errors.WrongArity: 9,
    errors.NotNormalized: 10,
    errors.ShapeMismatch: 11,
    errors.EmptyTrainingSet: 12,
    errors.EmptyEnsemble: 13,
    errors.IoFailure: 14,
    errors.VersionMismatch: 15,
    errors.CorruptBundle: 16,
    errors.KOutOfRange: 17,
    errors.MissingModel: 18,
    errors.UnknownTask: 19,
    errors.KeyMismatch: 20,
}


def _wrap_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except errors.VizPickError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CODES.get(type(exc), 1))
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _file_cfg(config_path: str | None) -> dict[str, str]:
    return read_config_file(config_path) if config_path else {}


def _load_input_tables(input_path: Path) -> list[DataTable]:
    """Parse one table file; tables with >2 numeric columns split into series."""
    fmt = "json" if input_path.suffix.lower() == ".json" else "csv"
    table = parse_table(input_path.read_bytes(), fmt=fmt, table_id=input_path.stem)
    return [table] if table.n_columns == 2 else split_series(table)


def _render_cfg(width, height, marker_radius, line_thickness, density_bins, density_sigma) -> RenderConfig:
    return RenderConfig(
        width=width,
        height=height,
        marker_radius=marker_radius,
        line_thickness=line_thickness,
        density_bins=density_bins,
        density_sigma=density_sigma,
    )


def _render_options(fn):
    for opt in reversed(
        [
            click.option("--width", default=64, show_default=True),
            click.option("--height", default=64, show_default=True),
            click.option("--marker-radius", default=1.5, show_default=True),
            click.option("--line-thickness", default=1, show_default=True),
            click.option("--density-bins", default=32, show_default=True),
            click.option("--density-sigma", default=1.5, show_default=True),
        ]
    ):
        fn = opt(fn)
    return fn


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Recommend charts by how well their pixels preserve the table's statistics."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.argument("input_path", metavar="INPUT", type=click.Path(exists=True, path_type=Path))
@click.option("--out", default=None, help="Write JSON here instead of stdout.")
@_wrap_errors
def stats(input_path: Path, out: str | None) -> None:
    """Print the 26 true statistics of a table (after normalization)."""
    tables = _load_input_tables(input_path)
    feats = {t.id: features_to_dict(true_features(normalize(t))) for t in tables}
    _emit(feats[tables[0].id] if len(tables) == 1 else feats, out)


@main.command()
@click.argument("input_path", metavar="INPUT", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--formats", default="pgm", show_default=True, help="Comma-separated: pgm,png")
@_render_options
@_wrap_errors
def render(input_path: Path, out_dir: Path, formats: str, **render_kw) -> None:
    """Rasterize the three candidate charts of a table."""
    cfg = _render_cfg(**render_kw)
    wanted = {f.strip() for f in formats.split(",") if f.strip()}
    unknown = wanted - {"pgm", "png"}
    if unknown:
        raise errors.MalformedInput(f"unknown image formats: {sorted(unknown)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    for t in _load_input_tables(input_path):
        t = normalize(t)
        for pt, img in render_candidates(t, cfg).items():
            stem = out_dir / image_id(t.id, pt)
            if "pgm" in wanted:
                write_pgm(img, stem.with_suffix(".pgm"))
            if "png" in wanted:
                write_png(img, stem.with_suffix(".png"))
    click.echo(f"wrote images to {out_dir}")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--count", default=200, show_default=True, help="Tables per archetype.")
@click.option("--noise", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_wrap_errors
def synth(out_dir: Path, count: int, noise: float, seed: int) -> None:
    """Generate a synthetic corpus with archetype-constructed gold labels."""
    entries = generate_corpus(count, noise, seed)
    write_corpus(entries, out_dir, noise, seed)
    click.echo(f"wrote {len(entries)} tables to {out_dir}")


def _train_config(epochs, seed, learning_rate, momentum, batch_size, beta, weight_eps) -> TrainConfig:
    return TrainConfig(
        learning_rate=learning_rate,
        momentum=momentum,
        batch_size=batch_size,
        epochs=epochs,
        seed=seed,
        smooth_l1_beta=beta,
        weight_epsilon=weight_eps,
    )


@main.command()
@click.option("--corpus", default=None, type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--epochs", default=30, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--momentum", default=0.9, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--beta", default=1.0, show_default=True, help="Smooth-L1 transition point.")
@click.option("--weight-eps", default=1e-3, show_default=True, help="Loss-weight denominator clamp.")
@click.option("--split-seed", default=0, show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@_wrap_errors
def train(corpus, out_path, config_path, split_seed, **cfg_kw) -> None:
    """Train one regressor per plot type on a corpus and save the bundle."""
    file_cfg = _file_cfg(config_path)
    corpus = setting(corpus, file_cfg, "data_dir", None, Path, env_var=ENV_DATA_DIR)
    if corpus is None:
        raise errors.EmptyInput("no corpus directory given (flag --corpus, config data_dir, or env)")
    bundle, split = train_from_corpus(corpus, _train_config(**cfg_kw), split_seed=split_seed)
    save_bundle(bundle, out_path)
    summary = {
        pt: bundle.metadata["per_type"][pt]["final_train_loss"]
        for pt in ("scatter", "line", "density")
    }
    click.echo(
        f"trained on {len(split.train)} tables (val {len(split.validation)}, test {len(split.test)}); "
        f"final train loss {json.dumps(summary)}; bundle -> {out_path}"
    )


@main.command()
@click.option("--input", "input_path", default=None, type=click.Path(exists=True, path_type=Path))
@click.option("--corpus", default=None, type=click.Path(path_type=Path))
@click.option("--split", default="test", show_default=True,
              type=click.Choice(["train", "validation", "test", "all"]))
@click.option("--split-seed", default=0, show_default=True)
@click.option("--models", "model_paths", multiple=True, required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--scoring", default="top5", show_default=True)
@click.option("--out", default=None)
@click.option("--session-dir", default=None, type=click.Path(path_type=Path))
@click.option("--task-plan", default="default", type=click.Choice(["default", "full"]), show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@_wrap_errors
def recommend(input_path, corpus, split, split_seed, model_paths, scoring, out, session_dir,
              task_plan, config_path) -> None:
    """Recommend the best chart for one table or a corpus split."""
    file_cfg = _file_cfg(config_path)
    bundles = [load_bundle(p) for p in model_paths]
    kind = parse_scoring(setting(scoring, file_cfg, "scoring", "top5"))

    if input_path is not None:
        tables = _load_input_tables(input_path)
    else:
        corpus = setting(corpus, file_cfg, "data_dir", None, Path, env_var=ENV_DATA_DIR)
        if corpus is None:
            raise errors.EmptyInput("need --input or a corpus directory")
        labeled = load_corpus_tables(corpus)
        if split == "all":
            tables = [lt.table for lt in labeled]
        else:
            parts = split_dataset([lt.table.id for lt in labeled], split_seed)
            keep = set(getattr(parts, split))
            tables = [lt.table for lt in labeled if lt.table.id in keep]

    recs = recommend_tables(tables, bundles, kind)
    payload = [r.to_json_dict() for r in recs]
    _emit(payload[0] if len(payload) == 1 else payload, out)
    if session_dir is not None:
        write_session(session_dir, tables, recs, plan=task_plan)
        click.echo(f"judging session written to {session_dir}", err=True)


@main.command(name="eval")
@click.option("--corpus", default=None, type=click.Path(path_type=Path))
@click.option("--split", default="test", show_default=True,
              type=click.Choice(["train", "validation", "test", "all"]))
@click.option("--split-seed", default=0, show_default=True)
@click.option("--models", "model_paths", multiple=True, required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--scorings", default="l1,top5,top10", show_default=True)
@click.option("--gold", default="manifest", type=click.Choice(["manifest", "crowd"]), show_default=True)
@click.option("--judgments", "judgments_path", default=None, type=click.Path(exists=True, path_type=Path))
@click.option("--session-dir", default=None, type=click.Path(exists=True, path_type=Path),
              help="Session with tasks.json; required for crowd gold.")
@click.option("--report-dir", default=None, type=click.Path(path_type=Path))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@_wrap_errors
def eval_cmd(corpus, split, split_seed, model_paths, scorings, gold, judgments_path,
             session_dir, report_dir, config_path) -> None:
    """Score recommendation quality against gold labels; emit the report table."""
    file_cfg = _file_cfg(config_path)
    corpus = setting(corpus, file_cfg, "data_dir", None, Path, env_var=ENV_DATA_DIR)
    if corpus is None:
        raise errors.EmptyInput("no corpus directory given")
    labeled = load_corpus_tables(corpus)
    if split == "all":
        chosen = labeled
    else:
        parts = split_dataset([lt.table.id for lt in labeled], split_seed)
        keep = set(getattr(parts, split))
        chosen = [lt for lt in labeled if lt.table.id in keep]
    tables = [lt.table for lt in chosen]

    if gold == "manifest":
        golds = {lt.table.id: frozenset([lt.gold]) for lt in chosen if lt.gold is not None}
    else:
        if judgments_path is None or session_dir is None:
            raise errors.EmptyInput("crowd gold needs --judgments and --session-dir")
        golds = crowd_gold(read_judgment_log(judgments_path), read_session_tasks(session_dir))
    tables = [t for t in tables if t.id in golds]
    if not tables:
        raise errors.EmptyInput("no gold-labeled tables in the chosen split")

    bundles = [(p.stem, [load_bundle(p)]) for p in model_paths]
    groups = list(bundles)
    if len(bundles) > 1:
        groups.append((f"({'+'.join(name for name, _ in bundles)})",
                       [b for _, bs in bundles for b in bs]))
    kinds = [parse_scoring(s) for s in scorings.split(",") if s.strip()]
    rows = evaluate_models(tables, golds, groups, kinds)

    table_text = format_report_table(rows)
    click.echo(table_text)
    if report_dir is not None:
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "report.txt").write_text(table_text + "\n", encoding="utf-8")
        (report_dir / "report.json").write_text(
            json.dumps(report_to_json(rows), indent=2) + "\n", encoding="utf-8"
        )
        click.echo(f"report written to {report_dir}", err=True)


@main.command()
@click.option("--session-dir", default=None, type=click.Path(path_type=Path))
@click.option("--port", default=None, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--log", "log_path", default=None, type=click.Path(path_type=Path))
@click.option("--static", "static_dir", default=None, type=click.Path(path_type=Path))
@click.option("--distinct-csi", is_flag=True, help="Require each CSI rating at most once.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@_wrap_errors
def serve(session_dir, port, host, log_path, static_dir, distinct_csi, config_path) -> None:
    """Run the blocking judging service over a prepared session directory."""
    file_cfg = _file_cfg(config_path)
    session_dir = setting(session_dir, file_cfg, "session_dir", None, Path, env_var=ENV_DATA_DIR)
    if session_dir is None:
        raise errors.EmptyInput("no session directory given")
    cfg = ServiceConfig(
        session_dir=session_dir,
        log_path=setting(log_path, file_cfg, "judgment_log", Path(session_dir) / "judgments.jsonl", Path),
        port=setting(port, file_cfg, "port", 8765, int, env_var=ENV_PORT),
        host=host,
        static_dir=setting(static_dir, file_cfg, "static_dir", None, Path),
        distinct_csi=distinct_csi,
    )
    click.echo(f"serving session {cfg.session_dir} on http://{cfg.host}:{cfg.port}/")
    run_service(cfg)


if __name__ == "__main__":
    main()
