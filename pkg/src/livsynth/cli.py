"""Command-line interface: evolve, score, render, motifs."""

from __future__ import annotations

import json
import os
import sys

import click

from .config import ConfigError, load_run_config
from .costs import genome_cost_report
from .evolve import load_snapshot, run, save_snapshot
from .fitness import ObjectiveSpec, TaskSpec, evaluate, make_evaluator
from .genome import (BackboneGenome, GenomeParseError, load_genome, parse,
                     validate)
from .model import CompileError, ModelDims
from .optim import TrainConfig
from .pool import default_pool
from .render import (format_motifs_delimited, motif_statistics,
                     population_motifs, render_dot, render_text)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _fail_usage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USAGE)


def _fail_runtime(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_RUNTIME)


def _read_genome(arg: str, width: int) -> BackboneGenome:
    try:
        if os.path.exists(arg):
            if arg.endswith(".json"):
                return load_genome(arg)
            with open(arg, encoding="utf-8") as fh:
                return parse(fh.read(), width=width)
        return parse(arg, width=width)
    except (GenomeParseError, KeyError, json.JSONDecodeError) as exc:
        _fail_usage(f"cannot read genome {arg!r}: {exc}")


@click.group()
def main():
    """Evolve and inspect linear input-varying sequence backbones."""


@main.command("evolve")
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True), help="YAML run configuration.")
@click.option("--out", "-o", "out_dir", required=True, type=click.Path(),
              help="Output directory for logs, snapshots, report, figures.")
@click.option("--resume", type=click.Path(exists=True), default=None,
              help="Snapshot to continue from.")
@click.option("--figures/--no-figures", default=True,
              help="Also render score/history figures next to the report.")
def evolve_cmd(config_path, out_dir, resume, figures):
    """Run an evolutionary search described by a YAML config."""
    try:
        cfg = load_run_config(config_path)
    except ConfigError as exc:
        _fail_usage(str(exc))
    os.makedirs(out_dir, exist_ok=True)
    pool = default_pool()
    evaluator = make_evaluator(cfg.objectives, cfg.task, cfg.dims, cfg.train,
                               pool, base_seed=cfg.evolution.seed)
    state = None
    if resume:
        try:
            snap_config, state = load_snapshot(resume)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            _fail_usage(f"cannot load snapshot: {exc}")
        if snap_config != cfg.evolution:
            _fail_usage("snapshot was produced with a different evolution config")

    log_path = os.path.join(out_dir, "results.jsonl")
    if not resume:
        open(log_path, "w", encoding="utf-8").close()

    def on_generation(st):
        with open(log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(st.history[-1]) + "\n")
        save_snapshot(cfg.evolution, st, os.path.join(out_dir, "snapshot.json"))

    try:
        state = run(cfg.evolution, evaluator, pool, state, on_generation)
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        _fail_runtime(f"evolution failed: {exc}")
    save_snapshot(cfg.evolution, state, os.path.join(out_dir, "snapshot.json"))

    names = [o.name for o in cfg.objectives]
    report = os.path.join(out_dir, "report.tsv")
    with open(report, "w", encoding="utf-8") as fh:
        fh.write("\t".join(["genome"] + names) + "\n")
        for genome, score in zip(state.population, state.scores):
            fh.write("\t".join([evaluator(genome).genome_text]
                               + [f"{v:.6g}" for v in score]) + "\n")
    if figures:
        from . import figures as figs
        figs.score_scatter(state.scores, os.path.join(out_dir, "scores.png"),
                           labels=tuple((names + ["", ""])[:2]))
        if state.history:
            figs.history_curve(state.history, os.path.join(out_dir, "history.png"))
    click.echo(f"wrote {report}")


@main.command("score")
@click.argument("genome_arg", metavar="GENOME")
@click.option("--width", default=768, show_default=True)
@click.option("--seq-len", default=4096, show_default=True,
              help="Sequence length for the cache estimate.")
@click.option("--bytes-per-element", default=2, show_default=True)
@click.option("--train-task", default=None,
              type=click.Choice(["copy", "recall", "tiny_lm"]),
              help="Also train at desk scale on this task and report the loss.")
@click.option("--steps", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
def score_cmd(genome_arg, width, seq_len, bytes_per_element, train_task, steps, seed):
    """Static costs (and optionally desk-scale loss) for one genome."""
    genome = _read_genome(genome_arg, width)
    pool = default_pool()
    faults = validate(genome, pool)
    if faults:
        _fail_usage("invalid genome: " + "; ".join(str(f) for f in faults))
    try:
        report = genome_cost_report(genome, ModelDims(width=width), pool,
                                    seq_len, bytes_per_element)
    except CompileError as exc:
        _fail_usage(str(exc))
    rows = [("params", str(report.params)),
            ("params_millions", f"{report.params_millions:.3f}"),
            ("cache_bytes", str(report.cache_bytes)),
            ("cache_megabytes", f"{report.cache_megabytes:.3f}")]
    if train_task:
        task = TaskSpec(name=train_task)
        dims = ModelDims(width=min(width, 32), vocab=task.vocab,
                         seq_len=task.seq_len)
        small = BackboneGenome(genome.genes, dims.width)
        cfg = TrainConfig(total_steps=steps, warmup_steps=max(1, steps // 10))
        try:
            result = evaluate(small, (ObjectiveSpec("quality"),),
                              task, dims, cfg, pool, base_seed=seed)
        except Exception as exc:  # noqa: BLE001
            _fail_runtime(f"training failed: {exc}")
        rows += [("eval_loss", f"{result.objectives[0]:.6f}"),
                 ("task_accuracy", f"{(result.accuracy or 0.0):.4f}"),
                 ("diverged", str(result.diverged).lower())]
    for key, value in rows:
        click.echo(f"{key}\t{value}")
    click.echo("instance\tname\tparams\tcache_bytes")
    for item in report.per_instance:
        click.echo(f"{item.index}\t{item.name}\t{item.params}\t{item.cache_bytes}")


@main.command("render")
@click.argument("genome_arg", metavar="GENOME")
@click.option("--format", "fmt", default="text", show_default=True,
              type=click.Choice(["text", "dot"]))
@click.option("--width", default=768, show_default=True)
@click.option("--out", "-o", type=click.Path(), default=None)
def render_cmd(genome_arg, fmt, width, out):
    """Render a genome as a text diagram or Graphviz dot."""
    genome = _read_genome(genome_arg, width)
    text = render_text(genome) if fmt == "text" else render_dot(genome)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.command("motifs")
@click.argument("genome_args", metavar="[GENOME]...", nargs=-1)
@click.option("--log", "log_path", type=click.Path(exists=True), default=None,
              help="Per-generation results log (one record per line).")
@click.option("--width", default=768, show_default=True)
@click.option("--figure", type=click.Path(), default=None,
              help="Also render distance histograms to this image file.")
def motifs_cmd(genome_args, log_path, width, figure):
    """Sharing-motif statistics from a results log or explicit genomes.

    With --log, emits one row per generation: class counts, shared-LIV
    counts, and mean sharing distances. Corrupt lines are skipped with a
    warning.
    """
    all_genomes: list[BackboneGenome] = []
    if log_path:
        rows, skipped = [], 0
        with open(log_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    genomes = [parse(e["genome"], width=width)
                               for e in record["population"]]
                    generation = record["generation"]
                except (KeyError, TypeError, ValueError) as exc:
                    click.echo(f"warning: skipping line {lineno}: {exc}", err=True)
                    skipped += 1
                    continue
                rows.append((generation, genomes))
                all_genomes.extend(genomes)
        if not rows:
            _fail_usage("log contains no readable generation records")
        pool = default_pool()
        class_names = [pool.spec(c).name for c in pool.class_ids()]
        click.echo("\t".join(["generation"] + class_names
                             + ["featurizer_shared_livs", "group_shared_livs",
                                "mean_featurizer_distance", "mean_group_distance"]))
        for generation, genomes in rows:
            agg = population_motifs(genomes)
            counts = agg["class_counts"]
            click.echo("\t".join(
                [str(generation)]
                + [str(counts.get(name, 0)) for name in class_names]
                + [str(agg["featurizer_shared_livs"]),
                   str(agg["group_shared_livs"]),
                   f"{agg['mean_featurizer_distance']:.3f}",
                   f"{agg['mean_group_distance']:.3f}"]))
        if skipped:
            click.echo(f"skipped {skipped} corrupt line(s)", err=True)
    else:
        all_genomes.extend(_read_genome(arg, width) for arg in genome_args)
        if not all_genomes:
            _fail_usage("provide at least one genome or --log")
        click.echo(format_motifs_delimited(motif_statistics(all_genomes)))
    if figure and all_genomes:
        from .figures import motif_bars
        motif_bars(motif_statistics(all_genomes), figure)
        click.echo(f"wrote {figure}")


if __name__ == "__main__":
    main()
