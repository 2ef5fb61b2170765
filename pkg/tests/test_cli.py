"""End-to-end command-line behavior, including exit codes."""

import json
import os

import pytest
import yaml
from click.testing import CliRunner

from livsynth import cli
from livsynth.cli import main
from livsynth.genome import format_genome
from livsynth.presets import transformer_plus_plus

RUN_CONFIG = {
    "evolution": {"algorithm": "ga", "population": 4, "generations": 2,
                  "depth": 4, "width": 16, "seed": 3},
    "task": {"name": "copy", "vocab": 32, "seq_len": 32, "batch": 2},
    "train": {"total_steps": 5, "warmup_steps": 1},
    "objectives": ["size", "cache"],
}


@pytest.fixture()
def runner():
    return CliRunner()


def parse_tsv(output: str) -> dict:
    rows = {}
    for line in output.splitlines():
        parts = line.split("\t")
        if len(parts) == 2:
            rows[parts[0]] = parts[1]
    return rows


# --- score -----------------------------------------------------------------------


def test_score_reports_reference_costs(runner):
    genome = format_genome(transformer_plus_plus())
    result = runner.invoke(main, ["score", genome])
    assert result.exit_code == 0, result.output
    rows = parse_tsv(result.output)
    assert rows["params"] == "84953856"
    assert rows["cache_bytes"] == "150994944"
    # one per-instance row per operator
    assert sum(1 for l in result.output.splitlines()
               if l.split("\t")[0].isdigit()) == 24


def test_score_accepts_genome_files(runner, tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("11111 91111\n")
    result = runner.invoke(main, ["score", str(path)])
    assert result.exit_code == 0, result.output


def test_score_rejects_malformed_genomes_with_usage_exit(runner):
    result = runner.invoke(main, ["score", "not-a-genome"])
    assert result.exit_code == 1
    result = runner.invoke(main, ["score", "1,9,9,9,9"])
    assert result.exit_code == 1


def test_score_with_training_reports_loss(runner):
    result = runner.invoke(main, ["score", "91111-51111", "--width", "16",
                                  "--train-task", "copy", "--steps", "5"])
    assert result.exit_code == 0, result.output
    rows = parse_tsv(result.output)
    assert float(rows["eval_loss"]) > 0
    assert rows["diverged"] in ("true", "false")


# --- render ----------------------------------------------------------------------


def test_render_text_shows_sharing_arcs(runner):
    result = runner.invoke(main, ["render", "21211-31112-21221-32112"])
    assert result.exit_code == 0
    assert "reuses <- op 0" in result.output
    assert "routes <- op 1" in result.output


def test_render_dot_to_file(runner, tmp_path):
    out = tmp_path / "g.dot"
    result = runner.invoke(main, ["render", "21211-31112-21221-32112",
                                  "--format", "dot", "-o", str(out)])
    assert result.exit_code == 0
    dot = out.read_text()
    assert dot.startswith("digraph")
    assert "op0 -> op2" in dot and "op1 -> op3" in dot


# --- motifs ----------------------------------------------------------------------


def test_motifs_from_explicit_genomes(runner):
    result = runner.invoke(main, ["motifs", "21211-31112-21221-32112"])
    assert result.exit_code == 0
    assert "feat_distance_histogram\t1\t1" in result.output


def test_motifs_requires_input(runner):
    result = runner.invoke(main, ["motifs"])
    assert result.exit_code == 1


# --- evolve ----------------------------------------------------------------------


def write_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(RUN_CONFIG))
    return str(path)


def test_evolve_writes_log_snapshot_report_and_figures(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(main, ["evolve", "-c", write_config(tmp_path),
                                  "-o", str(out)])
    assert result.exit_code == 0, result.output
    lines = (out / "results.jsonl").read_text().splitlines()
    records = [json.loads(l) for l in lines]
    assert [r["generation"] for r in records] == [0, 1, 2]
    assert all(len(r["population"]) == 4 for r in records)
    report = (out / "report.tsv").read_text().splitlines()
    assert report[0] == "genome\tsize\tcache"
    assert len(report) == 5
    snapshot = json.loads((out / "snapshot.json").read_text())
    assert snapshot["generation"] == 2
    assert (out / "scores.png").exists()
    assert (out / "history.png").exists()


def test_evolve_without_figures(runner, tmp_path):
    out = tmp_path / "out2"
    result = runner.invoke(main, ["evolve", "-c", write_config(tmp_path),
                                  "-o", str(out), "--no-figures"])
    assert result.exit_code == 0, result.output
    assert not (out / "scores.png").exists()


def test_evolve_resume_does_not_duplicate_generations(runner, tmp_path):
    out = tmp_path / "out3"
    cfg = write_config(tmp_path)
    assert runner.invoke(main, ["evolve", "-c", cfg, "-o", str(out)]).exit_code == 0
    before = (out / "results.jsonl").read_text()
    result = runner.invoke(main, ["evolve", "-c", cfg, "-o", str(out),
                                  "--resume", str(out / "snapshot.json")])
    assert result.exit_code == 0, result.output
    assert (out / "results.jsonl").read_text() == before


def test_evolve_resume_rejects_mismatched_config(runner, tmp_path):
    out = tmp_path / "out4"
    cfg = write_config(tmp_path)
    assert runner.invoke(main, ["evolve", "-c", cfg, "-o", str(out)]).exit_code == 0
    other = dict(RUN_CONFIG, evolution=dict(RUN_CONFIG["evolution"], seed=99))
    other_path = tmp_path / "other.yaml"
    other_path.write_text(yaml.safe_dump(other))
    result = runner.invoke(main, ["evolve", "-c", str(other_path), "-o", str(out),
                                  "--resume", str(out / "snapshot.json")])
    assert result.exit_code == 1


def test_evolve_rejects_bad_config(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(dict(RUN_CONFIG, mystery=1)))
    result = runner.invoke(main, ["evolve", "-c", str(path), "-o",
                                  str(tmp_path / "o")])
    assert result.exit_code == 1


def test_evolve_surfaces_runtime_failures_with_exit_two(runner, tmp_path,
                                                        monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("mid-run failure")

    monkeypatch.setattr(cli, "run", boom)
    result = runner.invoke(main, ["evolve", "-c", write_config(tmp_path),
                                  "-o", str(tmp_path / "o5")])
    assert result.exit_code == 2


def test_motifs_from_results_log(runner, tmp_path):
    out = tmp_path / "out6"
    assert runner.invoke(main, ["evolve", "-c", write_config(tmp_path),
                                "-o", str(out), "--no-figures"]).exit_code == 0
    log = str(out / "results.jsonl")
    result = runner.invoke(main, ["motifs", "--log", log, "--width", "16"])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    header = lines[0].split("\t")
    assert header[0] == "generation"
    assert "SA-1" in header and "GMemless" in header
    assert "mean_group_distance" in header
    assert [l.split("\t")[0] for l in lines[1:]] == ["0", "1", "2"]


def test_motifs_log_skips_corrupt_lines(runner, tmp_path):
    out = tmp_path / "out7"
    assert runner.invoke(main, ["evolve", "-c", write_config(tmp_path),
                                "-o", str(out), "--no-figures"]).exit_code == 0
    log = out / "results.jsonl"
    log.write_text("this is not json\n" + log.read_text())
    result = runner.invoke(main, ["motifs", "--log", str(log), "--width", "16"])
    assert result.exit_code == 0
    assert "skipped 1 corrupt line(s)" in result.output \
        or "skipped 1 corrupt line(s)" in (result.stderr or "")
