from __future__ import annotations

from pathlib import Path

import pytest
from click.testing import CliRunner

from trackany.cli import main
from trackany.synth import SynthSpec, make_synthetic_dataset


@pytest.fixture(scope="module")
def dataset(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("clidata")
    make_synthetic_dataset(SynthSpec(sequences=1, frames=10, seed=4), root)
    return root


def test_synth_command(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "synth", "--sequences", "1", "--frames", "4", "--out", str(tmp_path / "d"),
    ])
    assert result.exit_code == 0, result.output
    assert "wrote 1 sequences" in result.output
    assert (tmp_path / "d" / "JPEGImages" / "480p" / "synth-000" / "00003.jpg").exists()


def test_synth_rejects_bad_spec(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "synth", "--frames", "200", "--drift", "4.0", "--out", str(tmp_path / "d"),
    ])
    assert result.exit_code == 2
    assert "error" in result.output


def test_eval_command_writes_results(dataset, tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--erosion-base", "0.0",
        "--out", str(tmp_path / "results"),
    ])
    assert result.exit_code == 0, result.output
    assert "100.0" in result.output
    assert (tmp_path / "results" / "results.json").exists()
    assert (tmp_path / "results" / "table.txt").exists()


def test_eval_with_split_file(dataset, tmp_path):
    split = tmp_path / "split.txt"
    split.write_text("synth-000\n")
    runner = CliRunner()
    result = runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--split", str(split),
    ])
    assert result.exit_code == 0, result.output


def test_eval_bad_config_exit_2(dataset):
    runner = CliRunner()
    result = runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--init-clicks", "0",
    ])
    assert result.exit_code == 2


def test_eval_backend_failure_exit_3(dataset):
    runner = CliRunner()
    result = runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--backend", "remote:http://127.0.0.1:1",
    ])
    assert result.exit_code == 3


def test_replay_command_round_trip(dataset, tmp_path):
    runner = CliRunner()
    out = tmp_path / "results"
    assert runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--erosion-base", "1.0",
        "--out", str(out),
    ]).exit_code == 0
    log = out / "logs" / "synth-000.jsonl"
    result = runner.invoke(main, [
        "replay", "--log", str(log), "--video", str(dataset), "--erosion-base", "1.0",
    ])
    assert result.exit_code == 0, result.output
    assert "reproduced exactly" in result.output


def test_replay_detects_divergence(dataset, tmp_path):
    runner = CliRunner()
    out = tmp_path / "results"
    runner.invoke(main, [
        "eval", "--dataset", str(dataset), "--erosion-base", "1.0", "--out", str(out),
    ])
    log = out / "logs" / "synth-000.jsonl"
    result = runner.invoke(main, [
        "replay", "--log", str(log), "--video", str(dataset), "--erosion-base", "0.0",
    ])
    assert result.exit_code == 4
    assert "divergence" in result.output


def test_version_flag():
    result = CliRunner().invoke(main, ["--version"])
    assert result.exit_code == 0
