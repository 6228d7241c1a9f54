"""
Tests for the command-line entry point and its exit codes.
"""
import sys
import os

import pandas as pd
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

import main as cli


def test_help_exits_cleanly(isolated_config, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    assert "entropy" in capsys.readouterr().out


def test_entropy_command(isolated_config, dataset_on_disk, tmp_path, capsys):
    out = tmp_path / "table.bin"
    code = cli.main(["entropy", "--graph", str(dataset_on_disk), "--out", str(out),
                     "--export-csv", str(tmp_path / "h.csv")])
    assert code == cli.EXIT_OK
    assert out.exists() and (tmp_path / "h.csv").exists()
    assert "N=20" in capsys.readouterr().out


def test_missing_edges_file(isolated_config, dataset_on_disk, tmp_path, capsys):
    (dataset_on_disk / "toy.cites").unlink()
    code = cli.main(["entropy", "--graph", str(dataset_on_disk), "--out", str(tmp_path / "t.bin")])
    assert code == cli.EXIT_BAD_INPUT
    assert str(dataset_on_disk) in capsys.readouterr().err


def test_negative_lambda(isolated_config, dataset_on_disk, tmp_path):
    code = cli.main(["entropy", "--graph", str(dataset_on_disk), "--lambda", "-1",
                     "--out", str(tmp_path / "t.bin")])
    assert code == cli.EXIT_BAD_INPUT


def test_fixed_k_requires_k(isolated_config, dataset_on_disk, tmp_path):
    code = cli.main(["train", "--graph", str(dataset_on_disk), "--mode", "fixed-k", "--d", "1",
                     "--out", str(tmp_path / "run")])
    assert code == cli.EXIT_BAD_INPUT


def test_unknown_backbone_rejected_by_parser(isolated_config, dataset_on_disk, tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["baseline", "--graph", str(dataset_on_disk), "--backbone", "gat",
                  "--out", str(tmp_path / "run")])
    assert exc.value.code == 2


def test_report_on_empty_directory(isolated_config, tmp_path):
    assert cli.main(["report", "--in", str(tmp_path)]) == cli.EXIT_BAD_INPUT


def test_fixed_k_zero_matches_baseline_bundle(isolated_config, dataset_on_disk, tmp_path):
    common = ["--graph", str(dataset_on_disk), "--splits", "2", "--backbone", "sage"]
    assert cli.main(["train", *common, "--mode", "fixed-k", "--k", "0", "--d", "0",
                     "--out", str(tmp_path / "fixed")]) == cli.EXIT_OK
    assert cli.main(["baseline", *common, "--out", str(tmp_path / "base")]) == cli.EXIT_OK
    fixed = pd.read_csv(tmp_path / "fixed" / "metrics.csv")
    base = pd.read_csv(tmp_path / "base" / "metrics.csv")
    pd.testing.assert_frame_equal(fixed, base, check_exact=False, atol=1e-12, rtol=0)


def test_train_then_report(isolated_config, dataset_on_disk, tmp_path, capsys):
    runs = tmp_path / "runs"
    table = tmp_path / "table.bin"
    assert cli.main(["entropy", "--graph", str(dataset_on_disk), "--out", str(table)]) == cli.EXIT_OK
    assert cli.main(["train", "--graph", str(dataset_on_disk), "--entropy", str(table), "--splits", "2",
                     "--iterations", "4", "--out", str(runs / "rare")]) == cli.EXIT_OK
    assert cli.main(["report", "--in", str(runs)]) == cli.EXIT_OK
    summary = pd.read_csv(runs / "summary.csv")
    assert len(summary) == 1
    assert summary.loc[0, "mode"] == "rare"
    assert (runs / "curves.csv").exists()
    assert "RUN COMPLETE" in capsys.readouterr().out
