"""End-to-end CLI behavior: determinism, error documents, output files."""

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from qpose import cli


def run_cli(argv, out_dir):
    """In-process invocation with a pinned output directory."""
    return cli.main([*argv, "--out-dir", str(out_dir)])


def run_proc(argv):
    return subprocess.run(
        [sys.executable, "-m", "qpose", *argv],
        capture_output=True, text=True, timeout=300,
    )


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture()
def dataset(tmp_path):
    path = tmp_path / "ds.csv"
    code = run_cli(
        ["gen", "--seed", "3", "--n-source", "160", "--n-target", "160",
         "--out", str(path)],
        tmp_path / "gen",
    )
    assert code == 0
    return path


class TestGen:
    def test_byte_identical_reruns(self, tmp_path):
        paths = []
        for i in range(2):
            p = tmp_path / f"ds{i}.csv"
            code = run_cli(
                ["gen", "--seed", "7", "--n-source", "120", "--n-target", "80",
                 "--out", str(p)],
                tmp_path / f"run{i}",
            )
            assert code == 0
            paths.append(p)
        assert sha(paths[0]) == sha(paths[1])

    def test_counts_table_printed(self, tmp_path, capsys):
        run_cli(["gen", "--seed", "0", "--n-source", "800", "--n-target", "1040",
                 "--out", str(tmp_path / "d.csv")], tmp_path)
        out = capsys.readouterr().out
        assert "pose  source  target" in out
        assert "sum      800    1040" in out
        class2 = next(line for line in out.splitlines() if line.startswith("   2"))
        assert class2.endswith("173")  # largest target class from the committed ratios

    def test_null_shift_keeps_domains_close(self, tmp_path):
        data = tmp_path / "null.csv"
        run_cli(["gen", "--seed", "5", "--shift", "0", "--n-source", "400",
                 "--n-target", "400", "--out", str(data)], tmp_path / "g")
        train_dir = tmp_path / "train"
        code = run_cli(
            ["train", "--seed", "5", "--data", str(data), "--model", "knn"],
            train_dir,
        )
        assert code == 0
        summary = json.loads((train_dir / "summary.json").read_text())
        gap = summary["in_domain"]["accuracy"] - summary["cross_domain"]["accuracy"]
        assert abs(gap) <= 0.02

    def test_metadata_written(self, tmp_path):
        out = tmp_path / "m"
        run_cli(["gen", "--seed", "1", "--n-source", "24", "--n-target", "24",
                 "--out", str(tmp_path / "d.csv")], out)
        doc = json.loads((out / "gen_metadata.json").read_text())
        assert doc["seed"] == 1
        assert len(doc["dataset_sha256"]) == 64


class TestTrain:
    def test_qnn_summary_reports_18_quantum_params(self, dataset, tmp_path):
        out = tmp_path / "qnn"
        code = run_cli(
            ["train", "--seed", "2", "--data", str(dataset), "--model", "qnn",
             "--qubits", "10", "--layers", "1", "--epochs", "1"],
            out,
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["quantum_params"] == 18
        assert summary["classical_params"] == 458
        assert (out / "checkpoint.json").exists()

    def test_input_csv_not_mutated(self, dataset, tmp_path):
        before = sha(dataset)
        run_cli(["train", "--seed", "0", "--data", str(dataset), "--model", "gnb"],
                tmp_path / "t")
        assert sha(dataset) == before

    def test_labeled_count_flag(self, dataset, tmp_path):
        out = tmp_path / "c"
        code = run_cli(
            ["train", "--seed", "0", "--data", str(dataset), "--model", "knn",
             "--labeled-count", "64"],
            out,
        )
        assert code == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["labeled_count"] == 64


class TestEval:
    def test_perfect_fit_scores_one(self, dataset, tmp_path):
        train_dir = tmp_path / "knn"
        run_cli(["train", "--seed", "0", "--data", str(dataset), "--model", "knn",
                 "--k", "1", "--labeled-fraction", "1.0"], train_dir)
        eval_dir = tmp_path / "eval"
        code = run_cli(
            ["eval", "--seed", "0", "--data", str(dataset),
             "--checkpoint", str(train_dir / "checkpoint.json"),
             "--domain", "source"],
            eval_dir,
        )
        assert code == 0
        summary = json.loads((eval_dir / "eval_summary.json").read_text())
        assert summary["accuracy"] == 1.0
        assert (eval_dir / "confusion.csv").exists()
        assert (eval_dir / "roc_class_0.csv").exists()

    def test_missing_checkpoint_error_document(self, dataset, tmp_path):
        proc = run_proc(["eval", "--data", str(dataset),
                         "--checkpoint", str(tmp_path / "absent.json"),
                         "--out-dir", str(tmp_path / "e")])
        assert proc.returncode != 0
        doc = json.loads(proc.stderr.strip().splitlines()[-1])
        assert doc["error"]
        assert "message" in doc


class TestTransfer:
    def test_repeated_transfer_outputs(self, dataset, tmp_path):
        train_dir = tmp_path / "dnn"
        run_cli(["train", "--seed", "1", "--data", str(dataset), "--model", "dnn",
                 "--epochs", "5"], train_dir)
        tl_dir = tmp_path / "tl"
        code = run_cli(
            ["transfer", "--seed", "1", "--data", str(dataset),
             "--checkpoint", str(train_dir / "checkpoint.json"),
             "--samples", "24", "--epochs", "2", "--repeats", "3"],
            tl_dir,
        )
        assert code == 0
        doc = json.loads((tl_dir / "transfer_summary.json").read_text())
        assert doc["n_repeats"] == 3
        assert len(doc["runs"]) == 3
        assert all(r["n_fewshot"] == 24 for r in doc["runs"])
        assert (tl_dir / "transfer_checkpoint.json").exists()

    def test_baseline_checkpoint_rejected(self, dataset, tmp_path):
        train_dir = tmp_path / "knn"
        run_cli(["train", "--seed", "0", "--data", str(dataset), "--model", "knn"],
                train_dir)
        proc = run_proc(["transfer", "--data", str(dataset),
                         "--checkpoint", str(train_dir / "checkpoint.json"),
                         "--samples", "8", "--out-dir", str(tmp_path / "x")])
        assert proc.returncode != 0
        doc = json.loads(proc.stderr.strip().splitlines()[-1])
        assert "fine-tun" in doc["message"]


class TestCurve:
    def test_curve_csv_written(self, dataset, tmp_path):
        out = tmp_path / "curve"
        code = run_cli(
            ["curve", "--seed", "0", "--data", str(dataset), "--model", "knn",
             "--grid", "16,40", "--repeats", "2", "--eval-domain", "target"],
            out,
        )
        assert code == 0
        lines = (out / "curve.csv").read_text().strip().splitlines()
        assert lines[0].startswith("n_labeled")
        assert len(lines) == 3


class TestHarness:
    def test_help_exits_zero(self):
        proc = run_proc(["--help"])
        assert proc.returncode == 0
        for sub in ("gen", "train", "transfer", "eval", "curve", "make-figures"):
            assert sub in proc.stdout

    def test_subcommand_help_exits_zero(self):
        for sub in ("gen", "train", "transfer", "eval", "curve", "make-figures"):
            proc = run_proc([sub, "--help"])
            assert proc.returncode == 0
            assert "--seed" in proc.stdout

    def test_unknown_subcommand_fails(self):
        proc = run_proc(["frobnicate"])
        assert proc.returncode != 0

    def test_error_document_on_missing_data(self, tmp_path):
        proc = run_proc(["train", "--data", str(tmp_path / "no.csv"),
                         "--model", "dnn", "--out-dir", str(tmp_path / "o")])
        assert proc.returncode == 1
        doc = json.loads(proc.stderr.strip().splitlines()[-1])
        assert doc["error"] == "FileNotFoundError"

    def test_out_dir_env_var(self, dataset, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(target))
        code = cli.main(["train", "--seed", "0", "--data", str(dataset),
                         "--model", "gnb"])
        assert code == 0
        assert (target / "summary.json").exists()

    def test_make_figures_quick_end_to_end(self, tmp_path):
        out = tmp_path / "figs"
        code = run_cli(["make-figures", "--quick", "--seed", "11"], out)
        assert code == 0
        facts = json.loads((out / "facts.json").read_text())
        assert set(facts["models"]) == {"dnn", "qnn", "knn", "gnb"}
        for name, entry in facts["models"].items():
            assert 0.0 <= entry["in_domain_accuracy"] <= 1.0
            assert 0.0 <= entry["cross_domain_accuracy"] <= 1.0
        assert "transfer" in facts["models"]["qnn"]
        assert (out / "curve_dnn" / "curve.csv").exists()
        assert (out / "eval_qnn" / "confusion.csv").exists()

    def test_deterministic_reruns_bit_identical(self, tmp_path):
        # two fresh subprocesses, same seed, --deterministic: identical metrics
        data = tmp_path / "d.csv"
        run_cli(["gen", "--seed", "9", "--n-source", "120", "--n-target", "120",
                 "--out", str(data)], tmp_path / "g")
        summaries = []
        for i in range(2):
            out = tmp_path / f"run{i}"
            proc = run_proc(["train", "--seed", "9", "--deterministic",
                             "--data", str(data), "--model", "dnn",
                             "--epochs", "8", "--out-dir", str(out)])
            assert proc.returncode == 0, proc.stderr
            summaries.append((out / "summary.json").read_bytes())
            checkpoint = (out / "checkpoint.json").read_bytes()
            if i == 0:
                first_checkpoint = checkpoint
        assert summaries[0] == summaries[1]
        assert checkpoint == first_checkpoint
