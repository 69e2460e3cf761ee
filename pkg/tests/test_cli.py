"""End-to-end pipeline smoke tests against a throwaway run directory."""

import json
from pathlib import Path

import pytest

from gecprobe.cli import main, parse_pattern
from gecprobe.data import read_jsonl
from gecprobe.errors import ValidationError

TINY = [
    "--layers", "1", "--dim", "32", "--ff-dim", "64", "--heads", "2",
    "--dropout", "0.0", "--label-smoothing", "0.0",
    "--epochs", "4", "--batch-size", "64", "--warmup", "20",
]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory) -> Path:
    run = tmp_path_factory.mktemp("cli") / "sva"
    base = ["--run", str(run)]
    steps = [
        ["gen", *base, "--etype", "VERB:SVA", "--count", "2000", "--seed", "3"],
        ["split", *base, "--train-size", "400", "--dev-size", "50",
         "--test-size", "100", "--n-patterns", "4"],
        ["train", *base, "--setting", "known", *TINY],
        ["train", *base, "--setting", "unknown", *TINY],
        ["correct", *base, "--setting", "known", "--beam", "2"],
        ["correct", *base, "--setting", "unknown", "--beam", "2"],
        ["score", *base, "--setting", "known"],
        ["score", *base, "--setting", "unknown"],
        ["report", *base],
    ]
    for argv in steps:
        assert main(argv) == 0, f"step failed: {argv[0]}"
    return run


class TestPipelineArtifacts:
    def test_run_tree(self, run_dir):
        expected = [
            "corpus/corpus.jsonl",
            "corpus/gen_manifest.json",
            "splits/known/train.jsonl",
            "splits/unknown/manifest.json",
            "model/known/best.ckpt",
            "model/known/best.ckpt.json",
            "model/known/final.ckpt",
            "model/known/train_log.jsonl",
            "model/unknown/best.ckpt",
            "hyps/known/test.txt",
            "hyps/unknown/test.txt",
            "reports/known/correction.json",
            "reports/known/detection.json",
            "reports/known/buckets.tsv",
            "reports/unknown/correction.json",
            "reports/gap.json",
            "reports/gap_table.txt",
            "manifest.json",
        ]
        for rel in expected:
            assert (run_dir / rel).is_file(), f"missing {rel}"

    def test_corpus_is_valid_and_sized(self, run_dir):
        pairs = read_jsonl(run_dir / "corpus" / "corpus.jsonl")
        assert len(pairs) == 2000
        assert all(p.error_type == "VERB:SVA" for p in pairs)

    def test_hypothesis_count_matches_test_partition(self, run_dir):
        lines = (run_dir / "hyps" / "known" / "test.txt").read_text().splitlines()
        test = read_jsonl(run_dir / "splits" / "known" / "test.jsonl")
        assert len(lines) == len(test) == 100
        assert all(line.strip() for line in lines)

    def test_train_log_is_jsonl(self, run_dir):
        lines = (run_dir / "model" / "known" / "train_log.jsonl").read_text().splitlines()
        assert len(lines) == 4  # one per epoch
        entries = [json.loads(line) for line in lines]
        assert [e["epoch"] for e in entries] == [1, 2, 3, 4]

    def test_score_report_shape(self, run_dir):
        payload = json.loads((run_dir / "reports" / "known" / "correction.json").read_text())
        assert payload["mode"] == "correction"
        assert all(isinstance(payload[k], int) for k in ("tp", "fp", "fn"))
        assert "strata" in payload and "strata_by_noise" in payload

    def test_gap_artifacts(self, run_dir):
        payload = json.loads((run_dir / "reports" / "gap.json").read_text())
        assert payload["error_type"] == "VERB:SVA"
        assert set(payload["gaps"]) == {"correction", "detection"}
        for row in payload["gaps"].values():
            assert set(row) == {"mode", "known_f_half", "unknown_f_half", "delta"}
            assert row["delta"] == round(
                row["unknown_f_half"] - row["known_f_half"], 2
            )
        table = (run_dir / "reports" / "gap_table.txt").read_text()
        assert "known" in table and "unknown" in table

    def test_manifest_records_stages_with_hashes(self, run_dir):
        manifest = json.loads((run_dir / "manifest.json").read_text())
        stages = manifest["stages"]
        assert {
            "gen", "split", "train:known", "correct:known:test", "score:known:test",
        } <= set(stages)
        for entry in stages["gen"]["outputs"].values():
            assert len(entry["sha256"]) == 64
        assert stages["train:known"]["outputs"]["log"]["sha256"] is None  # wall times change

    def test_gen_is_reproducible(self, run_dir, tmp_path):
        other = tmp_path / "again"
        assert main(["gen", "--run", str(other), "--etype", "VERB:SVA",
                     "--count", "2000", "--seed", "3"]) == 0
        assert (
            (other / "corpus" / "corpus.jsonl").read_bytes()
            == (run_dir / "corpus" / "corpus.jsonl").read_bytes()
        )


class TestFewshot:
    def test_smoke_and_report(self, run_dir):
        argv = ["fewshot", "--run", str(run_dir), "--k", "0,1", "--seeds", "0",
                "--beam", "2", *TINY]
        assert main(argv) == 0
        payload = json.loads((run_dir / "reports" / "fewshot.json").read_text())
        assert [row["k"] for row in payload["rows"]] == [0, 1]
        for row in payload["rows"]:
            assert row["test_sentences"] > 0
            assert len(row["per_seed"]) == 1
        # the table printer must now include the few-shot block
        assert main(["report", "--run", str(run_dir)]) == 0

    def test_pattern_must_be_held_out(self, run_dir):
        argv = ["fewshot", "--run", str(run_dir), "--pattern", "hit=>hits",
                "--k", "0", "--seeds", "0", *TINY]
        assert main(argv) == 2

    def test_pattern_parser(self):
        assert parse_pattern("walk=>walks") == ("walk", "walks")
        assert parse_pattern("a b=>b a") == ("a b", "b a")
        with pytest.raises(ValidationError):
            parse_pattern("no-arrow")


class TestExitCodes:
    def test_infeasible_split_is_3(self, run_dir):
        argv = ["split", "--run", str(run_dir), "--train-size", "5000",
                "--dev-size", "1000", "--test-size", "1000"]
        assert main(argv) == 3

    def test_capacity_exceeded_is_3(self, tmp_path):
        argv = ["gen", "--run", str(tmp_path / "r"), "--etype", "MORPH",
                "--count", "100000", "--seed", "0"]
        assert main(argv) == 3

    def test_validation_error_is_2(self, tmp_path):
        # scoring before any hypotheses exist
        argv = ["score", "--run", str(tmp_path / "empty"), "--setting", "known"]
        assert main(argv) == 2

    def test_divergence_is_4(self, run_dir):
        argv = ["train", "--run", str(run_dir), "--setting", "known",
                "--layers", "1", "--dim", "32", "--ff-dim", "64", "--heads", "2",
                "--dropout", "0.0", "--epochs", "2", "--batch-size", "64",
                "--warmup", "20", "--lr-scale", "1e41"]
        import numpy as np
        with np.errstate(all="ignore"):
            assert main(argv) == 4


class TestConfigFile:
    def test_config_overrides_flags(self, run_dir, tmp_path):
        cfg = tmp_path / "train.json"
        cfg.write_text(json.dumps({"epochs": 1, "batch-size": 32}))
        argv = ["train", "--run", str(run_dir), "--setting", "known",
                "--config", str(cfg), *TINY]
        assert main(argv) == 0
        lines = (run_dir / "model" / "known" / "train_log.jsonl").read_text().splitlines()
        assert len(lines) == 1  # config epochs beat the flag

    def test_unknown_config_key_is_2(self, run_dir, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"optimizer": "sgd"}))
        argv = ["train", "--run", str(run_dir), "--setting", "known",
                "--config", str(cfg), *TINY]
        assert main(argv) == 2

    def test_malformed_config_is_2(self, run_dir, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        assert main(["report", "--run", str(run_dir), "--config", str(cfg)]) == 2
