# -*- coding: utf-8 -*-
"""End-to-end runs of the `hoi` subcommands."""

import json

import pandas as pd
import pytest

from hoi_core import cli
from hoi_core.data import DetectionFile, QueryPredictionFile, read_dataset
from hoi_core.gradcheck import GradcheckReport, GradientMismatch


def _gen(tmp_path, name="data", seed=7, images=4):
    out = tmp_path / name
    code = cli.main(["gen-synth", "--seed", str(seed), "--images", str(images), "--size", "32",
                     "--objects", "2", "--out", str(out)])
    assert code == 0
    return out


@pytest.fixture
def pipeline(tmp_path):
    data = _gen(tmp_path)
    run = tmp_path / "run"
    assert cli.main(["train-toy", "--data", str(data), "--config", "tiny", "--steps", "2", "--seed", "3",
                     "--out", str(run)]) == 0
    preds = tmp_path / "preds.jsonl"
    queries = tmp_path / "queries.jsonl"
    assert cli.main(["predict", "--data", str(data), "--checkpoint", str(run / "checkpoint.jsonl"),
                     "--out", str(preds), "--queries-out", str(queries)]) == 0
    return data, run, preds, queries


class TestGenSynth:
    def test_writes_dataset(self, tmp_path):
        data = _gen(tmp_path, images=8)
        dataset = read_dataset(data)
        assert len(dataset) == 8
        assert (data / "images" / "synth_0007.npy").is_file()

    def test_byte_reproducible(self, tmp_path):
        first = _gen(tmp_path, "first")
        second = _gen(tmp_path, "second")
        assert (first / "dataset.jsonl").read_bytes() == (second / "dataset.jsonl").read_bytes()


class TestPipeline:
    def test_training_outputs(self, pipeline):
        _, run, preds, queries = pipeline
        history = json.loads((run / "history.json").read_text(encoding="utf-8"))
        assert history["summary"]["steps"] == 2
        assert (run / "experiment.json").is_file()
        detections = DetectionFile.read(preds)
        assert len(detections.detections) == 4
        assert all(len(dets) <= 100 for dets in detections.detections.values())
        assert len(QueryPredictionFile.read(queries).predictions) == 4

    def test_training_is_byte_reproducible(self, pipeline, tmp_path):
        data, run, _, _ = pipeline
        again = tmp_path / "again"
        assert cli.main(["train-toy", "--data", str(data), "--config", "tiny", "--steps", "2", "--seed", "3",
                         "--out", str(again)]) == 0
        for name in ("checkpoint.jsonl", "history.json"):
            assert (again / name).read_bytes() == (run / name).read_bytes()

    def test_match_and_loss(self, pipeline, tmp_path, capsys):
        data, _, _, queries = pipeline
        assert cli.main(["match", "--gt", str(data), "--pred", str(queries), "--out", str(tmp_path / "m.json")]) == 0
        matches = json.loads((tmp_path / "m.json").read_text(encoding="utf-8"))
        assert len(matches) == 4
        n_queries = len(matches[0]["permutation"])
        assert sorted(matches[0]["permutation"]) == list(range(n_queries))
        assert len(matches[0]["cost_matrix"]) == n_queries

        assert cli.main(["loss", "--gt", str(data), "--pred", str(queries)]) == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert len(printed) == 4
        assert printed[0].startswith("synth_0000\ttotal=")

    def test_evaluations(self, pipeline, tmp_path):
        data, _, preds, _ = pipeline
        hico = tmp_path / "hico.txt"
        assert cli.main(["eval-hico", "--gt", str(data), "--pred", str(preds), "--counts", str(data),
                         "--report", str(hico)]) == 0
        lines = hico.read_text(encoding="utf-8").splitlines()
        means = {tuple(line.split("\t")[:2]) for line in lines if "\tmAP\t" in line}
        assert means == {(s, p) for s in ("default", "known_object") for p in ("full", "rare", "non_rare")}
        assert (tmp_path / "hico.summary.json").is_file()

        vcoco = tmp_path / "vcoco.txt"
        assert cli.main(["eval-vcoco", "--gt", str(data), "--pred", str(preds), "--report", str(vcoco)]) == 0
        assert "scenario_2\tfull\tmAP" in vcoco.read_text(encoding="utf-8")

        bins = tmp_path / "bins.csv"
        assert cli.main(["bin-analysis", "--gt", str(data), "--pred", str(preds), "--mode", "area",
                         "--min-instances", "1", "--out", str(bins)]) == 0
        table = pd.read_csv(bins)
        assert list(table.columns) == ["bin_index", "bin_start", "bin_end", "n_instances", "n_positives", "n_detections", "ap"]
        assert len(table) >= 1

    def test_reports_are_reproducible(self, pipeline, tmp_path):
        data, _, preds, _ = pipeline
        outputs = []
        for name in ("a.txt", "b.txt"):
            assert cli.main(["eval-hico", "--gt", str(data), "--pred", str(preds), "--report",
                             str(tmp_path / name)]) == 0
            outputs.append((tmp_path / name).read_bytes())
        assert outputs[0] == outputs[1]


class TestExitCodes:
    def test_usage_error(self):
        assert cli.main(["eval-hico", "--gt", "only"]) == 1

    def test_unknown_subcommand(self):
        assert cli.main(["frobnicate"]) == 1

    def test_missing_input(self, tmp_path):
        assert cli.main(["eval-hico", "--gt", str(tmp_path / "none"), "--pred", str(tmp_path / "none.jsonl"),
                         "--report", str(tmp_path / "r.txt")]) == 1

    def test_bad_config(self, tmp_path):
        data = _gen(tmp_path)
        assert cli.main(["train-toy", "--data", str(data), "--config", "gigantic"]) == 1

    def test_unknown_log_level(self, tmp_path):
        assert cli.main(["gen-synth", "--out", str(tmp_path / "data"), "--log-level", "LOUD"]) == 1

    def test_undecodable_dataset(self, tmp_path):
        data = tmp_path / "data"
        data.mkdir()
        (data / "dataset.jsonl").write_bytes(b"\xff\xfe\x00garbage\n")
        assert cli.main(["train-toy", "--data", str(data), "--config", "tiny", "--steps", "1",
                         "--out", str(tmp_path / "run")]) == 1

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("not a directory", encoding="utf-8")
        assert cli.main(["gen-synth", "--images", "1", "--size", "32", "--out", str(blocker / "data")]) == 1

    def test_gradcheck_passes(self):
        assert cli.main(["gradcheck", "--config", "tiny", "--tol", "1e-3", "--instances", "1",
                         "--samples", "2"]) == 0

    def test_gradcheck_failure_is_numerical(self, monkeypatch, tmp_path):
        failing = GradcheckReport(n_checked=1, max_abs_error=1.0, max_rel_error=1.0,
                                  failures=[GradientMismatch("heads.action_class.bias", 0, 1.0, 0.0)])
        monkeypatch.setattr(cli, "run_gradcheck", lambda *args, **kwargs: failing)
        report = tmp_path / "grad.json"
        assert cli.main(["gradcheck", "--config", "tiny", "--report", str(report)]) == 2
        assert json.loads(report.read_text(encoding="utf-8"))["failures"][0]["index"] == 0
