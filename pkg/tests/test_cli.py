"""End-to-end CLI workflows and exit codes."""

import json

import pytest

from dualcentroid.cli import main


def run(capsys, *argv) -> tuple[int, str]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


@pytest.fixture()
def workspace(tmp_path, capsys):
    data = tmp_path / "data.csv"
    code, _ = run(
        capsys,
        "synth",
        "--output", str(data),
        "--categories", "12",
        "--per-category", "14",
        "--seed", "5",
    )
    assert code == 0
    return tmp_path


@pytest.fixture()
def trained(workspace, capsys):
    model = workspace / "model.htax"
    code, _ = run(
        capsys,
        "train",
        "--data", str(workspace / "data.csv"),
        "--model", str(model),
        "--min-samples", "3",
        "--embedding-dim", "64",
        "--seed", "5",
    )
    assert code == 0
    return workspace, model


class TestSynthCommand:
    def test_writes_dataset_and_manifest(self, workspace):
        assert (workspace / "data.csv").exists()
        manifest = json.loads((workspace / "data.manifest.json").read_text())
        assert manifest["n_categories"] == 12
        assert (workspace / "data.csv.config.json").exists()

    def test_seed_reproducible(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            code, _ = run(capsys, "synth", "--output", str(out), "--categories", "5",
                          "--per-category", "4", "--seed", "9")
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_helpdesk_preset(self, tmp_path, capsys):
        out = tmp_path / "big.csv"
        code, _ = run(capsys, "synth", "--output", str(out), "--preset", "helpdesk-8k",
                      "--seed", "1")
        assert code == 0
        manifest = json.loads((tmp_path / "big.manifest.json").read_text())
        assert manifest["n_categories"] == 123
        assert manifest["n_samples"] == 8968

    def test_invalid_spec_exit_code_2(self, tmp_path, capsys):
        code, _ = run(capsys, "synth", "--output", str(tmp_path / "x.csv"),
                      "--categories", "0")
        assert code == 2


class TestTrainCommand:
    def test_outputs_exist(self, trained):
        workspace, model = trained
        assert model.exists()
        for name in ("train.csv", "validation.csv", "test.csv", "train_report.json"):
            assert (workspace / name).exists()
        report = json.loads((workspace / "train_report.json").read_text())
        assert report["taxonomy"]["predictable"] == 12
        assert "embedding_s" in report["timings"] and "centroid_s" in report["timings"]
        dump = (workspace / "taxonomy.txt").read_text().strip().splitlines()
        assert len(dump) == report["taxonomy"]["total_nodes"]
        assert all(len(line.split("\t")) == 3 for line in dump)

    def test_resolved_config_written(self, trained):
        workspace, model = trained
        config = json.loads((model.parent / (model.name + ".config.json")).read_text())
        assert config["seed"] == 5
        assert config["scoring"] == "leaf_only"
        assert config["min_samples"] == 3

    def test_depth_histogram_matches_manifest(self, trained):
        # the train split preserves the generator's depth proportions
        workspace, _ = trained
        report = json.loads((workspace / "train_report.json").read_text())
        manifest = json.loads((workspace / "data.manifest.json").read_text())
        full = {int(k): v for k, v in manifest["depth_histogram"].items()}
        got = {int(k): v for k, v in report["depth_histogram"].items()}
        assert set(got) == set(full)
        total_got = sum(got.values())
        total_full = sum(full.values())
        for depth in full:
            assert abs(got[depth] / total_got - full[depth] / total_full) < 0.05

    def test_same_seed_byte_identical_model(self, workspace, capsys):
        models = []
        for name in ("m1.htax", "m2.htax"):
            code, _ = run(
                capsys, "train",
                "--data", str(workspace / "data.csv"),
                "--model", str(workspace / name),
                "--min-samples", "3",
                "--embedding-dim", "32",
                "--seed", "11",
            )
            assert code == 0
            models.append((workspace / name).read_bytes())
        assert models[0] == models[1]

    def test_missing_dataset_exit_code_3(self, tmp_path, capsys):
        code, _ = run(capsys, "train", "--data", str(tmp_path / "nope.csv"),
                      "--model", str(tmp_path / "m.htax"))
        assert code == 3


class TestPredictCommand:
    def test_single_query_record(self, trained, capsys):
        _, model = trained
        code, out = run(capsys, "predict", "--model", str(model),
                        "--text", "cat000tok001 cat000tok002", "-k", "2")
        assert code == 0
        record = json.loads(out.strip())
        assert record["query_id"] == "q1"
        assert len(record["entries"]) == 2
        entry = record["entries"][0]
        assert {"path", "score", "lexical_rank", "semantic_rank", "lexical", "semantic"} <= set(entry)
        # one similarity per node per view along the returned path
        assert len(entry["lexical"]["node_sims"]) == entry["path"].count("/") + 1

    def test_query_file_and_output(self, trained, capsys):
        workspace, model = trained
        queries = workspace / "queries.txt"
        queries.write_text("cat001tok001 cat001tok003\ncat002tok000\n", encoding="utf-8")
        out_path = workspace / "preds.jsonl"
        code, _ = run(capsys, "predict", "--model", str(model),
                      "--queries", str(queries), "--output", str(out_path))
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["query_id"] == "q1"

    def test_k_capped_at_path_count(self, trained, capsys):
        _, model = trained
        code, out = run(capsys, "predict", "--model", str(model),
                        "--text", "anything", "-k", "999")
        assert code == 0
        assert len(json.loads(out.strip())["entries"]) == 12

    def test_bad_model_exit_code_4(self, tmp_path, capsys):
        bad = tmp_path / "bad.htax"
        bad.write_bytes(b"not a model file at all, definitely not")
        code, _ = run(capsys, "predict", "--model", str(bad), "--text", "x")
        assert code == 4


class TestEvaluateCommand:
    def test_model_against_test_split(self, trained, capsys):
        workspace, model = trained
        code, out = run(capsys, "evaluate", "--model", str(model),
                        "--data", str(workspace / "test.csv"))
        assert code == 0
        assert "dual-centroid" in out and "H-F1" in out

    def test_end_to_end_multi_run_with_baselines(self, workspace, capsys):
        out_path = workspace / "eval.jsonl"
        code, out = run(
            capsys, "evaluate",
            "--data", str(workspace / "data.csv"),
            "--end-to-end", "--runs", "2", "--with-baselines",
            "--min-samples", "3", "--embedding-dim", "32", "--seed", "3",
            "--output", str(out_path),
        )
        assert code == 0
        records = [json.loads(l) for l in out_path.read_text().strip().splitlines()]
        methods = {r["method"] for r in records}
        assert methods == {"dual-centroid", "knn", "majority", "random"}
        for r in records:
            assert r["n_runs"] == 2
            assert 0.0 <= r["exact_match"] <= r["top_k_accuracy"] <= r["h_top_k_accuracy"] <= 1.0

    def test_ordering_invariant_in_output(self, trained, capsys):
        workspace, model = trained
        out_path = workspace / "eval.jsonl"
        code, _ = run(capsys, "evaluate", "--model", str(model),
                      "--data", str(workspace / "test.csv"), "--output", str(out_path))
        assert code == 0
        record = json.loads(out_path.read_text().strip().splitlines()[0])
        assert record["exact_match"] <= record["top_k_accuracy"] <= record["h_top_k_accuracy"]

    def test_train_then_evaluate_equals_end_to_end(self, workspace, capsys):
        # same seed: training on the emitted split and evaluating its test
        # file reproduces a single end-to-end run exactly
        model = workspace / "seeded.htax"
        common = ["--min-samples", "3", "--embedding-dim", "32", "--seed", "17"]
        code, _ = run(capsys, "train", "--data", str(workspace / "data.csv"),
                      "--model", str(model), *common)
        assert code == 0
        staged_out = workspace / "staged.jsonl"
        code, _ = run(capsys, "evaluate", "--model", str(model),
                      "--data", str(workspace / "test.csv"),
                      "--output", str(staged_out))
        assert code == 0
        e2e_out = workspace / "e2e.jsonl"
        code, _ = run(capsys, "evaluate", "--data", str(workspace / "data.csv"),
                      "--end-to-end", "--runs", "1",
                      "--output", str(e2e_out), *common)
        assert code == 0
        staged = json.loads(staged_out.read_text().strip().splitlines()[0])
        e2e = json.loads(e2e_out.read_text().strip().splitlines()[0])
        for metric in ("h_f1", "top_k_accuracy", "h_top_k_accuracy", "exact_match"):
            assert staged[metric] == e2e[metric]


class TestUpdateCommand:
    def test_update_writes_new_model_and_nodes(self, trained, capsys):
        workspace, model = trained
        updated = workspace / "updated.htax"
        code, out = run(capsys, "update", "--model", str(model),
                        "--data", str(workspace / "test.csv"),
                        "--output", str(updated))
        assert code == 0
        assert updated.exists()
        assert "recomputed" in out
        assert "embedding" in out and "excluded" in out

    def test_update_then_predict_consistent(self, trained, capsys):
        workspace, model = trained
        new = workspace / "new.csv"
        new.write_text(
            "id,title,description,category\n"
            "n1,,freshly minted tokens here,Group_001/NewCat\n"
            "n2,,more fresh tokens again,Group_001/NewCat\n",
            encoding="utf-8",
        )
        updated = workspace / "u.htax"
        code, _ = run(capsys, "update", "--model", str(model), "--data", str(new),
                      "--output", str(updated))
        assert code == 0
        code, out = run(capsys, "predict", "--model", str(updated),
                        "--text", "cat000tok001", "-k", "13")
        assert code == 0
        paths = [e["path"] for e in json.loads(out.strip())["entries"]]
        assert "Group_001/NewCat" in paths


class TestErrorExitCodes:
    def test_recluster_conflict_exit_code_2(self, workspace, capsys, tmp_path):
        # a multi-centroid model refuses incremental updates
        data = workspace / "data.csv"
        model = tmp_path / "multi.htax"
        code, _ = run(
            capsys, "train", "--data", str(data), "--model", str(model),
            "--min-samples", "3", "--embedding-dim", "32",
            "--multi-centroid", "--cluster-min-samples", "4", "--seed", "5",
        )
        assert code == 0
        code, _ = run(capsys, "update", "--model", str(model),
                      "--data", str(workspace / "test.csv"),
                      "--output", str(tmp_path / "u.htax"))
        assert code == 2

    def test_missing_precomputed_embedding_exit_code_3(self, tmp_path, capsys):
        import numpy as np

        from dualcentroid.embedders import write_embedding_sidecar

        data = tmp_path / "d.csv"
        data.write_text(
            "id,title,description,category\n"
            "a1,,server down hard,Infra/Server\n"
            "a2,,mail is stuck,Apps/Email\n"
            "a3,,server slow again,Infra/Server\n"
            "a4,,mail bounced,Apps/Email\n",
            encoding="utf-8",
        )
        sidecar = tmp_path / "emb.tsv"
        rng = np.random.default_rng(0)
        write_embedding_sidecar(sidecar, {f"a{i}": rng.normal(size=8) for i in range(1, 5)})
        model = tmp_path / "m.htax"
        code, _ = run(capsys, "train", "--data", str(data), "--model", str(model),
                      "--min-samples", "1", "--min-df", "1",
                      "--embeddings", str(sidecar), "--seed", "1")
        assert code == 0
        code, _ = run(capsys, "predict", "--model", str(model), "--text", "unknown query")
        assert code == 3

    def test_bad_query_json_exit_code_3(self, trained, capsys, tmp_path):
        _, model = trained
        queries = tmp_path / "q.jsonl"
        queries.write_text('{"id": "x", "text": "ok"}\n{broken json\n', encoding="utf-8")
        code, _ = run(capsys, "predict", "--model", str(model), "--queries", str(queries))
        assert code == 3

    def test_evaluate_empty_test_set_exit_code_3(self, trained, capsys, tmp_path):
        _, model = trained
        empty = tmp_path / "empty.csv"
        empty.write_text("id,title,description,category\n", encoding="utf-8")
        code, _ = run(capsys, "evaluate", "--model", str(model), "--data", str(empty))
        assert code == 3


class TestBenchCommand:
    def test_small_bench_runs_and_reports(self, tmp_path, capsys):
        out_path = tmp_path / "bench.json"
        code, out = run(
            capsys, "bench",
            "--bench-samples", "300",
            "--categories", "8",
            "--batch-sizes", "1,5",
            "--probes", "5",
            "--repeats", "1",
            "--seed", "2",
            "--output", str(out_path),
        )
        assert code == 0
        assert "speedup" in out
        payload = json.loads(out_path.read_text())
        assert [row["batch"] for row in payload["updates"]] == [1, 5]
        for row in payload["updates"]:
            assert row["update_s"] > 0 and row["retrain_s"] > 0
        assert payload["inference_ms"]["total"] > 0
