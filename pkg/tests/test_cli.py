"""End-to-end command-line pipeline tests (run in-process via main)."""

import numpy as np
import pytest

from spheremix import storage
from spheremix.cli import _cap_threads, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    kv = {}
    for line in out.out.splitlines():
        if "\t" in line:
            key, _, val = line.partition("\t")
            kv[key] = val
    return code, kv, out


def make_corpus(tmp_path, capsys, n=900, components=3, kappa=100.0, seed=0, texts=False):
    tmp_path.mkdir(exist_ok=True)
    emb = tmp_path / "emb.bin"
    lab = tmp_path / "truth.txt"
    argv = ["synth", "--output", emb, "--labels-output", lab, "--n", n,
            "--components", components, "--kappa", kappa, "--seed", seed]
    if texts:
        argv += ["--texts-output", tmp_path / "texts.txt"]
    code, _, _ = run(capsys, *argv)
    assert code == 0
    return emb, lab


class TestSynthFitEval:
    def test_pipeline_recovers_components(self, tmp_path, capsys):
        emb, truth = make_corpus(tmp_path, capsys, n=3000, components=3, kappa=100.0)
        model = tmp_path / "model.json"
        code, kv, _ = run(capsys, "fit", "--input", emb, "--output", model,
                          "--k", 3, "--seed", 0)
        assert code == 0
        assert kv["converged"] == "1"

        assigns = tmp_path / "assign.tsv"
        code, _, _ = run(capsys, "assign", "--input", emb, "--model", model,
                         "--output", assigns)
        assert code == 0
        rows = [line.split("\t") for line in assigns.read_text().splitlines()]
        assert len(rows) == 3000
        pred = tmp_path / "pred.txt"
        storage.write_labels(pred, np.array([int(r[1]) for r in rows]))

        code, kv, _ = run(capsys, "eval", "--pred", pred, "--truth", truth, "--k", 3)
        assert code == 0
        assert float(kv["matched_accuracy"]) >= 0.95
        assert float(kv["nmi"]) >= 0.85

    def test_fit_config_echo_defaults(self, tmp_path, capsys):
        emb, _ = make_corpus(tmp_path, capsys, n=400, components=3)
        code, kv, _ = run(capsys, "fit", "--input", emb,
                          "--output", tmp_path / "m.json", "--max-iters", 3)
        assert code == 0
        assert kv["config.k"] == "24"
        assert kv["config.lambda"] == "5000.0"

    def test_trace_csv_non_decreasing(self, tmp_path, capsys):
        emb, _ = make_corpus(tmp_path, capsys, n=600, components=3)
        model = tmp_path / "m.json"
        code, _, _ = run(capsys, "fit", "--input", emb, "--output", model,
                         "--k", 4, "--lambda", 500, "--seed", 1)
        assert code == 0
        lines = (tmp_path / "m.json.trace.csv").read_text().splitlines()
        assert lines[0] == "iteration,objective"
        vals = np.array([float(line.split(",")[1]) for line in lines[1:]])
        assert np.all(np.diff(vals) >= -1e-6)

    def test_eval_without_truth(self, tmp_path, capsys):
        pred = tmp_path / "pred.txt"
        storage.write_labels(pred, np.array([0, 0, 1, 1, 2]))
        code, kv, _ = run(capsys, "eval", "--pred", pred)
        assert code == 0
        assert "balance_l2" in kv and "max_share" in kv
        assert "nmi" not in kv


class TestDeterminism:
    def test_synth_reproducible(self, tmp_path, capsys):
        a, _ = make_corpus(tmp_path / "a", capsys, n=200, seed=7)
        b, _ = make_corpus(tmp_path / "b", capsys, n=200, seed=7)
        assert a.read_bytes() == b.read_bytes()

    def test_fit_reproducible(self, tmp_path, capsys):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        emb, _ = make_corpus(tmp_path, capsys, n=400, components=3)
        outs = []
        for sub in ("a", "b"):
            model = tmp_path / sub / "model.json"
            code, _, _ = run(capsys, "fit", "--input", emb, "--output", model,
                             "--k", 3, "--seed", 5, "--deterministic")
            assert code == 0
            outs.append((model.read_bytes(),
                         (tmp_path / sub / "model.json.trace.csv").read_bytes()))
        assert outs[0] == outs[1]

    def test_deterministic_flag_pins_threads(self, monkeypatch):
        monkeypatch.delenv("GEM_THREADS", raising=False)
        monkeypatch.delenv("OPENBLAS_NUM_THREADS", raising=False)
        _cap_threads(["fit", "--deterministic"])
        import os

        assert os.environ["OPENBLAS_NUM_THREADS"] == "1"

    def test_gem_threads_env(self, monkeypatch):
        monkeypatch.setenv("GEM_THREADS", "4")
        monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
        _cap_threads(["synth"])
        import os

        assert os.environ["OMP_NUM_THREADS"] == "4"


class TestGisCommand:
    def test_reps_and_prompts(self, tmp_path, capsys):
        emb, _ = make_corpus(tmp_path, capsys, n=300, components=3, texts=True)
        model = tmp_path / "model.json"
        run(capsys, "fit", "--input", emb, "--output", model, "--k", 3)
        reps = tmp_path / "reps.tsv"
        prompts = tmp_path / "prompts"
        code, kv, _ = run(capsys, "gis", "--input", emb, "--model", model,
                          "--output", reps, "--gis-s", 4,
                          "--texts", tmp_path / "texts.txt", "--prompt-dir", prompts)
        assert code == 0
        assert kv["clusters"] == "3"
        assert kv["selected"] == "12"
        assert kv["prompts_written"] == "3"
        lines = reps.read_text().splitlines()
        assert lines[0] == "cluster\tindex\tscore"
        assert len(lines) == 1 + 12
        assert sorted(p.name for p in prompts.iterdir()) == [
            f"cluster_{k:03d}.prompt.txt" for k in range(3)
        ]

    def test_prompt_dir_requires_texts(self, tmp_path, capsys):
        emb, _ = make_corpus(tmp_path, capsys, n=200, components=2)
        model = tmp_path / "model.json"
        run(capsys, "fit", "--input", emb, "--output", model, "--k", 2)
        code, _, out = run(capsys, "gis", "--input", emb, "--model", model,
                           "--output", tmp_path / "r.tsv", "--prompt-dir", tmp_path / "p")
        assert code == 1
        assert "spheremix:" in out.err


class TestDistillCommand:
    def test_full_distill_run(self, tmp_path, capsys):
        emb, _ = make_corpus(tmp_path, capsys, n=600, components=3, texts=True)
        model = tmp_path / "model.json"
        run(capsys, "fit", "--input", emb, "--output", model, "--k", 3)
        student = tmp_path / "student.bin"
        dataset = tmp_path / "ds.tsv"
        code, kv, _ = run(capsys, "distill", "--input", emb, "--model", model,
                          "--texts", tmp_path / "texts.txt", "--output", student,
                          "--dataset", dataset, "--distill-m", 100,
                          "--buckets", 1 << 15, "--epochs", 4, "--seed", 0)
        assert code == 0
        assert float(kv["test_accuracy"]) >= 0.8
        back = storage.load_student(student)
        assert back.featurizer.buckets == 1 << 15
        labels, texts = storage.read_dataset_tsv(dataset)
        assert labels.size == len(texts) == int(kv["train_size"]) + int(kv["val_size"]) + int(kv["test_size"])


class TestSweepCommand:
    def test_grid_rows_and_lambda_monotonicity(self, tmp_path, capsys):
        from spheremix.synth import collapse_stress_corpus

        X, _ = collapse_stress_corpus(300, 8, 16, seed=0)
        emb = tmp_path / "emb.bin"
        storage.write_embeddings(X, emb, normalized=True)
        out = tmp_path / "sweep.tsv"
        code, _, _ = run(capsys, "sweep", "--input", emb, "--output", out,
                         "--k-list", "8", "--lambda-list", "0,100,10000,1000000",
                         "--max-iters", 60, "--seed", 0)
        assert code == 0
        lines = out.read_text().splitlines()
        header = lines[0].split("\t")
        assert header[:2] == ["k", "lambda"]
        rows = [dict(zip(header, line.split("\t"))) for line in lines[1:]]
        assert len(rows) == 4
        soft = [float(r["balance_l2"]) for r in rows]
        assert all(soft[i + 1] <= soft[i] + 1e-3 for i in range(3))


class TestErrorExits:
    def test_missing_input_exits_one_no_partial_output(self, tmp_path, capsys):
        model = tmp_path / "model.json"
        code, _, out = run(capsys, "fit", "--input", tmp_path / "absent.bin",
                           "--output", model)
        assert code == 1
        assert "spheremix:" in out.err
        assert not model.exists()
        assert not (tmp_path / "model.json.trace.csv").exists()

    def test_corrupt_embeddings_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"garbage")
        code, _, out = run(capsys, "fit", "--input", bad, "--output", tmp_path / "m.json")
        assert code == 1
        assert "data error" in out.err

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["fit"])  # missing required flags
        assert exc.value.code == 2

    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_bad_seed_fraction_exits_one(self, tmp_path, capsys):
        emb, _ = make_corpus(tmp_path, capsys, n=100, components=2)
        code, _, out = run(capsys, "fit", "--input", emb,
                           "--output", tmp_path / "m.json", "--seed-fraction", 1.5)
        assert code == 1
        assert "seed-fraction" in out.err
