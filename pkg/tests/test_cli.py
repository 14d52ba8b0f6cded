import numpy as np
import pytest

from sstbench.cli import dispatch
from sstbench.corpus import Manifest, TrialList
from sstbench.metrics import save_scores_csv
from sstbench.synth import make_tone_corpus


@pytest.fixture
def corpus_dir(tmp_path):
    root = tmp_path / "corpus"
    make_tone_corpus(root)
    return root


def run_cli(*argv):
    return dispatch([str(a) for a in argv])


class TestVerbs:
    def test_unknown_verb_usage_error(self, capsys):
        assert run_cli("frobnicate") == 1

    def test_scan_flat_csv(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "m.csv"
        assert run_cli("scan", "--root", corpus_dir, "--layout", "flat-with-csv",
                       "--out", out, "--seed", 1) == 0
        assert Manifest.load_csv(out).entries
        logged = capsys.readouterr().out
        assert "seed=1" in logged and "event=scan" in logged

    def test_missing_seed_is_printed(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "m.csv"
        assert run_cli("scan", "--root", corpus_dir, "--layout", "flat-with-csv", "--out", out) == 0
        assert "seed=" in capsys.readouterr().out

    def test_trials(self, corpus_dir, tmp_path):
        trials_path = tmp_path / "trials.txt"
        assert run_cli("trials", "--manifest", corpus_dir / "manifest.csv",
                       "--out", trials_path, "--seed", 0) == 0
        trials = TrialList.load_text(trials_path)
        n = 6  # 3 speakers x 2 test utterances
        assert len(trials) == n * (n - 1)

    def test_featurize_embed_eval_sv(self, corpus_dir, tmp_path, capsys):
        features = tmp_path / "features"
        assert run_cli("featurize", "--manifest", corpus_dir / "manifest.csv",
                       "--out", features, "--seed", 0, "--jobs", 2) == 0
        emb_dir = tmp_path / "emb"
        assert run_cli("embed", "--manifest", corpus_dir / "manifest.csv",
                       "--features", features, "--model", "avg-baseline",
                       "--out", emb_dir, "--t", "0.5", "--seed", 5) == 0
        assert (emb_dir / "embeddings.sstf").is_file()
        assert (emb_dir / "ids.csv").is_file()

        # Score the embeddings by hand and evaluate via the scores dump.
        from sstbench.corpus import build_sv_trials
        from sstbench.models import score_pairs
        from sstbench.tensorfile import read_tensor

        manifest = Manifest.load_csv(corpus_dir / "manifest.csv")
        trials = build_sv_trials(manifest)
        rows = read_tensor(emb_dir / "embeddings.sstf").astype(np.float64)
        ids = [line.split(",")[1] for line in (emb_dir / "ids.csv").read_text().splitlines()[1:]]
        embeddings = dict(zip(ids, rows))
        scores = score_pairs(embeddings, trials, "neg-sq-euclidean")
        scores_path = tmp_path / "scores.csv"
        save_scores_csv(scores_path, trials, scores)
        capsys.readouterr()
        assert run_cli("eval-sv", "--scores", scores_path, "--seed", 0) == 0
        logged = capsys.readouterr().out
        assert "eer_pct=" in logged

    def test_eval_sc(self, tmp_path, capsys):
        from sstbench.tensorfile import write_tensor

        rng = np.random.default_rng(0)
        protos = 5.0 * rng.standard_normal((3, 6))
        rows = np.vstack([protos[i % 3] + 0.1 * rng.standard_normal(6) for i in range(9)])
        write_tensor(tmp_path / "emb.sstf", rows.astype(np.float32))
        with open(tmp_path / "ids.csv", "w") as fh:
            fh.write("index,utterance_id,speaker_id\n")
            for i in range(9):
                fh.write(f"{i},U{i},S{i % 3}\n")
        assert run_cli("eval-sc", "--embeddings", tmp_path / "emb.sstf",
                       "--ids", tmp_path / "ids.csv", "--seed", 0) == 0
        assert "mr_pct=0.0000" in capsys.readouterr().out

    def test_vocode_batch(self, corpus_dir, tmp_path):
        out = tmp_path / "vocoded"
        assert run_cli("vocode", "--manifest", corpus_dir / "manifest.csv",
                       "--out", out, "--bands", 4, "--seed", 9) == 0
        derived = Manifest.load_csv(out / "manifest.csv")
        assert len(derived) == 12

    def test_fit_avg_baseline_noop(self, corpus_dir, tmp_path, capsys):
        features = tmp_path / "features"
        run_cli("featurize", "--manifest", corpus_dir / "manifest.csv", "--out", features, "--seed", 0)
        assert run_cli("fit", "--manifest", corpus_dir / "manifest.csv",
                       "--features", features, "--model", "avg-baseline", "--seed", 0) == 0
        assert "skipped" in capsys.readouterr().out


class TestMatrixVerb:
    def write_config(self, path, corpus_dir, out_dir, extra=""):
        path.write_text(
            f"""
            corpus = {corpus_dir / 'manifest.csv'}
            model = avg-baseline
            tasks = SV
            strategies_train = OS,SS
            strategies_test = OS,SS
            runs = 2
            epochs = 1
            master_seed = 11
            segment_t_train = 0.5
            segment_t_eval = 0.5
            out_dir = {out_dir}
            formats = csv,markdown,html
            {extra}
            """
        )

    def test_matrix_and_determinism(self, corpus_dir, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        self.write_config(cfg_path, corpus_dir, out1)
        assert run_cli("matrix", "--config", cfg_path) == 0
        assert (out1 / "report.csv").is_file()
        assert (out1 / "report.md").is_file()
        assert (out1 / "report.html").is_file()
        assert run_cli("matrix", "--config", cfg_path, "--out", out2) == 0
        assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()

    def test_matrix_set_override(self, corpus_dir, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        out = tmp_path / "r"
        self.write_config(cfg_path, corpus_dir, out)
        assert run_cli("matrix", "--config", cfg_path, "--set", "runs=1") == 0
        text = (out / "report.csv").read_text()
        assert text.strip().splitlines()[1].endswith(",1")

    def test_matrix_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text("definitely_not_a_key = 1\n")
        assert run_cli("matrix", "--config", cfg_path) == 1

    def test_matrix_failed_cells_exit_code(self, corpus_dir, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        out = tmp_path / "r"
        self.write_config(
            cfg_path, corpus_dir, out,
            extra="model = external-adapter\nadapter_command = false\n",
        )
        assert run_cli("matrix", "--config", cfg_path) == 2

    def test_report_rerender(self, corpus_dir, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        out = tmp_path / "r"
        self.write_config(cfg_path, corpus_dir, out)
        run_cli("matrix", "--config", cfg_path)
        re_out = tmp_path / "re"
        assert run_cli("report", "--csv", out / "report.csv",
                       "--formats", "markdown,html", "--out", re_out, "--seed", 0) == 0
        assert (re_out / "report.md").is_file()
        assert (re_out / "report.html").is_file()
