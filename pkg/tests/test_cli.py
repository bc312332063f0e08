import numpy as np

from perturbo.cli import main

from test_experiment import write_config


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRunCommand:
    def test_run_writes_outputs(self, tmp_path, capsys):
        config = write_config(tmp_path, budget=40)
        code, out, _ = run_cli(capsys, "run", "--config", str(config))
        assert code == 0
        assert "6 runs complete" in out
        assert (tmp_path / "results" / "summary.csv").exists()

    def test_seed_and_out_dir_overrides(self, tmp_path, capsys):
        config = write_config(tmp_path, budget=40)
        out_dir = tmp_path / "elsewhere"
        code, out, _ = run_cli(capsys, "--seed", "5", "--out-dir", str(out_dir),
                               "run", "--config", str(config))
        assert code == 0
        traces = list((out_dir / "traces").glob("*seed5.jsonl"))
        assert len(traces) == 2  # two tasks, one seed

    def test_bad_config_nonzero_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("budget = 0\n")
        code, _, err = run_cli(capsys, "run", "--config", str(bad))
        assert code != 0
        assert "error" in err


class TestSummarizeCommand:
    def test_summarize_prints_table(self, tmp_path, capsys):
        config = write_config(tmp_path, budget=40)
        assert run_cli(capsys, "run", "--config", str(config))[0] == 0
        glob_pat = str(tmp_path / "results" / "traces" / "*.jsonl")
        code, out, _ = run_cli(capsys, "summarize", "--traces", glob_pat,
                               "--budgets", "10,20,40")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "budget,median,q1,q3,n"
        assert len(lines) == 4

    def test_no_matching_traces(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "summarize", "--traces",
                               str(tmp_path / "nope" / "*.jsonl"),
                               "--budgets", "10")
        assert code == 1


class TestMetricsCommand:
    def test_asr_over_manifest(self, tmp_path, capsys):
        config = write_config(tmp_path, budget=60)
        assert run_cli(capsys, "run", "--config", str(config))[0] == 0
        manifest = tmp_path / "results" / "manifest.json"
        code, out, _ = run_cli(capsys, "metrics", "--results", str(manifest),
                               "--threshold", "10.0")
        assert code == 0
        assert "asr@10: 1.0000" in out

    def test_default_threshold_used(self, tmp_path, capsys):
        config = write_config(tmp_path, budget=60)
        assert run_cli(capsys, "run", "--config", str(config))[0] == 0
        manifest = tmp_path / "results" / "manifest.json"
        code, out, _ = run_cli(capsys, "metrics", "--results", str(manifest))
        assert code == 0
        assert "asr@0.0627451" in out


class TestUarCommand:
    def test_uar_over_npz_dataset(self, tmp_path, capsys):
        gen = tmp_path / "gen.toml"
        gen.write_text("""
[generator]
kind = "perlin"
shape = [4, 4, 1]
coords = [0.5, 0.5, 0.5]

[oracle]
kind = "sphere"
radius = 0.001
""")
        samples = np.random.default_rng(0).uniform(0.4, 0.6, size=(10, 16))
        labels = np.zeros(10, dtype=int)
        np.savez(tmp_path / "data.npz", samples=samples, labels=labels)
        code, out, _ = run_cli(capsys, "uar", "--generator", str(gen),
                               "--dataset", str(tmp_path / "data.npz"),
                               "--epsilon", "0.0627")
        assert code == 0
        # Tiny sphere radius: any visible perturbation evades everywhere.
        assert "uar: 1.0000" in out
        assert "rescaled" in out
