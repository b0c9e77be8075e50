"""CLI contract: subcommands, flags, exit codes, determinism."""

import pytest

from it2sqa.cli import main
from it2sqa.signal import synth_clean_ppg

TINY_TOML = """\
[study]
n_subjects = 2
windows_per_subject = 24
noisy_fraction = 0.25
subject_shift = 0.2
seed = 11

[ga]
population_size = 16
generations = 8
seed = 5
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = root / "config.toml"
    config.write_text(TINY_TOML)
    assert main(["synth", "--config", str(config), "--out", str(root / "data")]) == 0
    assert (
        main(
            [
                "train", str(root / "data" / "corpus.csv"),
                "--config", str(config), "--out", str(root / "models"),
            ]
        )
        == 0
    )
    return root, config


class TestSynth:
    def test_seed_override_is_deterministic(self, workspace, tmp_path):
        root, config = workspace
        args = ["synth", "--config", str(config), "--seed", "7"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "corpus.csv").read_bytes()
        b = (tmp_path / "b" / "corpus.csv").read_bytes()
        assert a == b

    def test_subjects_override(self, workspace, tmp_path, capsys):
        root, config = workspace
        assert main(
            ["synth", "--config", str(config), "--subjects", "1", "--out", str(tmp_path / "one")]
        ) == 0
        out = capsys.readouterr().out
        assert "for 1 subjects" in out

    def test_invalid_config_key_exits_2(self, tmp_path, capsys):
        config = tmp_path / "config.toml"
        config.write_text("[ga]\nbogus = 3\n")
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "x")]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_unwritable_out_exits_1(self, workspace, tmp_path):
        root, config = workspace
        blocker = tmp_path / "file.txt"
        blocker.write_text("x")
        rc = main(["synth", "--config", str(config), "--out", str(blocker / "sub")])
        assert rc == 1


class TestTrain:
    def test_model_count(self, workspace):
        root, _ = workspace
        files = sorted(p.name for p in (root / "models").glob("*.json"))
        assert files == ["manifest.json", "sd_s00.json", "sd_s01.json", "si.json"]

    def test_corrupted_corpus_exits_2_with_row(self, workspace, tmp_path, capsys):
        root, config = workspace
        lines = (root / "data" / "corpus.csv").read_text().splitlines()
        parts = lines[2].split(",")
        parts[7] = "broken"
        lines[2] = ",".join(parts)
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(lines) + "\n")
        rc = main(["train", str(bad), "--config", str(config), "--out", str(tmp_path / "m")])
        assert rc == 2
        assert "row 3" in capsys.readouterr().err

    def test_missing_corpus_exits_2(self, workspace, tmp_path, capsys):
        root, config = workspace
        rc = main(
            ["train", str(tmp_path / "missing.csv"), "--config", str(config),
             "--out", str(tmp_path / "m2")]
        )
        assert rc == 2
        assert "not found" in capsys.readouterr().err


class TestEvaluate:
    def test_happy_path_prints_three_rows(self, workspace, tmp_path, capsys):
        root, _ = workspace
        rc = main(
            ["evaluate", str(root / "data" / "corpus.csv"),
             "--models", str(root / "models"), "--alpha", "0.7",
             "--split", "validation", "--out", str(tmp_path / "eval")]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "global" in out and "personalised" in out and "fused" in out

    def test_alpha_out_of_range_is_usage_error(self, workspace, tmp_path):
        root, _ = workspace
        with pytest.raises(SystemExit) as exc:
            main(
                ["evaluate", str(root / "data" / "corpus.csv"),
                 "--models", str(root / "models"), "--alpha", "1.5",
                 "--out", str(tmp_path / "eval")]
            )
        assert exc.value.code == 2

    def test_bad_split_is_usage_error(self, workspace, tmp_path):
        root, _ = workspace
        with pytest.raises(SystemExit) as exc:
            main(
                ["evaluate", str(root / "data" / "corpus.csv"),
                 "--models", str(root / "models"), "--split", "holdout",
                 "--out", str(tmp_path / "eval")]
            )
        assert exc.value.code == 2

    def test_missing_models_exits_2(self, workspace, tmp_path, capsys):
        root, _ = workspace
        rc = main(
            ["evaluate", str(root / "data" / "corpus.csv"),
             "--models", str(tmp_path / "nothing"), "--out", str(tmp_path / "eval")]
        )
        assert rc == 2
        assert "missing model file" in capsys.readouterr().err


class TestSweep:
    def test_default_grid_writes_11_rows(self, workspace, tmp_path):
        root, _ = workspace
        rc = main(
            ["sweep", str(root / "data" / "corpus.csv"),
             "--models", str(root / "models"), "--out", str(tmp_path / "sweep")]
        )
        assert rc == 0
        lines = (tmp_path / "sweep" / "sweep_summary.csv").read_text().splitlines()
        assert len(lines) == 12

    def test_custom_grid(self, workspace, tmp_path):
        root, _ = workspace
        rc = main(
            ["sweep", str(root / "data" / "corpus.csv"),
             "--models", str(root / "models"), "--grid", "0:0.05:1",
             "--out", str(tmp_path / "sweep21")]
        )
        assert rc == 0
        lines = (tmp_path / "sweep21" / "sweep_summary.csv").read_text().splitlines()
        assert len(lines) == 22

    def test_malformed_grid_is_usage_error(self, workspace, tmp_path):
        root, _ = workspace
        with pytest.raises(SystemExit) as exc:
            main(
                ["sweep", str(root / "data" / "corpus.csv"),
                 "--models", str(root / "models"), "--grid", "0::1",
                 "--out", str(tmp_path / "x")]
            )
        assert exc.value.code == 2


class TestIngest:
    def test_raw_import(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        x = synth_clean_ppg(65, 7.0, 100.0, seed=2)
        raw.write_text("\n".join(repr(float(v)) for v in x) + "\n")
        rc = main(
            ["ingest", str(raw), "--fs", "100", "--subject", "w01",
             "--out", str(tmp_path / "ingested")]
        )
        assert rc == 0
        assert "2 windows" in capsys.readouterr().out

    def test_bad_sample_exits_2(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text("1.0\nbroken\n")
        rc = main(["ingest", str(raw), "--fs", "100", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "row 2" in capsys.readouterr().err


class TestUsage:
    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "it2sqa" in capsys.readouterr().out
