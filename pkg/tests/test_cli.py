"""Command-line contract: config parsing, exit codes, CSV format, and
determinism."""

import pytest

from evorl import cli


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_config(tmp_path, text):
    path = tmp_path / "experiment.cfg"
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestConfigParsing:
    def test_comments_and_blanks_ignored(self):
        raw = cli.parse_config_text("# header\n\nenv = grid\nmethod=oracle\n")
        assert raw == {"env": "grid", "method": "oracle"}

    def test_malformed_line_rejected(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_config_text("env grid\n")

    def test_unknown_key_is_named(self):
        with pytest.raises(cli.ConfigError, match="wibble"):
            cli.resolve_config({"env": "grid", "method": "oracle",
                                "wibble": "1"}, {})

    def test_bad_value_is_named(self):
        with pytest.raises(cli.ConfigError, match="runs"):
            cli.resolve_config({"env": "grid", "method": "oracle",
                                "runs": "many"}, {})

    def test_missing_required_key(self):
        with pytest.raises(cli.ConfigError, match="method"):
            cli.resolve_config({"env": "grid"}, {})

    def test_overrides_win(self):
        cfg = cli.resolve_config({"env": "grid", "method": "oracle",
                                  "seed": "1"}, {"seed": 9})
        assert cfg["seed"] == 9

    def test_genitor_mutation_default_differs(self):
        oracle = cli.resolve_config({"env": "grid", "method": "oracle"}, {})
        genitor = cli.resolve_config({"env": "grid", "method": "genitor"}, {})
        assert oracle["mutation_rate"] == 0.01
        assert genitor["mutation_rate"] == 0.1


class TestEnvDump:
    def test_grid_dump_key_values(self, capsys):
        code, out, _ = run_cli(["env", "dump", "grid"], capsys)
        assert code == 0
        assert "name = grid" in out
        assert "transition a1 R = b1" in out
        assert "transition e1 R = terminal" in out
        assert "reward b3 = -5.0" in out

    def test_hidden_dump_exit_rewards(self, capsys):
        code, out, _ = run_cli(["env", "dump", "hidden"], capsys)
        assert code == 0
        assert "observe blue2 = blue" in out
        assert "exit blue2 L = -4.0" in out
        assert "start red = 0.5" in out


class TestRun:
    def test_oracle_csv_matches_reference_layout(self, tmp_path, capsys):
        config = write_config(tmp_path, "env = grid\nmethod = oracle\n")
        code, out, _ = run_cli(["run", "--config", config], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("# ")
        assert lines[1].startswith("action,a1,a2")
        assert lines[2].startswith("R,17.0,16.0,10.0")
        assert lines[3].startswith("D,16.0,11.0,10.0")
        assert lines[-1].startswith("best=17.0 mean=")
        assert lines[-1].endswith("seed=0")

    def test_same_config_and_seed_is_byte_identical(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            "env = hidden\nmethod = earl_tabular\ngenerations = 5\n"
            "population_size = 10\nruns = 2\n",
        )
        out_path = str(tmp_path / "out.csv")
        argv = ["run", "--config", config, "--seed", "3", "--output", out_path]
        assert cli.main(argv) == 0
        first = (tmp_path / "out.csv").read_bytes()
        assert cli.main(argv) == 0
        assert (tmp_path / "out.csv").read_bytes() == first
        assert b"\r" not in first
        capsys.readouterr()

    def test_csv_identical_across_thread_counts(self, tmp_path, capsys,
                                                monkeypatch):
        config = write_config(
            tmp_path,
            "env = hidden\nmethod = earl_tabular\ngenerations = 5\n"
            "population_size = 10\nruns = 4\n",
        )
        out_path = str(tmp_path / "out.csv")
        argv = ["run", "--config", config, "--output", out_path]
        outputs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("EARL_THREADS", threads)
            assert cli.main(argv) == 0
            outputs.append((tmp_path / "out.csv").read_bytes())
        assert outputs[0] == outputs[1]
        capsys.readouterr()

    def test_genitor_defaults_noted_in_header(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            "env = hidden\nmethod = genitor\ngenerations = 2\n"
            "population_size = 8\n",
        )
        code, out, _ = run_cli(["run", "--config", config], capsys)
        assert code == 0
        assert "# crossover-gene bounds defaulted to [0.05, 0.95]" in out

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        config = write_config(tmp_path, "env = grid\nmethod = oracle\nfoo = 1\n")
        code, _, err = run_cli(["run", "--config", config], capsys)
        assert code == 2
        assert "foo" in err

    def test_missing_config_file_exits_2(self, capsys):
        code, _, err = run_cli(["run", "--config", "/nope/missing.cfg"], capsys)
        assert code == 2

    def test_summary_line_format(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            "env = hidden\nmethod = qlearn\nepisodes = 20\n",
        )
        code, out, _ = run_cli(["run", "--config", config,
                                "--output", str(tmp_path / "q.csv")], capsys)
        assert code == 0
        summary = out.strip().splitlines()[-1]
        parts = dict(p.split("=") for p in summary.split())
        assert set(parts) == {"best", "mean", "generations", "seed"}
        assert parts["generations"] == "20"


class TestReproduce:
    def test_q_table_passes(self, capsys):
        code, out, _ = run_cli(["reproduce", "q-table"], capsys)
        assert code == 0
        assert "50/50" in out

    def test_table2_passes(self, capsys):
        code, out, _ = run_cli(["reproduce", "table2-fitness"], capsys)
        assert code == 0
        assert "fitness 17.0" in out

    def test_table5_quiet_prints_nothing_but_passes(self, capsys):
        code, out, err = run_cli(["reproduce", "table5", "--quiet"], capsys)
        assert code == 0
        assert out == ""
        assert err == ""

    def test_figure14_small_emits_csv(self, tmp_path, capsys):
        out_path = str(tmp_path / "fig.csv")
        code, out, _ = run_cli(
            ["reproduce", "figure14", "--runs", "5", "--seed", "7",
             "--output", out_path], capsys)
        assert code == 0
        lines = (tmp_path / "fig.csv").read_text().splitlines()
        assert lines[1] == "generation,mean_fraction_optimal"
        assert len(lines) == 2 + 51  # metadata, header, generations 0..50
