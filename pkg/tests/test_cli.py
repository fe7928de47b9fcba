import json

import pytest

from pqcexpr import cli
from pqcexpr.ansatz import AnsatzSpec, build_template


def run_cli(args, tmp_path, name):
    out = tmp_path / "out"
    code = cli.main(args + ["--out", str(out)])
    return code, out / f"{name}.json", out / f"{name}.csv"


class TestPresets:
    def test_table1_contains_alt_row(self):
        cfg = cli.preset("table1")
        spec = AnsatzSpec("ALT", 4, 3, 2, 2)
        assert spec in cfg.specs
        assert build_template(spec).parameter_count == 24
        assert (cfg.pairs, cfg.trials, cfg.bins) == (200, 10, 1000)

    def test_section4(self):
        cfg = cli.preset("section4")
        assert cfg.learning_rate == 0.001
        assert [s.family for s in cfg.specs] == ["TEN", "ALT", "HEA"]

    def test_fig2_grid(self):
        grid = cli.preset("fig2-grid").grid
        assert len(grid) == 60
        assert {m for _, m, _ in grid} == {2, 4, 10}
        assert {n // m for _, m, n in grid} == set(range(1, 11))

    def test_unknown(self):
        with pytest.raises(cli.ConfigError):
            cli.preset("nope")

    def test_unknown_on_command_line(self, tmp_path, capsys):
        code, _, _ = run_cli(["bounds", "--preset", "nope"], tmp_path, "bounds")
        assert code == 2
        assert "unknown preset" in capsys.readouterr().err


class TestCommands:
    def test_analytic_row(self, tmp_path):
        code, js, cs = run_cli(["frame-potential", "analytic", "--ell", "3", "--m", "2", "--n", "4", "--seed", "1"], tmp_path, "frame_potential_analytic")
        assert code == 0
        rows = cli.read_csv(cs)
        assert len(rows) == 1
        assert float(rows[0]["ratio_to_haar"]) == pytest.approx(1.036864)
        assert float(rows[0]["value"]) == pytest.approx(1.036864 / 136)
        assert json.loads(js.read_text())["seed"] == 1
        assert cs.read_text().startswith("# config: ")

    def test_analytic_replay_identical(self, tmp_path):
        args = ["frame-potential", "analytic", "--ell", "2", "--m", "4", "--n", "8", "--seed", "3"]
        cli.main(args + ["--out", str(tmp_path / "a")])
        cli.main(args + ["--out", str(tmp_path / "b")])
        for name in ("frame_potential_analytic.csv", "frame_potential_analytic.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_sample_replay_identical(self, tmp_path):
        args = ["frame-potential", "sample", "--ansatz", "ALT", "--n", "4", "--m", "2", "--ell", "2", "--pairs", "200", "--seed", "9"]
        cli.main(args + ["--mode", "haar-block", "--out", str(tmp_path / "a")])
        cli.main(args + ["--mode", "haar-block", "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "frame_potential_sample.csv").read_bytes() == (tmp_path / "b" / "frame_potential_sample.csv").read_bytes()

    def test_expressibility(self, tmp_path):
        code, js, cs = run_cli(
            ["expressibility", "kl", "--ansatz", "TEN", "--n", "4", "--m", "2", "--ell", "3", "--block-depth", "2", "--trials", "2", "--pairs", "20", "--bins", "50", "--seed", "0"],
            tmp_path,
            "expressibility_kl",
        )
        assert code == 0
        result = json.loads(js.read_text())["result"]
        assert list(result) == ["TEN(l=3,m=2,n=4,depth=2)"]
        assert len(cli.read_csv(cs)) == 2

    def test_bounds_with_corollary(self, tmp_path):
        code, js, _ = run_cli(["bounds", "--ell", "2", "--m", "2", "--n", "8", "--corollary-a", "2", "--seed", "0"], tmp_path, "bounds")
        assert code == 0
        result = json.loads(js.read_text())["result"]
        assert result["all_hold"] is True
        assert result["corollary"]["ell=2,n=8"]["applicable"] is False

    def test_vqe_and_profile_roundtrip(self, tmp_path):
        code, js, cs = run_cli(
            ["vqe", "run", "--ansatz", "ALT", "--n", "4", "--m", "2", "--ell", "3", "--block-depth", "2", "--trials", "3", "--iterations", "10", "--seed", "5"],
            tmp_path,
            "vqe_run",
        )
        assert code == 0
        summary = json.loads(js.read_text())["result"]
        label = "ALT(l=3,m=2,n=4,depth=2)"
        assert len(summary[label]["mean_energy"]) == 11
        code = cli.main(["gradient-profile", "--input", str(cs), "--out", str(tmp_path / "p")])
        assert code == 0
        prof = json.loads((tmp_path / "p" / "gradient_profile.json").read_text())["result"]
        assert prof[label] == summary[label]["gradient_profile"]

    def test_seed_generated_and_recorded(self, tmp_path):
        code, js, _ = run_cli(["bounds", "--ell", "2", "--m", "2", "--n", "4"], tmp_path, "bounds")
        assert code == 0
        assert isinstance(json.loads(js.read_text())["seed"], int)

    @pytest.mark.parametrize(
        "args",
        [
            ["frame-potential", "analytic", "--ell", "4", "--m", "2", "--n", "4"],
            ["frame-potential", "analytic", "--ell", "2", "--m", "3", "--n", "6"],
            ["frame-potential", "analytic", "--m", "2", "--n", "4"],
            ["expressibility", "kl", "--ansatz", "ALT", "--n", "5", "--m", "2"],
            ["vqe", "run", "--ansatz", "HEA"],
            ["expressibility", "kl", "--ansatz", "HEA", "--n", "4", "--pairs", "0"],
        ],
    )
    def test_invalid_configs(self, args, tmp_path, capsys):
        code, _, _ = run_cli(args, tmp_path, "x")
        assert code == 2
        assert capsys.readouterr().err.startswith("error:")
