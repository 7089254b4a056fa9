import json

import pytest
from click.testing import CliRunner

from chsh_verify.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, env=None):
    return runner.invoke(main, args, env=env, catch_exceptions=False)


class TestPlan:
    def test_json_output(self, runner):
        result = invoke(runner, ["plan", "--epsilon", "0.05", "--delta", "0.05"])
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["n_per_setting"] == 24000
        assert body["method"] == "chebyshev"

    def test_forced_method(self, runner):
        result = invoke(
            runner,
            ["plan", "--epsilon", "0.05", "--delta", "0.01", "--method", "hoeffding"],
        )
        assert 85400 <= json.loads(result.output)["n_per_setting"] <= 85600

    def test_bad_params_exit_2(self, runner):
        result = invoke(runner, ["plan", "--epsilon", "-1", "--delta", "0.05"])
        assert result.exit_code == 2

    def test_missing_flag_exit_2(self, runner):
        result = invoke(runner, ["plan", "--epsilon", "0.05"])
        assert result.exit_code == 2


class TestBounds:
    def test_interval(self, runner):
        result = invoke(
            runner,
            ["bounds", "--s-bar", "2.798", "--epsilon", "0.05", "--delta", "0.01"],
        )
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["lo"] == pytest.approx(0.972, abs=5e-4)
        assert body["hi"] == 1.0


class TestVerify:
    def test_accept_exits_zero(self, runner):
        result = invoke(
            runner, ["verify", "--protocol", "pev", "--n", "750", "--seed", "42"]
        )
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["accepted"] is True

    def test_reject_exits_one(self, runner):
        result = invoke(
            runner,
            [
                "verify",
                "--protocol",
                "pev",
                "--n",
                "2000",
                "--alpha",
                "0.02",
                "--distance-km",
                "3.0",
                "--seed",
                "3",
            ],
        )
        assert result.exit_code == 1
        assert json.loads(result.output)["accepted"] is False

    def test_missing_n_exits_two(self, runner):
        result = invoke(runner, ["verify", "--protocol", "pev", "--alpha", "0.1"])
        assert result.exit_code == 2

    def test_seed_env_var_fallback(self, runner):
        args = ["verify", "--protocol", "pev", "--n", "400"]
        a = invoke(runner, args, env={"CHSH_VERIFY_SEED": "31"})
        b = invoke(runner, args, env={"CHSH_VERIFY_SEED": "31"})
        body_a, body_b = json.loads(a.output), json.loads(b.output)
        assert body_a == body_b
        # flag must override the environment: --seed 77 under the env var
        # matches --seed 77 without it
        c = invoke(runner, args + ["--seed", "77"], env={"CHSH_VERIFY_SEED": "31"})
        d = invoke(runner, args + ["--seed", "77"])
        assert json.loads(c.output) == json.loads(d.output)

    def test_config_file_and_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "link.conf"
        cfg.write_text(
            "# baseline-ish link\n"
            "n = 400\n"
            "alpha: 0.1\n"
            "seed 5\n"
            "distance-km = 2.0\n"
        )
        from_config = invoke(runner, ["verify", "--config", str(cfg)])
        assert json.loads(from_config.output)["n_per_setting"] == 400
        overridden = invoke(
            runner, ["verify", "--config", str(cfg), "--n", "600", "--distance-km", "1.0"]
        )
        assert json.loads(overridden.output)["n_per_setting"] == 600

    def test_out_file(self, runner, tmp_path):
        out = tmp_path / "verdict.json"
        result = invoke(
            runner,
            ["verify", "--protocol", "pev", "--n", "400", "--seed", "1", "--out", str(out)],
        )
        assert result.exit_code == 0
        assert "decision:" in result.output
        assert json.loads(out.read_text())["n_per_setting"] == 400


class TestSweep:
    def test_csv_and_manifest(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        result = invoke(
            runner,
            [
                "sweep",
                "--param",
                "beta",
                "--values",
                "0.3,0.6",
                "--capacity",
                "1000",
                "--repetitions",
                "4",
                "--seed",
                "2",
                "--jobs",
                "1",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("param,value,success_rate")
        assert len(lines) == 3
        manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
        assert manifest["seed"] == 2
        assert manifest["sweep_values"] == [0.3, 0.6]

    def test_repeat_is_byte_identical(self, runner):
        args = [
            "sweep", "--param", "distance", "--values", "0.5,1.5",
            "--capacity", "1000", "--repetitions", "4", "--seed", "6", "--jobs", "1",
        ]
        assert invoke(runner, args).output == invoke(runner, args).output

    def test_bad_values_exit_2(self, runner):
        result = invoke(
            runner, ["sweep", "--param", "beta", "--values", "a,b", "--jobs", "1"]
        )
        assert result.exit_code == 2

    def test_unknown_param_exit_2(self, runner):
        result = invoke(
            runner, ["sweep", "--param", "gamma", "--values", "1.0", "--jobs", "1"]
        )
        assert result.exit_code == 2


class TestFigure:
    def test_fig2_deterministic(self, runner):
        a = invoke(runner, ["figure", "fig2"]).output
        b = invoke(runner, ["figure", "fig2"]).output
        assert a == b
        assert a.startswith("delta,n_chebyshev,n_hoeffding\n")

    def test_fig7_seeded(self, runner, tmp_path):
        out = tmp_path / "fig7.csv"
        result = invoke(runner, ["figure", "fig7", "--seed", "12", "--out", str(out)])
        assert result.exit_code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "distance_km,s_bar,fidelity_lower,fidelity_upper"
        assert len(lines) == 12  # 0.5 .. 3.0 in 0.25 steps

    def test_unknown_name_exit_2(self, runner):
        result = invoke(runner, ["figure", "fig99"])
        assert result.exit_code == 2
