import json
from pathlib import Path

import pytest

from paraconcave.errors import ScenarioConfigError
from paraconcave.scenario import (
    REPORTS_FILE,
    SUMMARY_FILE,
    ScenarioConfig,
    declared_threshold,
    dumps,
    load,
    loads,
    run_scenario,
    run_suite,
)
from paraconcave.scenarios import bundled_scenarios, resolve_scenario


def small_scenario(name="small-torch", **overrides):
    data = {
        "name": name,
        "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
        "source": {"kind": "constant", "c": 1.0},
        "solver": "parabolic",
        "grid": {"h": 0.03125, "dt": 0.001, "T": 0.5, "save_every": 10},
        "checks": [
            {"kind": "time-monotonicity", "name": "nondecreasing"},
            {"kind": "spatial", "name": "slice", "params": {"p": 0.5, "n_samples": 1024}},
            {"kind": "energy", "name": "energy", "params": {"q": 0.25, "n_samples": 1024}},
            {"kind": "structure", "name": "structure", "params": {"p": 0.45, "n_samples": 1024}},
        ],
        "seed": 3,
    }
    data.update(overrides)
    return data


def structure_only(name="structure-only", sharpness=False):
    checks = [{"kind": "structure", "name": "window", "sharpness": sharpness, "params": {"p": 0.45}}]
    return small_scenario(name, checks=checks)


def write_scenario(path, data):
    path.write_text(json.dumps(data, indent=2))
    return path


class TestParsing:

    def test_round_trip(self):
        config = loads(json.dumps(small_scenario()))
        again = loads(dumps(config))
        assert again.to_dict() == config.to_dict()
        assert [c.name for c in again.checks] == ["nondecreasing", "slice", "energy", "structure"]

    def test_defaults(self):
        data = small_scenario(checks=[])
        del data["solver"], data["seed"]
        config = ScenarioConfig.from_dict(data)
        assert config.solver == "parabolic"
        assert config.seed == 0
        assert config.output_dir == "runs"

    def test_invalid_json_reports_line(self):
        with pytest.raises(ScenarioConfigError) as exc:
            loads('{\n  "name": "x",\n  "grid": }\n', path="bad.json")
        assert exc.value.line == 3
        assert str(exc.value).startswith("bad.json:3:")

    def test_unknown_key_reports_line(self):
        text = json.dumps(small_scenario(colour="red"), indent=2)
        with pytest.raises(ScenarioConfigError) as exc:
            loads(text)
        assert "colour" in exc.value.reason
        lines = text.splitlines()
        assert '"colour"' in lines[exc.value.line - 1]

    def test_bad_grid_value_is_located(self):
        data = small_scenario()
        data["grid"]["h"] = -1
        with pytest.raises(ScenarioConfigError) as exc:
            loads(json.dumps(data, indent=2))
        assert exc.value.key == ("grid", "h")
        assert exc.value.line is not None

    @pytest.mark.parametrize("change", [
        {"solver": "implicit"},
        {"seed": -1},
        {"name": "a/b"},
        {"checks": [{"kind": "hull"}]},
        {"checks": [{"kind": "spatial", "name": "a", "params": {"p": 0.5}},
                    {"kind": "spatial", "name": "a", "params": {"p": 1.0}}]},
        {"domain": {"shape": "triangle"}},
        {"source": {"kind": "constant", "c": -1.0}},
    ])
    def test_invalid_sections(self, change):
        with pytest.raises(ScenarioConfigError):
            ScenarioConfig.from_dict(small_scenario(**change))

    @pytest.mark.parametrize("check", [
        {"kind": "parabolic", "params": {"p": 0.5, "tolerance": -1.0}},
        {"kind": "parabolic", "params": {"p": 0.5, "workers": 0}},
        {"kind": "spatial", "params": {"p": 0.5, "tol": 0}},
        {"kind": "spatial", "params": {"p": 0.5, "colour": 1}},
        {"kind": "spatial", "params": {}},
        {"kind": "envelope", "params": {"p": 0.5, "method": "chords"}},
        {"kind": "envelope", "params": {"p": 0.5, "method": "lambda", "lam": [0.2, 0.2]}},
        {"kind": "energy", "params": {"q": 0.25, "n_samples": "many"}},
        {"kind": "structure", "params": {"p": 0.45, "region": {"x_low": [0.1]}}},
        {"kind": "structure", "params": {"p": 0.45, "region": {"t_lo": 0.5, "t_hi": 0.2}}},
        {"kind": "boundary-exponent", "params": {"x_star": [0.0]}},
        {"kind": "max-exponent", "params": {"p_lo": 0.8, "p_hi": 0.3, "expected": 0.5}},
        {"kind": "time-monotonicity", "params": {"tolerance": -1e-3}},
    ])
    def test_invalid_check_params(self, check):
        with pytest.raises(ScenarioConfigError):
            loads(json.dumps(small_scenario(checks=[{"name": "bad", **check}]), indent=2))

    def test_check_params_are_located(self):
        check = {"kind": "parabolic", "name": "bad", "params": {"p": 0.5, "tolerance": -1.0}}
        text = json.dumps(small_scenario(checks=[check]), indent=2)
        with pytest.raises(ScenarioConfigError) as exc:
            loads(text)
        assert exc.value.key == ("checks", 0, "params", "tolerance")
        assert '"tolerance"' in text.splitlines()[exc.value.line - 1]

    def test_valid_check_params(self):
        checks = [
            {"kind": "time-monotonicity", "name": "exact", "params": {"tolerance": 0}},
            {"kind": "envelope", "name": "search", "params": {"p": 0.5, "method": "lambda", "lam": [0.5, 0.5]}},
            {"kind": "structure", "name": "box", "params": {"p": 0.45, "region": {"x_lo": [0.2], "x_hi": [0.3]}}},
        ]
        config = ScenarioConfig.from_dict(small_scenario(checks=checks))
        assert [c.kind for c in config.checks] == ["time-monotonicity", "envelope", "structure"]

    def test_missing_key(self):
        data = small_scenario()
        del data["grid"]
        with pytest.raises(ScenarioConfigError, match="grid"):
            ScenarioConfig.from_dict(data)

    def test_semilinear_solver_needs_power_source(self):
        with pytest.raises(ScenarioConfigError):
            ScenarioConfig.from_dict(small_scenario(solver="semilinear_maximal"))

    def test_parabolic_check_above_threshold_needs_flag(self):
        check = {"kind": "parabolic", "name": "sharp", "params": {"alpha": 0.5, "p": 0.8}}
        with pytest.raises(ScenarioConfigError, match="sharpness"):
            ScenarioConfig.from_dict(small_scenario(checks=[check]))
        config = ScenarioConfig.from_dict(small_scenario(checks=[{**check, "sharpness": True}]))
        assert config.checks[0].sharpness

    def test_parabolic_check_needs_enough_samples(self):
        check = {"kind": "parabolic", "params": {"p": 0.5, "n_samples": 100}}
        with pytest.raises(ScenarioConfigError, match="n_samples"):
            ScenarioConfig.from_dict(small_scenario(checks=[check]))

    def test_thresholds(self):
        assert declared_threshold(ScenarioConfig.from_dict(small_scenario())) == pytest.approx(0.5)
        semilinear = small_scenario(source={"kind": "semilinear_power", "gamma": 0.5}, solver="semilinear_maximal")
        assert declared_threshold(ScenarioConfig.from_dict(semilinear)) == pytest.approx(0.25)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioConfigError, match="cannot read"):
            load(tmp_path / "nope.json")


class TestBundled:

    def test_bundled_scenarios_parse(self):
        paths = bundled_scenarios()
        assert len(paths) >= 10
        for path in paths:
            config = load(path)
            assert config.name == path.stem

    def test_resolve_by_name(self):
        assert resolve_scenario("torch-1d").name == "torch-1d.json"
        with pytest.raises(ScenarioConfigError, match="bundled"):
            resolve_scenario("no-such-scenario")


class TestRunScenario:

    @pytest.fixture(scope="class")
    def small_record(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("runs")
        return run_scenario(ScenarioConfig.from_dict(small_scenario()), out=out)

    def test_checks_pass(self, small_record):
        assert small_record.passed, [r.to_dict() for r in small_record.results]
        assert small_record.deviations == []

    def test_files_written(self, small_record):
        run_dir = Path(small_record.output_dir)
        summary = json.loads((run_dir / SUMMARY_FILE).read_text())
        assert summary["passed"] is True
        assert summary["config"]["name"] == "small-torch"
        assert "numpy" in summary["versions"]
        lines = (run_dir / REPORTS_FILE).read_text().splitlines()
        assert [json.loads(line)["name"] for line in lines] == ["nondecreasing", "slice", "energy", "structure"]
        energy = small_record.results[2]
        assert energy.curve == "curves/energy.csv"
        assert (run_dir / energy.curve).read_text().splitlines()[0] == "t,value"

    def test_deterministic(self):
        config = small_scenario()
        first = run_scenario(ScenarioConfig.from_dict(config), write=False)
        second = run_scenario(ScenarioConfig.from_dict(config), write=False)
        assert first.to_dict(include_timing=False) == second.to_dict(include_timing=False)
        assert first.output_dir is None

    def test_seed_override(self):
        record = run_scenario(ScenarioConfig.from_dict(structure_only()), seed=11, write=False)
        assert record.config["seed"] == 11

    def test_seed_override_leaves_config_alone(self):
        config = ScenarioConfig.from_dict(structure_only())
        record = run_scenario(config, seed=11, write=False)
        assert record.config["seed"] == 11
        assert config.seed == 3

    def test_empty_check_list(self):
        record = run_scenario(ScenarioConfig.from_dict(small_scenario(checks=[])), write=False)
        assert record.passed
        assert record.results == []
        assert record.solver == {}

    def test_field_free_scenario_skips_solver(self):
        record = run_scenario(ScenarioConfig.from_dict(structure_only()), write=False)
        assert record.solver == {}
        assert record.passed

    def test_passing_sharpness_check_is_a_deviation(self):
        record = run_scenario(ScenarioConfig.from_dict(structure_only(sharpness=True)), write=False)
        assert not record.passed
        assert record.deviations == ["window"]

    def test_tolerance_scale(self):
        with pytest.raises(ScenarioConfigError):
            run_scenario(ScenarioConfig.from_dict(structure_only()), tolerance_scale=0.0, write=False)

    def test_steady_solver(self):
        data = small_scenario(solver="steady", checks=[{"kind": "spatial", "name": "slice", "params": {"p": 0.5}}])
        record = run_scenario(ScenarioConfig.from_dict(data), write=False)
        assert record.passed
        assert record.solver["residual"] < 1e-8


class TestSuite:

    def test_single_scenario(self, tmp_path):
        write_scenario(tmp_path / "one.json", structure_only("one"))
        report = run_suite(tmp_path, out=tmp_path / "out")
        assert report.passed
        assert [e.name for e in report.entries] == ["one"]
        assert (tmp_path / "out" / "suite.json").is_file()

    def test_errors_are_isolated(self, tmp_path):
        write_scenario(tmp_path / "a.json", structure_only("a"))
        (tmp_path / "b.json").write_text("{not json")
        write_scenario(tmp_path / "c.json", structure_only("c", sharpness=True))
        report = run_suite(tmp_path, out=tmp_path / "out")
        a, b, c = report.entries
        assert a.passed and a.error is None
        assert not b.passed and b.error is not None
        assert not c.passed and c.deviations == ["window"]
        assert not report.passed
        assert "ERROR" in report.table()[2]

    @pytest.mark.timeout(120)
    def test_parallel_matches_sequential(self, tmp_path):
        for name in ("p1", "p2", "p3"):
            write_scenario(tmp_path / f"{name}.json", structure_only(name))
        sequential = run_suite(tmp_path, 1, out=tmp_path / "seq")
        parallel = run_suite(tmp_path, 2, out=tmp_path / "par")
        assert [e.record for e in sequential.entries] == [e.record for e in parallel.entries]

    def test_empty_directory(self, tmp_path):
        with pytest.raises(ScenarioConfigError, match="no scenario"):
            run_suite(tmp_path)

    def test_parallelism_must_be_positive(self, tmp_path):
        with pytest.raises(ScenarioConfigError):
            run_suite(tmp_path, 0)
