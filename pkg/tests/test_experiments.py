import json

import numpy as np
import pytest

from core.errors import InvalidConfigError, InvalidScenarioError
from core.experiments import (
    build_scenario,
    check_max_min_principle,
    euler_threshold_trials,
    run_cne_timing,
    run_convergence_sweep,
    run_speed_comparison,
    run_stability_trial,
    scenario_example1,
    scenario_example2,
    scenario_from_catalog,
    snapshot_table,
    stiffness_survey,
    write_experiment,
)
from core.mesh import RectangularPulse, UniformRandom
from core.system import spectral_report


class TestScenarios:
    def test_example1(self):
        scenario = scenario_example1(seed=3)
        assert (scenario.n_x, scenario.n_y) == (10, 10)
        assert scenario.capacity_exponent_range == (-3.0, 2.0)
        assert scenario.ux_exponent_range == scenario.uy_exponent_range == (-1.0, 3.0)
        assert scenario.initial_condition == UniformRandom(0.0, 100.0)
        assert (scenario.t0, scenario.t_fin) == (0.0, 1.0)
        assert scenario_example1(seed=3) == scenario

    def test_example2(self):
        scenario = scenario_example2(seed=3)
        assert (scenario.n_x, scenario.n_y) == (400, 10)
        assert scenario.capacity_exponent_range == (-3.0, 3.0)
        assert scenario.ux_exponent_range == (-2.0, 4.0)
        assert scenario.uy_exponent_range == (-4.0, 2.0)
        assert scenario.initial_condition == RectangularPulse(400, 780, 100.0, 0.0)
        assert scenario.t_fin == 100.0

    def test_example2_hot_slab(self):
        _, T0 = build_scenario(scenario_example2(seed=7))
        assert int(np.count_nonzero(T0.values == 100.0)) == 381
        assert np.all(T0.values[399:780] == 100.0)

    def test_example2_anisotropy(self):
        mesh, _ = build_scenario(scenario_example2(seed=7))
        horizontal = mesh.tails - mesh.heads == 10
        ratio = np.median(mesh.conductances[horizontal]) / np.median(mesh.conductances[~horizontal])
        assert 10**1.7 < ratio < 10**2.3

    def test_default_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv("HEATBENCH_SEED", "19")
        assert scenario_example1().seed == 19

    def test_unknown_catalog_entry(self):
        with pytest.raises(InvalidScenarioError):
            scenario_from_catalog("example3")

    def test_demo_runs(self):
        mesh, T0 = build_scenario(scenario_from_catalog("demo2x2", seed=1))
        assert mesh.n_blocks == 4 and T0.values[0] == 100.0


class TestMaxMinPrinciple:
    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_example1_every_step_in_range(self, seed):
        scenario = scenario_example1(seed)
        mesh, T0 = build_scenario(scenario)
        for h in (1e-3, 1e-1, 10.0, 1e3):
            check = check_max_min_principle(mesh, T0, h, scenario.t_fin)
            assert check.holds, (h, check.worst_excess)

    def test_example2_coarse_steps(self):
        scenario = scenario_example2(7)
        mesh, T0 = build_scenario(scenario)
        check = check_max_min_principle(mesh, T0, 1.0, scenario.t_fin, threads=2)
        assert check.holds
        assert check.steps == 100


class TestCneTiming:
    def test_example1(self):
        timing = run_cne_timing(scenario_example1(7), 0.01, repeats=3)
        assert timing.steps == 100
        assert timing.repeats == 3
        assert timing.wall_time > 0.0
        assert timing.time_per_step == pytest.approx(timing.wall_time / timing.steps)
        assert 0.0 < timing.max_d_rel <= 0.15
        assert set(timing.to_dict()) == {"h", "steps", "repeats", "wall_time", "time_per_step", "max_d", "max_d_rel"}

    def test_rejects_zero_repeats(self):
        with pytest.raises(InvalidConfigError):
            run_cne_timing(scenario_example1(7), 0.01, repeats=0)


class TestConvergence:
    @pytest.fixture(scope="class")
    def sweep(self):
        scenario = scenario_example1(7)
        return run_convergence_sweep(scenario, [2.0**-k for k in range(1, 11)])

    def test_first_order(self, sweep):
        assert sweep.fitted_slope["max_d"] >= 0.9
        for ratio in sweep.halving_ratios("max_d"):
            assert 1.7 <= ratio <= 2.6

    def test_energy_error_shrinks_with_h(self, sweep):
        assert sweep.fitted_slope["abs_ebe"] >= 0.9

    def test_signed_energy_error_matches_magnitude(self, sweep):
        assert sweep.ebe is not None
        np.testing.assert_allclose(np.abs(sweep.ebe), sweep.errors["abs_ebe"], rtol=0, atol=0)
        assert "ebe" in sweep.to_frame().columns

    @pytest.mark.slow
    def test_example2_energy_error_changes_sign_at_large_h(self):
        sweep = run_convergence_sweep(scenario_example2(7), [100.0, 50.0, 25.0])
        assert sweep.ebe_sign_changes() >= 1
        assert min(sweep.ebe) < 0.0 < max(sweep.ebe)

    def test_large_steps_stay_bounded(self, sweep, example1):
        _, _, T0 = example1
        assert max(sweep.errors["max_d"]) <= T0.value_range
        assert sweep.errors["max_d"][-1] < sweep.errors["max_d"][0]

    def test_rejects_unordered_h(self):
        with pytest.raises(InvalidConfigError):
            run_convergence_sweep(scenario_example1(7), [0.1, 0.2, 0.05])


class TestEulerThreshold:
    def test_trial_example1(self, example1):
        _, mesh, T0 = example1
        below, above = euler_threshold_trials(mesh, T0)
        assert not below.diverged and below.steps == 200
        assert above.diverged and above.steps <= 200

    def test_trial_stays_bounded_for_long_runs(self, example1):
        _, mesh, T0 = example1
        h = 0.95 * spectral_report(mesh).euler_h_max
        trial = run_stability_trial(mesh, T0, h, max_steps=10_000)
        assert not trial.diverged
        assert trial.growth <= 1.0 + 1e-9

    @pytest.mark.slow
    def test_trial_example2(self):
        mesh, T0 = build_scenario(scenario_example2(7))
        below, above = euler_threshold_trials(mesh, T0)
        assert not below.diverged
        assert above.diverged


class TestStiffness:
    def test_example1_bracket(self):
        survey = stiffness_survey(scenario_example1, range(20))
        assert 5.0 <= survey.median_log10 <= 9.0

    @pytest.mark.slow
    def test_example2_bracket(self):
        survey = stiffness_survey(scenario_example2, range(10))
        assert 7.0 <= survey.median_log10 <= 11.0


@pytest.mark.slow
class TestSpeedComparison:
    @pytest.fixture(scope="class")
    def comparison(self):
        return run_speed_comparison(scenario_example1(7), repeats=1)

    def test_dormand_prince_matches_oracle(self, comparison, example1):
        _, _, T0 = example1
        assert comparison.run("dormand_prince").errors.max_d <= 1e-4 * T0.value_range

    def test_dormand_prince_conserves_energy(self, comparison, example1):
        _, mesh, T0 = example1
        assert abs(comparison.run("dormand_prince").errors.ebe) <= 1e-10 * abs(float(np.dot(mesh.capacities, T0.values)))

    def test_cne_is_qualitatively_right_and_fast(self, comparison, example1):
        _, _, T0 = example1
        cne = comparison.run("cne")
        dp = comparison.run("dormand_prince")
        assert cne.result.steps_taken == 100
        assert cne.errors.max_d <= 0.15 * T0.value_range
        assert cne.result.wall_time * 50 <= dp.result.wall_time

    def test_write_experiment(self, comparison, tmp_path):
        written = write_experiment(comparison, tmp_path)
        assert sorted(p.name for p in written) == ["report.json", "snapshot.csv"]
        report = json.loads((tmp_path / "report.json").read_text())
        assert [run["config"]["method"] for run in report["runs"]] == ["cne", "dormand_prince"]
        assert report["spectral"]["n_zero_modes"] == 1


def test_snapshot_table(example1):
    _, _, T0 = example1
    frame = snapshot_table(T0, T0, T0)
    assert list(frame.columns) == ["block", "initial", "reference", "cne"]
    assert frame["block"].iloc[0] == 1 and len(frame) == 100
