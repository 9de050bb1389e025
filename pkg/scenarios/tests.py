import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from qubits.exceptions import ConfigurationError
from scenarios.io import CONCURRENCE_COLUMNS, TRAJECTORY_COLUMNS
from scenarios.noise import NoisyDerivativeEstimator, noisy_record
from scenarios.schemas import InitialState, NoiseSpec, Pipeline, TimeGrid, load_scenario
from scenarios.services import (
    AnalysisService,
    ConcurrenceService,
    EstimationService,
    ReconstructionService,
    SimulationService,
)
from transport.records import RECORD_COLUMNS

EXAMPLES = Path(__file__).resolve().parent / "examples"


def example(name, **changes):
    scenario = load_scenario(EXAMPLES / f"{name}.json")
    return scenario.model_copy(update=changes) if changes else scenario


def short_grid(scenario, n_points=41):
    grid = scenario.time_grid.model_copy(update={"n_points": n_points})
    return scenario.model_copy(update={"time_grid": grid})


class ScenarioFileTests(SimpleTestCase):
    def test_bundled_examples_validate(self):
        names = sorted(path.stem for path in EXAMPLES.glob("*.json"))
        self.assertEqual(names, ["degenerate", "driven", "engine", "general", "resonant"])
        for name in names:
            self.assertEqual(load_scenario(EXAMPLES / f"{name}.json").name, name)

    def test_unknown_keys_are_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            raw = json.loads((EXAMPLES / "general.json").read_text())
            raw["system"]["coupling"] = 1.0
            path = Path(tmp) / "bad.json"
            path.write_text(json.dumps(raw))
            with self.assertRaises(ConfigurationError) as raised:
                load_scenario(path)
        self.assertTrue(any("coupling" in error for error in raised.exception.details["errors"]))

    def test_malformed_json_and_missing_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.json"
            path.write_text("{not json")
            with self.assertRaises(ConfigurationError):
                load_scenario(path)
            with self.assertRaises(OSError):
                load_scenario(Path(tmp) / "absent.json")

    def test_time_grid_and_initial_state_rules(self):
        with self.assertRaises(ValueError):
            TimeGrid(t_start=0.0, t_end=1.0, spacing="log")
        with self.assertRaises(ValueError):
            TimeGrid(t_start=2.0, t_end=1.0)
        self.assertEqual(TimeGrid(t_end=1.0, n_points=1).times().tolist(), [1.0])
        with self.assertRaises(ValueError):
            InitialState(kind="explicit")
        explicit = InitialState(
            kind="explicit",
            matrix=[[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]],
        )
        self.assertEqual(explicit.density_operator(1).n_qubits, 1)
        with self.assertRaises(ConfigurationError):
            explicit.density_operator(2)

    def test_noise_window_rules(self):
        with self.assertRaises(ValueError):
            NoiseSpec(window=10)
        with self.assertRaises(ValueError):
            NoiseSpec(window=5, poly_order=5)


class NoiseTests(SimpleTestCase):
    def test_polynomials_are_differentiated_exactly(self):
        estimator = NoisyDerivativeEstimator(window=11, poly_order=4)
        times = np.linspace(0.0, 2.0, 41)
        values = times ** 3 - 2.0 * times
        self.assertTrue(np.allclose(estimator.estimate(times, values, 1), 3.0 * times ** 2 - 2.0, atol=1e-8))
        self.assertTrue(np.allclose(estimator.estimate(times, values, 2), 6.0 * times, atol=1e-6))

    def test_non_uniform_grids_are_refused(self):
        estimator = NoisyDerivativeEstimator()
        times = np.geomspace(0.1, 2.0, 21)
        with self.assertRaises(ConfigurationError):
            estimator.estimate(times, np.sin(times), 1)

    def test_bad_estimator_settings(self):
        with self.assertRaises(ConfigurationError):
            NoisyDerivativeEstimator(window=8)
        with self.assertRaises(ConfigurationError):
            NoisyDerivativeEstimator(window=11, poly_order=0)

    def test_variance_grows_with_derivative_order(self):
        estimator = NoisyDerivativeEstimator()
        times = np.linspace(0.0, 1.0, 21)
        variances = [estimator.variance(times, 1e-3, k) for k in range(4)]
        self.assertAlmostEqual(variances[0], 1e-6, places=15)
        self.assertTrue(all(a < b for a, b in zip(variances, variances[1:])))

    def test_noise_shrinks_with_samples_and_is_reproducible(self):
        scenario = short_grid(example("general"))
        exact = SimulationService(scenario).run().record
        deviations = []
        for samples in (100, 10_000):
            noise = scenario.noise.model_copy(update={"samples_per_point": samples, "current_std": 1e-3})
            first = noisy_record(exact, noise, gamma_scale=1.0)
            second = noisy_record(exact, noise, gamma_scale=1.0)
            self.assertTrue(np.array_equal(first.record.column("S_LR"), second.record.column("S_LR")))
            deviations.append(first.record.column("I_L") - exact.column("I_L"))
        self.assertTrue(np.allclose(deviations[0], 10.0 * deviations[1], rtol=1e-6, atol=1e-12))


class ServiceTests(SimpleTestCase):
    def test_exact_round_trip_for_bundled_examples(self):
        for name in ("general", "degenerate", "resonant", "engine"):
            scenario = short_grid(example(name, pipeline=Pipeline.EXACT))
            report = ReconstructionService(scenario).run()
            self.assertLess(report.max_error, 1e-8, name)

    def test_steady_state_reconstruction(self):
        report = ReconstructionService(example("general"), steady=True).run()
        self.assertEqual(len(report.rows), 1)
        self.assertTrue(report.rows[0].physical)
        self.assertLess(report.max_error, 1e-9)

    def test_noisy_population_error_scales_with_samples(self):
        errors = []
        for samples in (100, 10_000):
            scenario = short_grid(example("general"), n_points=61)
            noise = scenario.noise.model_copy(update={"samples_per_point": samples, "current_std": 1e-3})
            scenario = scenario.model_copy(update={"pipeline": Pipeline.NOISY, "noise": noise})
            report = ReconstructionService(scenario, level="populations").run()
            self.assertIsNotNone(report.sample_std)
            errors.append(report.population_median_error)
        ratio = errors[0] / errors[1]
        self.assertGreaterEqual(ratio, 5.0)
        self.assertLessEqual(ratio, 20.0)

    def test_noisy_resonant_rows_pass_the_consistency_checks(self):
        scenario = example("resonant", pipeline=Pipeline.NOISY)
        report = ReconstructionService(scenario).run()
        self.assertEqual(len(report.rows), 201)
        for row in report.rows:
            self.assertFalse([flag for flag in row.flags if flag.startswith("inconsistent")], row.time)
            self.assertTrue(row.populations.consistent, row.time)
        self.assertTrue(all(row.physical for row in report.rows if row.time >= 2.0))
        self.assertEqual(report.noise_gate_sigmas, 5.0)

    def test_noisy_reconstruction_from_a_transport_file_uses_the_same_gates(self):
        scenario = short_grid(example("resonant", pipeline=Pipeline.NOISY), n_points=101)
        simulation = SimulationService(scenario).run()
        self.assertIn("S_LR", simulation.gate_variances)
        self.assertGreaterEqual(simulation.gate_variances["dI_L"], simulation.variances["dI_L"])
        from_file = ReconstructionService(scenario).run(record=simulation.record)
        self.assertEqual(from_file.noise_gate_sigmas, 5.0)
        self.assertFalse(any(flag.startswith("inconsistent") for row in from_file.rows for flag in row.flags))

    def test_missing_columns_for_the_level(self):
        scenario = short_grid(example("general", k_max=1))
        with self.assertRaises(ConfigurationError) as raised:
            ReconstructionService(scenario, level="full").run()
        self.assertEqual(raised.exception.details["missing"], ["d2I_L", "d2I_R"])

    def test_estimation_recovers_the_resonant_parameters(self):
        report = EstimationService(example("resonant")).run()
        self.assertEqual(report.case, "resonant")
        self.assertLess(max(report.relative_errors.values()), 1e-5)
        self.assertTrue(all(abs(entry.residual) < 1e-6 for entry in report.closure))

    def test_analysis_of_the_resonant_example(self):
        report = AnalysisService(example("resonant")).run()
        self.assertEqual(report.coherences["alpha"], "reachable")
        self.assertEqual(report.coherences["beta"], "not_generated")
        self.assertEqual([seed.label for seed in report.seeds], ["n_L", "n_R", "n_LR"])

    def test_estimation_report_lists_each_identity(self):
        report = EstimationService(example("resonant")).run()
        self.assertEqual([family.name for family in report.equations], ["phi_difference"])
        self.assertEqual(len(report.equations[0].residuals), 4)
        self.assertLess(report.equations[0].norm, 1e-8)
        names = [entry.name for entry in report.closure]
        self.assertIn("n_L affine", names)
        self.assertTrue(all(abs(entry.residual) < 1e-6 for entry in report.closure))

    def test_analysis_report_carries_the_spectrum(self):
        report = AnalysisService(example("resonant")).run()
        spectrum = report.spectrum
        self.assertEqual(len(spectrum.eigenvalues), 16)
        self.assertTrue(any(abs(re) < 1e-10 and abs(im) < 1e-10 for re, im in spectrum.eigenvalues))
        self.assertLess(spectrum.biorthogonality_residual, 1e-8)
        self.assertIsNotNone(spectrum.vandermonde_condition)
        self.assertTrue(all(len(cluster) > 1 for cluster in spectrum.degeneracy_clusters))
        for seed in report.seeds:
            self.assertEqual(len(seed.overlaps), 16)
            self.assertEqual(seed.reduced_count, seed.krylov_dimension)
            self.assertGreaterEqual(seed.reachable_count, seed.reduced_count)
            self.assertLess(seed.closure_residual, 1e-8)
        dumped = json.loads(report.model_dump_json())
        self.assertEqual(len(dumped["spectrum"]["eigenvalues"][0]), 2)

    def test_analysis_of_the_driven_example(self):
        report = AnalysisService(example("driven")).run()
        self.assertEqual(report.completeness.observable_dimension, 16)
        self.assertTrue(all(value == "reachable" for value in report.coherences.values()))

    def test_engine_concurrence_matches_the_state(self):
        report = ConcurrenceService(example("engine")).run()
        self.assertEqual(report.method, "transport_special")
        self.assertLess(report.max_deviation, 1e-7)
        self.assertEqual(report.rows[0].state, 0.0)
        self.assertEqual(report.flags, [])
        self.assertEqual(len(report.rows), 401)
        self.assertAlmostEqual(report.rows[-1].state, report.steady_state, places=7)


class CommandTests(SimpleTestCase):
    def run_command(self, name, *args):
        out = StringIO()
        call_command(name, *args, stdout=out)
        return out.getvalue()

    def test_simulate_writes_frozen_columns(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = self.run_command("simulate", "--config", str(EXAMPLES / "general.json"), "--out", tmp)
            self.assertIn("Done in", output)
            trajectory = (Path(tmp) / "trajectory.csv").read_text().splitlines()
            transport = (Path(tmp) / "transport.csv").read_text().splitlines()
        self.assertEqual(trajectory[0], ",".join(TRAJECTORY_COLUMNS))
        self.assertEqual(transport[0], ",".join(RECORD_COLUMNS))
        self.assertEqual(len(trajectory), 202)

    def test_reruns_are_byte_identical(self):
        contents = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                self.run_command(
                    "simulate", "--config", str(EXAMPLES / "driven.json"), "--out", tmp, "--seed", "3",
                )
                contents.append((Path(tmp) / "transport.csv").read_bytes())
        self.assertEqual(contents[0], contents[1])

    def test_reconstruct_from_a_transport_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = str(EXAMPLES / "general.json")
            self.run_command("simulate", "--config", config, "--out", tmp)
            self.run_command(
                "reconstruct", "--config", config, "--out", tmp,
                "--transport", str(Path(tmp) / "transport.csv"), "--format", "report",
            )
            report = json.loads((Path(tmp) / "reconstruction.json").read_text())
        self.assertEqual(len(report["rows"]), 201)
        self.assertIsNone(report["max_error"])
        self.assertTrue(all(row["physical"] for row in report["rows"]))

    def test_reconstruct_steady_state_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.run_command(
                "reconstruct", "--config", str(EXAMPLES / "general.json"), "--out", tmp, "--steady-state",
            )
            lines = (Path(tmp) / "reconstruction.csv").read_text().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertTrue(lines[0].startswith("time,r_00,r_01,r_10,r_11"))

    def test_estimate_and_analyze_reports(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = str(EXAMPLES / "resonant.json")
            self.run_command("estimate", "--config", config, "--out", tmp)
            self.run_command("analyze", "--config", config, "--out", tmp, "--format", "report")
            estimation = (Path(tmp) / "estimation.csv").read_text().splitlines()
            analysis = json.loads((Path(tmp) / "analysis.json").read_text())
        self.assertEqual(estimation[0], "parameter,value,true_value,relative_error")
        self.assertEqual(analysis["coherences"]["beta"], "not_generated")

    def test_concurrence_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.run_command("concurrence", "--config", str(EXAMPLES / "engine.json"), "--out", tmp)
            lines = (Path(tmp) / "concurrence.csv").read_text().splitlines()
        self.assertEqual(lines[0], ",".join(CONCURRENCE_COLUMNS))
        self.assertEqual(len(lines), 402)

    def test_invalid_config_exits_with_one(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.json"
            path.write_text('{"name": "x"}')
            with self.assertRaises(CommandError) as raised:
                self.run_command("simulate", "--config", str(path), "--out", tmp)
        self.assertEqual(raised.exception.returncode, 1)

    def test_singular_probes_exit_with_two(self):
        with tempfile.TemporaryDirectory() as tmp:
            raw = json.loads((EXAMPLES / "general.json").read_text())
            raw["estimation"] = {"case": "general", "probe_times": [1.0, 1.0, 1.0, 1.0, 1.0]}
            path = Path(tmp) / "singular.json"
            path.write_text(json.dumps(raw))
            with self.assertRaises(CommandError) as raised:
                self.run_command("estimate", "--config", str(path), "--out", tmp)
        self.assertEqual(raised.exception.returncode, 2)

    def test_missing_config_exits_with_three(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as raised:
                self.run_command("simulate", "--config", str(Path(tmp) / "absent.json"), "--out", tmp)
        self.assertEqual(raised.exception.returncode, 3)
