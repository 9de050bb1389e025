import numpy as np
from django.test import SimpleTestCase

from estimation.closure import krylov_closure_coefficients
from estimation.probes import MIN_PROBES, EstimationCase, probe_snapshots, suggest_probe_times
from estimation.schemas import estimation_schema
from estimation.services import (
    estimate,
    estimate_degenerate,
    estimate_dephasing,
    estimate_g_res_gamma_tilde,
    estimate_general,
    estimate_resonant,
)
from krylov.arnoldi import occupation_seeds
from lindblad.superoperators import build_lindbladian
from qubits.exceptions import ConditioningError, ConfigurationError
from qubits.schemas import SystemConfig
from qubits.states import DensityOperator
from qubits.testing import explicit_bath, random_config, random_density_matrix, reference_config
from tomography.projections import project_state
from tomography.reconstruction import KnownParameters
from transport.observables import TransportModel

ESTIMATED = ("g_res", "g_off", "delta", "doublon_energy", "gamma_tilde")


def probes_for(config, times, initial=None):
    model = TransportModel(config)
    path = model.propagator.path(initial or DensityOperator.ground())
    snapshots = probe_snapshots(model, path, times, k_max=3)
    known = KnownParameters.from_config(config, unknown=ESTIMATED)
    return snapshots, known


class EstimationTestCase(SimpleTestCase):
    def assertRelative(self, value, expected, tol=1e-6):
        self.assertLess(abs(value - expected), tol * max(abs(expected), 1.0), f"{value} vs {expected}")


class ResonantDegenerateTests(EstimationTestCase):
    def setUp(self):
        self.config = reference_config(eps=(0.8, 0.8), g_off=0.0)
        self.truth = self.config.derived()

    def test_coupling_and_dephasing(self):
        snapshots, known = probes_for(self.config, [0.4, 1.1, 2.0])
        result = estimate_g_res_gamma_tilde(snapshots, known)
        self.assertRelative(result.value("g_res"), 0.35)
        self.assertRelative(result.value("gamma_tilde"), self.truth.gamma_tilde)
        self.assertRelative(result.value("gamma_dephasing"), self.truth.gamma_dephasing)

    def test_two_probes_suffice(self):
        snapshots, known = probes_for(self.config, [0.5, 1.5])
        result = estimate_g_res_gamma_tilde(snapshots, known)
        self.assertRelative(result.value("g_res"), 0.35, 1e-5)
        self.assertRelative(result.value("gamma_tilde"), self.truth.gamma_tilde, 1e-5)

    def test_single_probe_dephasing(self):
        snapshots, known = probes_for(self.config, [0.9])
        self.assertRelative(estimate_dephasing(snapshots[0], 0.35, known), self.truth.gamma_tilde)

    def test_dispatcher(self):
        snapshots, known = probes_for(self.config, [0.5, 1.5])
        result = estimate("resonant_degenerate", snapshots, known)
        self.assertEqual(result.case, EstimationCase.RESONANT_DEGENERATE)

    def test_random_configurations(self):
        rng = np.random.default_rng(45)
        for _ in range(10):
            config = random_config(rng, case="resonant_degenerate")
            snapshots, known = probes_for(config, [0.4, 1.1, 2.0])
            result = estimate_g_res_gamma_tilde(snapshots, known)
            self.assertRelative(result.value("g_res"), config.g_res)
            self.assertRelative(result.value("gamma_tilde"), config.derived().gamma_tilde)

    def test_one_residual_per_time(self):
        snapshots, known = probes_for(self.config, [0.4, 1.1, 2.0])
        result = estimate_g_res_gamma_tilde(snapshots, known)
        self.assertEqual(set(result.equation_residuals), {"phi_difference"})
        self.assertEqual(len(result.equation_residuals["phi_difference"]), 3)
        self.assertLess(max(map(abs, result.equation_residuals["phi_difference"])), 1e-10)


class DegenerateTests(EstimationTestCase):
    def setUp(self):
        self.config = reference_config(eps=(0.8, 0.8), u_int=-1.6)
        self.truth = self.config.derived()

    def test_couplings_and_dephasing(self):
        snapshots, known = probes_for(self.config, [0.3, 0.8, 1.6, 2.5])
        result = estimate_degenerate(snapshots, known)
        self.assertRelative(result.value("g_res"), 0.35)
        self.assertRelative(result.value("g_off"), 0.25)
        self.assertRelative(result.value("gamma_tilde"), self.truth.gamma_tilde)

    def test_known_gamma_tilde(self):
        snapshots, known = probes_for(self.config, [0.3, 0.8, 1.6])
        result = estimate_degenerate(snapshots, known, gamma_tilde=self.truth.gamma_tilde)
        self.assertRelative(result.value("g_res"), 0.35)
        self.assertEqual(result.value("gamma_tilde"), self.truth.gamma_tilde)

    def test_too_few_probes(self):
        snapshots, known = probes_for(self.config, [0.3, 0.8])
        with self.assertRaises(ConfigurationError) as raised:
            estimate_degenerate(snapshots, known)
        self.assertEqual(raised.exception.details["needed"], MIN_PROBES[EstimationCase.DEGENERATE])

    def test_random_configurations(self):
        rng = np.random.default_rng(46)
        for _ in range(10):
            config = random_config(rng, case="degenerate")
            snapshots, known = probes_for(config, [0.3, 0.8, 1.6, 2.5])
            result = estimate_degenerate(snapshots, known)
            self.assertRelative(result.value("g_res"), config.g_res)
            self.assertRelative(result.value("g_off"), config.g_off)
            self.assertRelative(result.value("gamma_tilde"), config.derived().gamma_tilde)
            for name in ("phi_difference", "phi_sum"):
                self.assertEqual(len(result.equation_residuals[name]), 4)
                self.assertLess(max(map(abs, result.equation_residuals[name])), 1e-9)


class ResonantTests(EstimationTestCase):
    def test_detuning_coupling_and_dephasing(self):
        config = reference_config(g_off=0.0)
        snapshots, known = probes_for(config, [0.3, 0.9, 1.7, 2.8])
        result = estimate_resonant(snapshots, known)
        self.assertRelative(result.value("g_res"), 0.35, 1e-5)
        self.assertRelative(result.value("delta"), 0.4, 1e-5)
        self.assertRelative(result.value("gamma_tilde"), config.derived().gamma_tilde, 1e-5)
        self.assertIn("delta reported as |delta|", result.notes)

    def test_detuning_sign_is_not_recovered(self):
        config = reference_config(eps=(0.6, 1.0), g_off=0.0)
        snapshots, known = probes_for(config, [0.3, 0.9, 1.7, 2.8])
        result = estimate_resonant(snapshots, known)
        self.assertRelative(result.value("delta"), 0.4, 1e-5)


class GeneralTests(EstimationTestCase):
    def setUp(self):
        self.config = reference_config()
        self.truth = self.config.derived()
        self.times = [0.2, 0.6, 1.1, 1.8, 2.6]

    def test_all_parameters(self):
        snapshots, known = probes_for(self.config, self.times)
        result = estimate_general(snapshots, known)
        self.assertRelative(result.value("g_res"), 0.35, 1e-5)
        self.assertRelative(result.value("g_off"), 0.25, 1e-5)
        self.assertRelative(result.value("delta"), 0.4, 1e-5)
        self.assertRelative(result.value("doublon_energy"), 1.9, 1e-5)
        self.assertRelative(result.value("gamma_tilde"), self.truth.gamma_tilde, 1e-5)
        self.assertEqual(result.unidentifiable, ())

    def test_known_gamma_tilde_needs_fewer_probes(self):
        snapshots, known = probes_for(self.config, self.times[:4])
        result = estimate_general(snapshots, known, gamma_tilde=self.truth.gamma_tilde)
        self.assertRelative(result.value("delta"), 0.4, 1e-5)
        self.assertRelative(result.value("g_off"), 0.25, 1e-5)

    def test_missing_pair_coupling_hides_the_doublon_energy(self):
        config = reference_config(g_off=0.0)
        snapshots, known = probes_for(config, self.times)
        result = estimate_general(snapshots, known)
        self.assertEqual(result.unidentifiable, ("doublon_energy",))
        self.assertIsNone(result.value("doublon_energy"))
        self.assertLess(result.value("g_off"), 1e-5)
        self.assertRelative(result.value("delta"), 0.4, 1e-5)

    def test_repeated_probe_times_are_singular(self):
        snapshots, known = probes_for(self.config, [1.0] * 5)
        with self.assertRaises(ConditioningError) as raised:
            estimate_general(snapshots, known)
        self.assertEqual(len(raised.exception.suggested_times), 2)
        self.assertNotIn(1.0, raised.exception.suggested_times)

    def test_schema_reports_relative_errors(self):
        snapshots, known = probes_for(self.config, self.times)
        result = estimate_general(snapshots, known)
        truth = {"g_res": 0.35, "g_off": 0.25, "delta": 0.4, "doublon_energy": 1.9}
        schema = estimation_schema(result, self.times, truth)
        self.assertEqual(schema.case, "general")
        self.assertEqual(set(schema.relative_errors), set(truth))
        self.assertLess(max(schema.relative_errors.values()), 1e-5)

    def test_equation_residuals_are_reported_per_time(self):
        snapshots, known = probes_for(self.config, self.times)
        result = estimate_general(snapshots, known)
        self.assertEqual(set(result.equation_residuals), {"phi_difference", "phi_sum"})
        for values in result.equation_residuals.values():
            self.assertEqual(len(values), len(self.times))
            self.assertLess(max(map(abs, values)), 1e-8)
        schema = estimation_schema(result, self.times)
        self.assertEqual([family.name for family in schema.equations], ["phi_difference", "phi_sum"])
        for family in schema.equations:
            self.assertAlmostEqual(family.norm, float(np.linalg.norm(family.residuals)))


class ProbeTimeTests(SimpleTestCase):
    def test_suggested_times_are_scaled_and_distinct(self):
        times = suggest_probe_times(2.0, count=3)
        self.assertEqual(len(times), 3)
        self.assertAlmostEqual(times[0], 0.05)
        self.assertAlmostEqual(times[-1], 2.5)
        extra = suggest_probe_times(2.0, count=3, exclude=times)
        self.assertEqual(len(extra), 3)
        self.assertTrue(all(min(abs(t - s) for s in times) > 1e-9 for t in extra))


class ClosureTests(SimpleTestCase):
    def test_single_qubit_closure(self):
        config = SystemConfig(n_qubits=1, eps=(1.0,), baths=(explicit_bath(0, 0.3, 0.5),))
        closure = krylov_closure_coefficients(build_lindbladian(config), occupation_seeds(config)["n_L"], "n_L")
        self.assertEqual(closure.order, 2)
        self.assertTrue(np.allclose(closure.coefficients, [0.0, -0.8, -1.0], atol=1e-12))
        self.assertAlmostEqual(closure.affine_constant, -0.3, places=12)
        self.assertFalse(closure.ill_conditioned)

    def test_closure_holds_for_any_state(self):
        config = reference_config()
        lindbladian = build_lindbladian(config)
        rho = random_density_matrix(np.random.default_rng(40))
        for label, seed in occupation_seeds(config).items():
            closure = krylov_closure_coefficients(lindbladian, seed, label)
            leads = {"n_L": (0,), "n_R": (1,), "n_LR": (0, 1)}[label]
            projections = np.array([
                project_state(leads, k, rho, lindbladian, config) for k in range(closure.order + 1)
            ])
            scale = float(np.max(np.abs(closure.coefficients * projections)))
            self.assertLess(abs(closure.residual(projections)), 1e-7 * max(scale, 1.0), label)

    def test_affine_relation_holds_for_any_state(self):
        rng = np.random.default_rng(47)
        leads = {"n_L": (0,), "n_R": (1,), "n_LR": (0, 1)}
        affine_seen = 0
        for _ in range(10):
            config = random_config(rng, case=("general", "degenerate", "resonant")[rng.integers(3)])
            lindbladian = build_lindbladian(config)
            rho = random_density_matrix(rng)
            for label, seed in occupation_seeds(config).items():
                closure = krylov_closure_coefficients(lindbladian, seed, label)
                projections = np.array([
                    project_state(leads[label], k, rho, lindbladian, config)
                    for k in range(closure.order + 1)
                ])
                scale = max(1.0, float(np.max(np.abs(closure.coefficients * projections))))
                self.assertLess(abs(closure.residual(projections)), 1e-7 * scale, label)
                affine = closure.affine_residual(projections)
                if affine is None:
                    continue
                affine_seen += 1
                self.assertLess(abs(affine), 1e-7 * scale, label)
        self.assertGreater(affine_seen, 0)
