from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from lindblad.propagation import steady_state
from lindblad.superoperators import build_lindbladian
from qubits.exceptions import ConfigurationError, InconsistentDataError
from qubits.states import DensityOperator, is_x_shaped
from qubits.testing import random_config, random_density_matrix, reference_config
from scenarios.services import true_values
from tomography.completeness import (
    CoherenceReach,
    Observability,
    coherence_summary,
    completeness_report,
)
from tomography.projections import (
    factored_projection,
    inclusion_exclusion_projection,
    project_state,
    transport_moments,
)
from tomography.reconstruction import (
    ElementStatus,
    KnownParameters,
    NoiseGates,
    ReconstructionInput,
    ReconstructionLevel,
    estimate_gamma_tilde,
    reconstruct_state,
    steady_state_qst,
)
from tomography.schemas import completeness_schema, reconstruction_schema
from transport.observables import TransportModel

CASES = ("general", "degenerate", "resonant", "resonant_degenerate")


def reconstruct(config, rho, level=ReconstructionLevel.FULL, unknown=()):
    model = TransportModel(config)
    snapshot = model.snapshot(rho, 0.0, k_max=3)
    known = KnownParameters.from_config(config, unknown=unknown)
    return reconstruct_state(ReconstructionInput(snapshot, known), level)


class ProjectionTests(SimpleTestCase):
    def test_three_evaluations_of_a_projection_agree(self):
        config = reference_config()
        model = TransportModel(config)
        rho = random_density_matrix(np.random.default_rng(21))
        for leads in ((0,), (1,), (0, 1)):
            for k in range(3):
                direct = project_state(leads, k, rho, model.lindbladian, config)
                factored = factored_projection(leads, k, rho, model)
                moments = transport_moments(leads, k, rho, model)
                combined = inclusion_exclusion_projection(leads, k, moments, model.derived)
                self.assertAlmostEqual(direct, factored, places=12)
                self.assertAlmostEqual(direct, combined, places=12)

    def test_projection_evaluations_agree_over_random_configs(self):
        rng = np.random.default_rng(22)
        for index in range(20):
            config = random_config(rng, case=CASES[index % 4], dephasing=index % 2 == 0)
            model = TransportModel(config)
            for _ in range(200):
                rho = random_density_matrix(rng)
                for leads in ((0,), (1,), (0, 1)):
                    for k in range(5):
                        direct = project_state(leads, k, rho, model.lindbladian, config)
                        factored = factored_projection(leads, k, rho, model)
                        moments = transport_moments(leads, k, rho, model)
                        combined = inclusion_exclusion_projection(leads, k, moments, model.derived)
                        scale = max(1.0, abs(direct))
                        self.assertLess(abs(direct - factored), 1e-10 * scale, (leads, k))
                        self.assertLess(abs(direct - combined), 1e-10 * scale, (leads, k))

    def test_missing_moment_is_reported(self):
        derived = reference_config().derived()
        with self.assertRaises(ConfigurationError):
            inclusion_exclusion_projection((0, 1), 0, {(0,): 0.1, (1,): 0.2}, derived)


class ReconstructionTests(SimpleTestCase):
    def test_exact_data_recovers_every_x_element(self):
        config = reference_config()
        rho = random_density_matrix(np.random.default_rng(30))
        state = reconstruct(config, rho)
        for name, value in true_values(rho.matrix).items():
            self.assertAlmostEqual(state.value(name), value, places=9, msg=name)
        self.assertTrue(state.populations.consistent)

    def test_x_shaped_state_is_rebuilt_as_a_density_operator(self):
        config = reference_config()
        rho = random_density_matrix(np.random.default_rng(31), x_shaped=True)
        state = reconstruct(config, rho)
        self.assertTrue(state.physical)
        self.assertLess(np.max(np.abs(state.matrix - rho.matrix)), 1e-9)

    def test_levels_limit_what_is_reconstructed(self):
        config = reference_config()
        rho = random_density_matrix(np.random.default_rng(32))
        populations_only = reconstruct(config, rho, ReconstructionLevel.POPULATIONS)
        self.assertEqual(populations_only.elements["im_alpha"].status, ElementStatus.UNIDENTIFIABLE)
        self.assertIsNone(populations_only.matrix)
        imaginary = reconstruct(config, rho, ReconstructionLevel.IMAGINARY)
        self.assertEqual(imaginary.elements["im_beta"].status, ElementStatus.RECONSTRUCTED)
        self.assertEqual(imaginary.elements["re_beta"].status, ElementStatus.UNIDENTIFIABLE)

    def test_unknown_energy_leaves_real_part_unidentifiable(self):
        config = reference_config()
        rho = random_density_matrix(np.random.default_rng(33))
        state = reconstruct(config, rho, unknown=("delta",))
        self.assertEqual(state.elements["re_alpha"].status, ElementStatus.UNIDENTIFIABLE)
        self.assertEqual(state.elements["re_beta"].status, ElementStatus.RECONSTRUCTED)

    def test_zero_pair_coupling_marks_beta_not_generated(self):
        config = reference_config(g_off=0.0)
        path = TransportModel(config).propagator.path(DensityOperator.ground())
        rho = path(1.5)
        state = reconstruct(config, rho)
        self.assertEqual(state.elements["re_beta"].status, ElementStatus.NOT_GENERATED)
        self.assertTrue(state.elements["im_beta"].consistent)
        self.assertTrue(state.physical)
        self.assertLess(np.max(np.abs(state.matrix - rho.matrix)), 1e-9)

    def test_noise_gates_widen_the_vanishing_check(self):
        config = reference_config(g_off=0.0)
        model = TransportModel(config)
        rho = model.propagator.path(DensityOperator.ground())(1.5)
        snapshot = model.snapshot(rho, 1.5, k_max=3)
        currents = {lead: list(values) for lead, values in snapshot.currents.items()}
        currents[0][1] += 1e-6
        shifted = replace(snapshot, currents=currents)
        known = KnownParameters.from_config(config)

        exact = reconstruct_state(ReconstructionInput(shifted, known))
        self.assertFalse(exact.elements["im_beta"].consistent)
        self.assertIn("inconsistent data: im_beta", exact.flags)

        gates = NoiseGates({"I_L": 1e-7, "dI_L": 1e-6, "I_R": 1e-7, "dI_R": 1e-6}, sigmas=5.0)
        measured = reconstruct_state(ReconstructionInput(shifted, known, noise=gates))
        self.assertTrue(measured.elements["im_beta"].consistent)
        self.assertFalse(any(flag.startswith("inconsistent") for flag in measured.flags))
        self.assertTrue(measured.physical)

    def test_noise_gate_tolerance(self):
        gates = NoiseGates({"I_L": 1e-3, "dI_L": 2e-3}, sigmas=5.0)
        self.assertAlmostEqual(gates.tolerance(1e-9, [("I_L", 1.0), ("dI_L", -0.5), ("S_LR", 4.0)]), 1e-2)
        self.assertEqual(gates.tolerance(0.1, [("I_L", 1.0)]), 0.1)
        from_variances = NoiseGates.from_variances({"I_L": 4e-6}, sigmas=2.0)
        self.assertAlmostEqual(from_variances.stds["I_L"], 2e-3)

    def test_degenerate_energies_make_real_parts_unidentifiable(self):
        config = reference_config(eps=(0.8, 0.8), u_int=-1.6)
        rho = random_density_matrix(np.random.default_rng(34))
        state = reconstruct(config, rho)
        for name in ("re_alpha", "re_beta"):
            self.assertEqual(state.elements[name].status, ElementStatus.UNIDENTIFIABLE)
            self.assertTrue(state.elements[name].consistent)
        self.assertAlmostEqual(state.value("im_alpha"), rho.matrix[1, 2].imag, places=9)

    def test_drives_are_flagged(self):
        config = reference_config(drive=(0.1, 0.1))
        state = reconstruct(config, DensityOperator.maximally_mixed())
        self.assertTrue(any("local drives" in flag for flag in state.flags))

    def test_schema_lists_every_element(self):
        config = reference_config()
        state = reconstruct(config, random_density_matrix(np.random.default_rng(35), x_shaped=True))
        schema = reconstruction_schema(state)
        self.assertEqual(
            [element.name for element in schema.elements],
            ["re_alpha", "im_alpha", "re_beta", "im_beta"],
        )
        self.assertEqual(schema.level, "full")
        self.assertEqual(len(schema.matrix.splitlines()), 4)

    def test_round_trips_over_random_configs(self):
        rng = np.random.default_rng(36)
        reconstructed = ElementStatus.RECONSTRUCTED
        expected = {
            "general": dict.fromkeys(("re_alpha", "im_alpha", "re_beta", "im_beta"), reconstructed),
            "degenerate": {
                "re_alpha": ElementStatus.UNIDENTIFIABLE, "im_alpha": reconstructed,
                "re_beta": ElementStatus.UNIDENTIFIABLE, "im_beta": reconstructed,
            },
            "resonant": {
                "re_alpha": reconstructed, "im_alpha": reconstructed,
                "re_beta": ElementStatus.NOT_GENERATED, "im_beta": ElementStatus.UNIDENTIFIABLE,
            },
            "resonant_degenerate": {
                "re_alpha": ElementStatus.UNIDENTIFIABLE, "im_alpha": reconstructed,
                "re_beta": ElementStatus.NOT_GENERATED, "im_beta": ElementStatus.UNIDENTIFIABLE,
            },
        }
        for case in CASES:
            for _ in range(20):
                config = random_config(rng, case=case, dephasing=rng.random() < 0.7)
                rho = random_density_matrix(rng, x_shaped=rng.random() < 0.5)
                state = reconstruct(config, rho)
                truth = true_values(rho.matrix)
                self.assertTrue(state.populations.consistent, case)
                for name in ("r_00", "r_01", "r_10", "r_11"):
                    self.assertAlmostEqual(state.value(name), truth[name], places=10, msg=(case, name))
                for name, status in expected[case].items():
                    element = state.elements[name]
                    self.assertEqual(element.status, status, (case, name))
                    self.assertTrue(element.consistent, (case, name))
                    if status == reconstructed:
                        self.assertAlmostEqual(element.value, truth[name], places=8, msg=(case, name))
                if case == "general" and is_x_shaped(rho.matrix):
                    self.assertTrue(state.physical)
                    self.assertLess(np.max(np.abs(state.matrix - rho.matrix)), 1e-8)

    def test_third_derivatives_are_fixed_by_lower_orders(self):
        rng = np.random.default_rng(37)
        for _ in range(5):
            model = TransportModel(random_config(rng))

            def features(rho, model=model):
                snapshot = model.snapshot(rho, 0.0, k_max=3)
                lower = [snapshot.current(lead, k) for lead in (0, 1) for k in range(3)]
                third = [snapshot.current(lead, 3) for lead in (0, 1)]
                return [1.0, *lower, snapshot.i_lr], third

            training = [features(random_density_matrix(rng)) for _ in range(30)]
            design = np.array([row for row, _ in training])
            targets = np.array([third for _, third in training])
            coefficients, *_ = np.linalg.lstsq(design, targets, rcond=None)
            for _ in range(10):
                row, third = features(random_density_matrix(rng))
                predicted = np.array(row) @ coefficients
                self.assertLess(np.max(np.abs(predicted - third)), 1e-8 * max(1.0, np.max(np.abs(third))))
            # the reconstruction itself never reads third derivatives
            rho = random_density_matrix(rng)
            known = KnownParameters.from_config(model.config)
            full = reconstruct_state(ReconstructionInput(model.snapshot(rho, 0.0, k_max=3), known))
            truncated = reconstruct_state(ReconstructionInput(model.snapshot(rho, 0.0, k_max=2), known))
            for name in ("r_00", "r_11", "re_alpha", "im_beta"):
                self.assertEqual(full.value(name), truncated.value(name))


class SteadyStateTests(SimpleTestCase):
    def steady_input(self, config, unknown=()):
        model = TransportModel(config)
        rho = steady_state(model.lindbladian)
        snapshot = model.snapshot(rho, 100.0, k_max=0)
        return rho, ReconstructionInput(snapshot, KnownParameters.from_config(config, unknown=unknown))

    def test_steady_state_from_currents_alone(self):
        rho, inp = self.steady_input(reference_config())
        state = steady_state_qst(inp)
        self.assertTrue(state.physical)
        self.assertLess(np.max(np.abs(state.matrix - rho.matrix)), 1e-9)

    def test_unknown_gamma_tilde_is_a_root(self):
        config = reference_config(g_off=0.0)
        truth = config.derived().gamma_tilde
        rho, inp = self.steady_input(config, unknown=("gamma_tilde",))
        state = steady_state_qst(inp)
        roots = (state.gamma_tilde.value, *state.gamma_tilde.alternatives)
        self.assertTrue(any(abs(root - truth) < 1e-6 * truth for root in roots), roots)
        if abs(state.gamma_tilde.value - truth) < 1e-6 * truth:
            self.assertLess(np.max(np.abs(state.matrix - rho.matrix)), 1e-6)

    def test_unknown_gamma_tilde_needs_zero_pair_coupling(self):
        _, inp = self.steady_input(reference_config(), unknown=("gamma_tilde",))
        with self.assertRaises(ConfigurationError):
            steady_state_qst(inp)

    def test_zero_current_is_inconsistent(self):
        known = KnownParameters.from_config(reference_config(g_off=0.0))
        with self.assertRaises(InconsistentDataError):
            estimate_gamma_tilde(0.0, known)


class CompletenessTests(SimpleTestCase):
    def test_generic_configuration(self):
        config = reference_config()
        report = completeness_report(config, build_lindbladian(config))
        self.assertEqual(report.observable_dimension, 8)
        self.assertEqual(report.status("re_alpha"), Observability.RECONSTRUCTIBLE)
        self.assertEqual(report.status("im_z"), Observability.UNREACHABLE)
        self.assertFalse(report.complete)
        summary = coherence_summary(report, config)
        self.assertEqual(summary["alpha"], CoherenceReach.REACHABLE)
        self.assertEqual(summary["x"], CoherenceReach.UNREACHABLE)
        schema = completeness_schema(report)
        self.assertEqual(len(schema.directions), 16)
        self.assertEqual(set(schema.seed_reach), {"n_L", "n_R", "n_LR"})

    def test_degenerate_configuration_reaches_half_the_coherences(self):
        config = reference_config(eps=(0.8, 0.8), u_int=-1.6)
        summary = coherence_summary(completeness_report(config), config)
        self.assertEqual(summary["alpha"], CoherenceReach.PARTIAL)
        self.assertEqual(summary["beta"], CoherenceReach.PARTIAL)

    def test_zero_pair_coupling_does_not_generate_beta(self):
        config = reference_config(g_off=0.0)
        summary = coherence_summary(completeness_report(config), config)
        self.assertEqual(summary["beta"], CoherenceReach.NOT_GENERATED)
        self.assertEqual(summary["alpha"], CoherenceReach.REACHABLE)

    def test_driven_configuration_is_complete(self):
        config = reference_config(drive=(0.2, 0.1))
        self.assertTrue(completeness_report(config).complete)

    def test_single_qubit_is_refused(self):
        config = reference_config(n_qubits=1, eps=(1.0,), u_int=0.0, g_res=0.0, g_off=0.0,
                                  baths=(), gamma_z=None)
        with self.assertRaises(ConfigurationError):
            completeness_report(config)
