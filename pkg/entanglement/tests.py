import numpy as np
from django.test import SimpleTestCase

from entanglement.concurrence import (
    ConcurrenceMethod,
    concurrence_transport_general,
    concurrence_transport_special,
    concurrence_x_state,
    werner_state,
    wootters_full,
)
from qubits.exceptions import CaseAssumptionError, ConfigurationError
from qubits.states import DensityOperator
from qubits.testing import random_config, random_density_matrix, reference_config
from tomography.reconstruction import KnownParameters
from transport.observables import TransportModel

TIMES = (0.3, 0.8, 1.5, 2.5, 4.0)


def transport_run(config, initial, k_max=2):
    model = TransportModel(config)
    trajectory = model.propagator.evolve_many(initial, TIMES)
    snapshots = [model.snapshot(state, t, k_max) for t, state in zip(trajectory.times, trajectory.states)]
    return trajectory.states, snapshots, KnownParameters.from_config(config)


class StateConcurrenceTests(SimpleTestCase):
    def test_bell_states_are_maximally_entangled(self):
        for name in ("phi_plus", "phi_minus", "psi_plus", "psi_minus"):
            state = DensityOperator.bell(name)
            self.assertAlmostEqual(concurrence_x_state(state).value, 1.0, places=12)
            self.assertAlmostEqual(wootters_full(state).value, 1.0, places=7)
        self.assertEqual(concurrence_x_state(DensityOperator.bell("psi_plus")).branch, "alpha")
        self.assertEqual(concurrence_x_state(DensityOperator.bell("phi_plus")).branch, "beta")

    def test_werner_states(self):
        for p in (0.0, 0.2, 1.0 / 3.0, 0.6, 0.9):
            expected = max(0.0, 1.5 * p - 0.5)
            self.assertAlmostEqual(concurrence_x_state(werner_state(p)).value, expected, places=12)
            self.assertAlmostEqual(wootters_full(werner_state(p)).value, expected, places=7)
        with self.assertRaises(ConfigurationError):
            werner_state(1.5)

    def test_product_states_have_no_concurrence(self):
        for state in (DensityOperator.ground(), DensityOperator.maximally_mixed()):
            result = concurrence_x_state(state)
            self.assertEqual(result.value, 0.0)
            self.assertIsNone(result.branch)

    def test_x_formula_agrees_with_wootters(self):
        rng = np.random.default_rng(50)
        for _ in range(20):
            state = random_density_matrix(rng, x_shaped=True)
            self.assertAlmostEqual(
                concurrence_x_state(state).value, wootters_full(state).value, places=7
            )

    def test_general_states_need_wootters(self):
        state = random_density_matrix(np.random.default_rng(51))
        with self.assertRaises(ConfigurationError):
            concurrence_x_state(state)
        value = wootters_full(state).value
        self.assertGreaterEqual(value, 0.0)
        self.assertLessEqual(value, 1.0)

    def test_wootters_handles_pure_states(self):
        ket = np.array([np.cos(0.3), 0.0, 0.0, np.sin(0.3)])
        state = DensityOperator.from_ket(ket)
        self.assertAlmostEqual(wootters_full(state).value, abs(np.sin(0.6)), places=7)

    def test_werner_concurrence_grows_with_the_singlet_weight(self):
        weights = np.linspace(0.0, 1.0, 101)
        values = np.array([concurrence_x_state(werner_state(p)).value for p in weights])
        self.assertTrue(np.all(np.diff(values) >= -1e-15))
        self.assertTrue(np.all(values[weights <= 1.0 / 3.0] == 0.0))
        self.assertTrue(np.all(values[weights > 0.34] > 0.0))


class TransportConcurrenceTests(SimpleTestCase):
    def test_special_case_tracks_the_state(self):
        config = reference_config(eps=(0.8, 0.8), g_off=0.0)
        states, snapshots, known = transport_run(config, DensityOperator.ground(), k_max=1)
        for state, snapshot in zip(states, snapshots):
            transport = concurrence_transport_special(snapshot, known)
            self.assertEqual(transport.method, ConcurrenceMethod.TRANSPORT_SPECIAL)
            self.assertAlmostEqual(transport.value, wootters_full(state).value, places=7)

    def test_special_case_refuses_other_dynamics(self):
        config = reference_config()
        _, snapshots, known = transport_run(config, DensityOperator.ground(), k_max=1)
        with self.assertRaises(CaseAssumptionError):
            concurrence_transport_special(snapshots[0], known)

    def test_general_case_tracks_the_state(self):
        config = reference_config()
        initial = DensityOperator(0.9 * DensityOperator.bell("psi_plus").matrix + 0.1 * np.eye(4) / 4.0)
        states, snapshots, known = transport_run(config, initial)
        self.assertGreater(concurrence_x_state(states[0]).value, 0.1)
        for state, snapshot in zip(states, snapshots):
            transport = concurrence_transport_general(snapshot, known)
            self.assertAlmostEqual(transport.value, concurrence_x_state(state).value, places=7)
            self.assertFalse(transport.partial)

    def test_general_case_needs_every_parameter(self):
        config = reference_config()
        _, snapshots, _ = transport_run(config, DensityOperator.ground())
        known = KnownParameters.from_config(config, unknown=("delta", "gamma_tilde"))
        with self.assertRaises(ConfigurationError) as raised:
            concurrence_transport_general(snapshots[0], known)
        self.assertEqual(raised.exception.details["missing"], ["delta", "gamma_tilde"])

    def test_vanishing_detuning_gives_a_partial_value(self):
        config = reference_config(eps=(0.8, 0.8))
        _, snapshots, known = transport_run(config, DensityOperator.bell("psi_plus"))
        result = concurrence_transport_general(snapshots[1], known)
        self.assertTrue(result.partial)
        self.assertTrue(any(flag.startswith("alpha") for flag in result.flags))

    def test_non_x_evolution_is_flagged(self):
        config = reference_config()
        _, snapshots, known = transport_run(config, DensityOperator.ground())
        result = concurrence_transport_general(snapshots[0], known, x_shaped=False)
        self.assertTrue(any("not X-shaped" in flag for flag in result.flags))

    def test_general_case_over_random_configs(self):
        rng = np.random.default_rng(52)
        singlet = DensityOperator.bell("psi_minus").matrix
        pair = DensityOperator.bell("phi_plus").matrix
        for _ in range(20):
            config = random_config(rng)
            initials = (
                DensityOperator.ground(),
                DensityOperator(0.85 * singlet + 0.15 * np.eye(4) / 4.0),
                DensityOperator(0.85 * pair + 0.15 * np.eye(4) / 4.0),
                random_density_matrix(rng, x_shaped=True),
                random_density_matrix(rng, x_shaped=True),
            )
            for initial in initials:
                states, snapshots, known = transport_run(config, initial)
                for state, snapshot in zip(states, snapshots):
                    transport = concurrence_transport_general(snapshot, known)
                    self.assertFalse(transport.partial)
                    self.assertAlmostEqual(transport.value, concurrence_x_state(state).value, places=7)

    def test_special_case_over_random_configs(self):
        rng = np.random.default_rng(53)
        for _ in range(10):
            config = random_config(rng, case="resonant_degenerate")
            states, snapshots, known = transport_run(config, DensityOperator.ground(), k_max=1)
            for state, snapshot in zip(states, snapshots):
                self.assertAlmostEqual(
                    concurrence_transport_special(snapshot, known).value, wootters_full(state).value, places=7
                )
