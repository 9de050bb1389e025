import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from lindblad.propagation import steady_state
from qubits.exceptions import ConfigurationError
from qubits.operators import LEFT, RIGHT, direction_operator, number_operator
from qubits.schemas import SystemConfig
from qubits.states import DensityOperator, zero_coherences
from qubits.testing import explicit_bath, random_config, random_density_matrix, reference_config
from transport.observables import TransportModel, cross_correlation, transport_record
from transport.records import RECORD_COLUMNS, TransportRecord, derivative_column


class CurrentTests(SimpleTestCase):
    def setUp(self):
        self.config = reference_config()
        self.model = TransportModel(self.config)
        self.rho = random_density_matrix(np.random.default_rng(11))

    def test_ground_state_currents_are_the_gain_rates(self):
        ground = DensityOperator.ground()
        self.assertAlmostEqual(self.model.moment((LEFT,), 0, ground), 0.6)
        self.assertAlmostEqual(self.model.moment(("R",), 0, ground), 0.3)
        self.assertAlmostEqual(self.model.activity(LEFT, ground), 0.6)

    def test_current_is_gain_minus_occupation(self):
        derived = self.model.derived
        for lead in (LEFT, RIGHT):
            occupation = np.trace(number_operator(lead, 2) @ self.rho.matrix).real
            expected = derived.gamma_plus[lead] - derived.gamma_lead[lead] * occupation
            self.assertAlmostEqual(self.model.moment((lead,), 0, self.rho), expected, places=12)

    def test_derivatives_match_the_propagated_current(self):
        path = self.model.propagator.path(self.rho)
        values = self.model.derivatives(LEFT, self.rho, 2)
        h = 1e-4
        plus = self.model.moment((LEFT,), 0, path(h))
        start = self.model.moment((LEFT,), 0, self.rho)
        self.assertAlmostEqual((plus - start) / h, values[1], places=3)
        self.assertAlmostEqual(values[0], self.model.moment((LEFT,), 0, self.rho))
        self.assertAlmostEqual(values[2], self.model.moment((LEFT,), 2, self.rho))

    def test_occupation_balance(self):
        """dn_L/dt = I_L - I_S + P_S and dn_R/dt = I_R + I_S + P_S."""
        flow = self.model.lindbladian.apply(self.rho)
        i_s, p_s = self.model.internal_currents(self.rho)
        d_left = np.trace(number_operator(LEFT, 2) @ flow).real
        d_right = np.trace(number_operator(RIGHT, 2) @ flow).real
        self.assertAlmostEqual(d_left, self.model.moment((LEFT,), 0, self.rho) - i_s + p_s, places=12)
        self.assertAlmostEqual(d_right, self.model.moment((RIGHT,), 0, self.rho) + i_s + p_s, places=12)

    def test_internal_current_derivatives(self):
        flow = self.model.lindbladian.apply(self.rho)
        g, gp = self.config.g_res, self.config.g_off
        d_i_s = -2.0 * g * np.trace(direction_operator("im_alpha") @ flow).real
        d_p_s = 2.0 * gp * np.trace(direction_operator("im_beta") @ flow).real
        computed = self.model.internal_current_derivatives(self.rho)
        self.assertAlmostEqual(computed[0], d_i_s, places=12)
        self.assertAlmostEqual(computed[1], d_p_s, places=12)

    def test_internal_currents_cancel_without_pair_coupling(self):
        config = reference_config(g_off=0.0)
        model = TransportModel(config)
        trajectory = model.propagator.evolve_many(DensityOperator.ground(), np.linspace(0.0, 5.0, 11))
        gamma = model.derived.gamma_lead
        for state in trajectory.states:
            left = model.derivatives(LEFT, state, 1)
            right = model.derivatives(RIGHT, state, 1)
            total = left[1] / gamma[LEFT] + left[0] + right[1] / gamma[RIGHT] + right[0]
            self.assertLess(abs(total), 1e-9)

    def test_steady_current_is_the_internal_current(self):
        config = reference_config(g_off=0.0)
        model = TransportModel(config)
        rho = steady_state(model.lindbladian)
        current = model.moment((LEFT,), 0, rho)
        self.assertGreater(abs(current), 1e-3)
        self.assertAlmostEqual(2.0 * config.g_res * rho.alpha.imag, -current, places=9)
        self.assertAlmostEqual(model.moment((RIGHT,), 0, rho), -current, places=9)

    def test_uncoupled_lead_is_refused(self):
        config = SystemConfig(n_qubits=2, eps=(1.0, 1.0), baths=(explicit_bath(0, 0.2, 0.3),))
        with self.assertRaises(ConfigurationError):
            TransportModel(config).moment((RIGHT,), 0, DensityOperator.ground())

    def test_currents_and_activities_over_random_configs(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            model = TransportModel(random_config(rng, drive=rng.random() < 0.3))
            derived = model.derived
            for _ in range(100):
                rho = random_density_matrix(rng)
                for lead in (LEFT, RIGHT):
                    occupation = np.trace(number_operator(lead, 2) @ rho.matrix).real
                    plus, minus = derived.gamma_plus[lead], derived.gamma_minus[lead]
                    self.assertAlmostEqual(
                        model.moment((lead,), 0, rho), plus - derived.gamma_lead[lead] * occupation, places=12
                    )
                    self.assertAlmostEqual(
                        model.activity(lead, rho), plus * (1.0 - occupation) + minus * occupation, places=12
                    )

    def test_currents_do_not_see_coherences(self):
        rng = np.random.default_rng(32)
        for case in ("general", "degenerate", "resonant", "resonant_degenerate"):
            for _ in range(5):
                model = TransportModel(random_config(rng, case=case))
                for _ in range(20):
                    rho = random_density_matrix(rng)
                    blind = zero_coherences(rho)
                    for lead in (LEFT, RIGHT):
                        self.assertAlmostEqual(
                            model.moment((lead,), 0, rho), model.moment((lead,), 0, blind), places=12
                        )
                    self.assertAlmostEqual(
                        model.cross_correlation(rho), model.cross_correlation(blind), places=12
                    )


class CorrelationTests(SimpleTestCase):
    def setUp(self):
        self.config = reference_config()
        self.model = TransportModel(self.config)

    def test_product_states_are_uncorrelated(self):
        for state in (DensityOperator.ground(), DensityOperator.maximally_mixed()):
            self.assertAlmostEqual(self.model.cross_correlation(state), 0.0, places=14)

    def test_entangled_state_is_correlated(self):
        value = cross_correlation(DensityOperator.bell("psi_plus"), self.model.lindbladian, self.config)
        self.assertGreater(abs(value), 1e-3)

    def test_auto_correlation_has_a_delta_term(self):
        ground = DensityOperator.ground()
        result = self.model.auto_correlation(LEFT, ground)
        self.assertTrue(result.is_singular)
        self.assertAlmostEqual(result.delta_coefficient, 0.6)

    def test_two_time_correlation_is_symmetric_in_its_arguments(self):
        path = self.model.propagator.path(DensityOperator.bell("phi_plus"))
        forward = self.model.two_time_correlation(LEFT, 0.5, RIGHT, 1.5, path)
        backward = self.model.two_time_correlation(RIGHT, 1.5, LEFT, 0.5, path)
        self.assertAlmostEqual(forward.regular, backward.regular, places=12)
        self.assertFalse(forward.is_singular)

    def test_two_time_correlation_decays(self):
        path = self.model.propagator.path(DensityOperator.bell("phi_plus"))
        result = self.model.two_time_correlation(LEFT, 0.0, RIGHT, 80.0, path)
        self.assertAlmostEqual(result.regular, 0.0, places=9)

    def test_equal_time_correlation_matches_cross_correlation(self):
        path = self.model.propagator.path(DensityOperator.bell("psi_minus"))
        result = self.model.two_time_correlation(LEFT, 1.0, RIGHT, 1.0, path)
        self.assertAlmostEqual(result.regular, self.model.cross_correlation(path(1.0)), places=12)

    def test_two_time_correlation_ignores_alpha_and_beta(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            model = TransportModel(random_config(rng))
            path = model.propagator.path(random_density_matrix(rng))

            def blind(t, path=path):
                return zero_coherences(path(t), ("alpha", "beta"))

            for first, second in ((LEFT, RIGHT), (RIGHT, LEFT), (LEFT, LEFT)):
                full = model.two_time_correlation(first, 0.4, second, 1.3, path)
                reduced = model.two_time_correlation(first, 0.4, second, 1.3, blind)
                self.assertAlmostEqual(full.regular, reduced.regular, places=12)


class RecordTests(SimpleTestCase):
    def setUp(self):
        model = TransportModel(reference_config())
        trajectory = model.propagator.evolve_many(DensityOperator.ground(), np.linspace(0.0, 2.0, 5))
        self.record = transport_record(trajectory, model, k_max=2)

    def test_record_columns(self):
        self.assertEqual(len(self.record), 5)
        self.assertTrue(self.record.available("d2I_R"))
        self.assertFalse(self.record.available("d3I_L"))
        snapshot = self.record.snapshot(0, k_max=3)
        self.assertEqual(snapshot.order(LEFT), 2)
        with self.assertRaises(ConfigurationError):
            snapshot.current(LEFT, 3)

    def test_require_names_missing_columns(self):
        with self.assertRaises(ConfigurationError) as raised:
            self.record.require(("I_L", "d3I_L", "d3I_R"))
        self.assertEqual(raised.exception.details["missing"], ["d3I_L", "d3I_R"])

    def test_csv_keeps_values_and_blanks(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "transport.csv"
            self.record.to_csv(path)
            header = path.read_text().splitlines()[0]
            self.assertEqual(header, ",".join(RECORD_COLUMNS))
            loaded = TransportRecord.from_csv(path)
        self.assertTrue(np.array_equal(loaded.column("I_L"), self.record.column("I_L")))
        self.assertFalse(loaded.available("d3I_R"))

    def test_csv_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.csv"
            path.write_text("time,I_L,bogus\n0,1,2\n")
            with self.assertRaises(ConfigurationError):
                TransportRecord.from_csv(path)
            path.write_text("time,I_L\n0,abc\n")
            with self.assertRaises(ConfigurationError):
                TransportRecord.from_csv(path)
            path.write_text("I_L\n0.1\n")
            with self.assertRaises(ConfigurationError):
                TransportRecord.from_csv(path)

    def test_derivative_columns_differentiate_the_currents(self):
        rng = np.random.default_rng(34)
        times = np.linspace(0.0, 4.0, 2001)
        for _ in range(3):
            model = TransportModel(random_config(rng))
            trajectory = model.propagator.evolve_many(random_density_matrix(rng), times)
            record = transport_record(trajectory, model, k_max=2)
            for lead in (LEFT, RIGHT):
                for k in (0, 1):
                    slope = np.gradient(record.column(derivative_column(lead, k)), times)
                    following = record.column(derivative_column(lead, k + 1))
                    self.assertLess(np.max(np.abs(slope[1:-1] - following[1:-1])), 1e-4, (lead, k))
