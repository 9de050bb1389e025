import numpy as np
from django.test import SimpleTestCase
from pydantic import ValidationError

from qubits.exceptions import ConfigurationError, StateValidationError
from qubits.operators import (
    REAL_COORDINATES,
    direction_operator,
    dissipator,
    hs_inner,
    nonempty_subsets,
    real_coordinate_transform,
    sandwich,
    sigma_minus,
    sigma_plus,
    vectorize,
)
from qubits.rates import bath_rates, validity_check
from qubits.schemas import BathSpec, SystemConfig
from qubits.states import DensityOperator, is_x_shaped, with_coherences_zeroed, zero_coherences
from qubits.testing import random_density_matrix, reference_config


class OperatorTests(SimpleTestCase):
    def test_sigma_plus_raises_the_left_qubit(self):
        ground = np.zeros(4, dtype=complex)
        ground[0] = 1.0
        raised = sigma_plus(0, 2) @ ground
        self.assertAlmostEqual(abs(raised[2]), 1.0)
        self.assertTrue(np.allclose(sigma_minus(0, 2), sigma_plus(0, 2).conj().T))

    def test_sandwich_matches_row_major_vectorization(self):
        rng = np.random.default_rng(3)
        a, b, rho = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) for _ in range(3))
        self.assertTrue(np.allclose(sandwich(a, b) @ vectorize(rho), vectorize(a @ rho @ b)))

    def test_dissipator_preserves_trace(self):
        op = sigma_minus(1, 2)
        rho = random_density_matrix(np.random.default_rng(1)).matrix
        image = (dissipator(op) @ vectorize(rho)).reshape(4, 4)
        self.assertAlmostEqual(abs(np.trace(image)), 0.0, places=12)

    def test_subsets_are_ordered_by_size(self):
        self.assertEqual(nonempty_subsets((1, 0)), [(0,), (1,), (0, 1)])

    def test_real_coordinate_transform_inverts(self):
        forward, inverse = real_coordinate_transform()
        self.assertTrue(np.allclose(forward @ inverse, np.eye(16)))
        rho = random_density_matrix(np.random.default_rng(5)).matrix
        coordinates = forward @ vectorize(rho)
        self.assertLess(np.max(np.abs(coordinates.imag)), 1e-12)
        self.assertAlmostEqual(coordinates[REAL_COORDINATES.index("im_alpha")].real, rho[1, 2].imag)

    def test_direction_operators_read_coordinates(self):
        rho = random_density_matrix(np.random.default_rng(8)).matrix
        self.assertAlmostEqual(np.trace(direction_operator("re_beta") @ rho).real, rho[0, 3].real)
        self.assertAlmostEqual(np.trace(direction_operator("im_alpha") @ rho).real, rho[1, 2].imag)
        self.assertAlmostEqual(np.trace(direction_operator("r_10") @ rho).real, rho[2, 2].real)

    def test_hs_inner_is_the_trace_of_a_product(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            self.assertAlmostEqual(hs_inner(a, b), np.trace(a.conj().T @ b), places=12)
            self.assertAlmostEqual(hs_inner(a, b), np.vdot(vectorize(a), vectorize(b)), places=12)


class DensityOperatorTests(SimpleTestCase):
    def test_rejects_non_hermitian(self):
        matrix = np.diag([1.0, 0, 0, 0]).astype(complex)
        matrix[0, 1] = 0.1
        with self.assertRaises(StateValidationError):
            DensityOperator(matrix)

    def test_rejects_wrong_trace_and_negative_eigenvalue(self):
        with self.assertRaises(StateValidationError):
            DensityOperator(np.eye(4) / 2)
        with self.assertRaises(StateValidationError):
            DensityOperator(np.diag([1.2, -0.2, 0.0, 0.0]))

    def test_bell_states_are_x_shaped(self):
        for name in ("phi_plus", "phi_minus", "psi_plus", "psi_minus"):
            state = DensityOperator.bell(name)
            self.assertTrue(state.is_x_shaped())
        self.assertAlmostEqual(DensityOperator.bell("psi_plus").alpha.real, 0.5)
        self.assertAlmostEqual(DensityOperator.bell("phi_minus").beta.real, -0.5)

    def test_zeroing_coherences(self):
        rho = random_density_matrix(np.random.default_rng(2))
        self.assertFalse(is_x_shaped(rho))
        stripped = zero_coherences(rho, ("v", "x", "y", "z"))
        self.assertTrue(is_x_shaped(stripped))
        # the diagonal always survives, so a fully dephased state is valid
        self.assertTrue(np.allclose(with_coherences_zeroed(rho, None).matrix, np.diag(np.diag(rho.matrix))))

    def test_random_x_shaped_states(self):
        rho = random_density_matrix(np.random.default_rng(4), x_shaped=True)
        self.assertTrue(rho.is_x_shaped())


class ConfigTests(SimpleTestCase):
    def test_derived_quantities(self):
        derived = reference_config().derived()
        self.assertAlmostEqual(derived.gamma_total, 2.0)
        self.assertAlmostEqual(derived.gamma_dephasing, 0.15)
        self.assertAlmostEqual(derived.gamma_tilde, 2.3)
        self.assertAlmostEqual(derived.delta, 0.4)
        self.assertAlmostEqual(derived.doublon_energy, 1.9)
        self.assertAlmostEqual(derived.chi(0, 0.6), 0.0)

    def test_unknown_keys_and_bad_shapes_are_rejected(self):
        with self.assertRaises(ValidationError):
            SystemConfig(n_qubits=2, eps=(1.0, 1.0), colour="red")
        with self.assertRaises(ValidationError):
            SystemConfig(n_qubits=2, eps=(1.0,))
        with self.assertRaises(ValidationError):
            BathSpec(qubit=0, gamma_plus=0.1)

    def test_hamiltonian_is_hermitian(self):
        h = reference_config(drive=(0.1, 0.2)).hamiltonian()
        self.assertTrue(np.allclose(h, h.conj().T))
        self.assertAlmostEqual(h[1, 2].real, 0.35)
        self.assertAlmostEqual(h[0, 3].real, 0.25)


class RateTests(SimpleTestCase):
    def test_fermionic_rates_satisfy_detailed_balance(self):
        bath = BathSpec(qubit=0, gamma_bare=1.0, temperature=0.5, chem_potential=0.2)
        plus, minus = bath_rates(bath, 1.0)
        self.assertAlmostEqual(plus + minus, 1.0)
        self.assertAlmostEqual(plus / minus, np.exp(-0.8 / 0.5))

    def test_bosonic_rates(self):
        bath = BathSpec(qubit=0, statistics="bosonic", gamma_bare=1.0, temperature=1.0, chem_potential=0.0)
        plus, minus = bath_rates(bath, 1.0)
        self.assertAlmostEqual(minus - plus, 1.0)
        with self.assertRaises(ConfigurationError):
            bath_rates(bath, -0.5)

    def test_bosonic_occupation_of_one(self):
        bath = BathSpec(qubit=0, statistics="bosonic", gamma_bare=0.8, temperature=1.0, chem_potential=0.0)
        plus, minus = bath_rates(bath, np.log(2.0))
        self.assertAlmostEqual(plus, 0.8, places=12)
        self.assertAlmostEqual(minus, 1.6, places=12)

    def test_fermionic_rates_split_evenly_at_the_chemical_potential(self):
        bath = BathSpec(qubit=0, gamma_bare=0.6, temperature=0.3, chem_potential=0.9)
        plus, minus = bath_rates(bath, 0.9)
        self.assertAlmostEqual(plus, 0.3, places=14)
        self.assertAlmostEqual(minus, 0.3, places=14)

    def test_cold_baths_only_relax(self):
        for statistics in ("fermionic", "bosonic"):
            bath = BathSpec(
                qubit=0, statistics=statistics, gamma_bare=1.0, temperature=1e-3, chem_potential=0.5
            )
            plus, minus = bath_rates(bath, 1.0)
            self.assertLess(plus, 1e-100, statistics)
            self.assertAlmostEqual(minus, 1.0, places=12)
        cold = BathSpec(qubit=0, gamma_bare=1.0, temperature=1e-3, chem_potential=1.5)
        plus, minus = bath_rates(cold, 1.0)
        self.assertAlmostEqual(plus, 1.0, places=12)
        self.assertLess(minus, 1e-100)

    def test_rate_identities_hold_across_temperatures(self):
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            gamma = rng.uniform(0.01, 2.0)
            temperature = rng.uniform(0.05, 5.0)
            eps = rng.uniform(0.0, 3.0)
            mu = rng.uniform(-1.0, 3.0)
            plus, minus = bath_rates(
                BathSpec(qubit=0, gamma_bare=gamma, temperature=temperature, chem_potential=mu), eps
            )
            self.assertAlmostEqual(plus + minus, gamma, delta=1e-12 * gamma)
            self.assertAlmostEqual(
                plus, minus * np.exp(-(eps - mu) / temperature), delta=1e-12 * gamma
            )
            if eps > mu:
                plus, minus = bath_rates(
                    BathSpec(
                        qubit=0, statistics="bosonic", gamma_bare=gamma,
                        temperature=temperature, chem_potential=mu,
                    ),
                    eps,
                )
                self.assertAlmostEqual(minus - plus, gamma, delta=1e-9 * max(1.0, minus))

    def test_bosonic_divergence_is_named(self):
        bath = BathSpec(qubit=0, statistics="bosonic", gamma_bare=1.0, temperature=1.0, chem_potential=1.0)
        with self.assertRaises(ConfigurationError) as raised:
            bath_rates(bath, 1.0)
        self.assertIn("divergent bosonic occupation", str(raised.exception))
        self.assertEqual(raised.exception.details["qubit"], 0)

    def test_validity_check_warns_on_strong_coupling(self):
        config = SystemConfig(
            n_qubits=2,
            eps=(1.0, 1.0),
            g_res=0.3,
            baths=(
                BathSpec(qubit=0, gamma_bare=0.5, temperature=0.2, chem_potential=2.0),
                BathSpec(qubit=1, gamma_bare=0.5, temperature=0.2, chem_potential=0.0),
            ),
        )
        with self.assertLogs("qubits.rates", level="WARNING"):
            warnings = validity_check(config)
        self.assertTrue(any(message.startswith("weak coupling") for message in warnings))

    def test_validity_check_is_quiet_in_the_weak_regime(self):
        config = SystemConfig(
            n_qubits=2,
            eps=(1.0, 1.0),
            g_res=0.001,
            baths=(BathSpec(qubit=0, gamma_bare=0.001, temperature=1.0, chem_potential=0.0),),
        )
        self.assertEqual(validity_check(config), [])
