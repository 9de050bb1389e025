import numpy as np
from django.test import SimpleTestCase
from scipy import linalg

from lindblad.propagation import PropagationMethod, Propagator, steady_state
from lindblad.superoperators import (
    SuperoperatorTag,
    adjoint,
    block_view,
    build_lindbladian,
    dissipator_superoperator,
    jump_superoperator,
)
from qubits.exceptions import ConfigurationError, DegenerateSteadyStateError, PropagationError
from qubits.operators import (
    REAL_BLOCKS,
    devectorize,
    hs_inner,
    number_operator,
    trace_of_vector,
    vectorize,
)
from qubits.schemas import SystemConfig
from qubits.states import DensityOperator
from qubits.testing import (
    explicit_bath,
    random_config,
    random_density_matrix,
    random_hermitian,
    reference_config,
)


class LindbladianTests(SimpleTestCase):
    def setUp(self):
        self.config = reference_config()
        self.lindbladian = build_lindbladian(self.config)

    def test_trace_is_conserved(self):
        self.assertLess(np.max(np.abs(self.lindbladian.trace_functional())), 1e-12)

    def test_adjoint_is_conjugate_transpose(self):
        heisenberg = adjoint(self.lindbladian)
        self.assertEqual(heisenberg.tag, SuperoperatorTag.LINDBLADIAN_ADJOINT)
        rho = random_density_matrix(np.random.default_rng(0)).matrix
        observable = number_operator(0, 2)
        forward = np.trace(observable @ self.lindbladian.apply(rho))
        backward = np.trace(heisenberg.apply(observable) @ rho)
        self.assertAlmostEqual(forward, backward, places=12)
        self.assertEqual(adjoint(heisenberg).tag, SuperoperatorTag.LINDBLADIAN)

    def test_adjoint_of_a_jump_is_refused(self):
        with self.assertRaises(ConfigurationError):
            adjoint(jump_superoperator(0, +1, self.config))

    def test_jumps_need_a_bath(self):
        config = SystemConfig(n_qubits=2, eps=(1.0, 1.0), g_res=0.2, baths=())
        with self.assertRaises(ConfigurationError):
            jump_superoperator(1, -1, config)
        with self.assertRaises(ConfigurationError):
            dissipator_superoperator(0, config)

    def test_block_view_keeps_populations_and_x_block_closed(self):
        real = block_view(self.lindbladian)
        inner = slice(0, 8)
        outer = slice(8, 16)
        self.assertLess(np.max(np.abs(real[inner, outer])), 1e-12)
        self.assertLess(np.max(np.abs(real[outer, inner])), 1e-12)
        self.assertEqual(REAL_BLOCKS["alpha_beta"], slice(4, 8))

    def test_drive_couples_the_blocks(self):
        real = block_view(build_lindbladian(reference_config(drive=(0.2, 0.1))))
        self.assertGreater(np.max(np.abs(real[0:8, 8:16])), 1e-3)

    def test_adjoint_pairing_for_random_operators(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            lindbladian = build_lindbladian(random_config(rng, drive=rng.random() < 0.3))
            heisenberg = adjoint(lindbladian)
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            b = random_hermitian(rng)
            self.assertAlmostEqual(
                hs_inner(heisenberg.apply(a), b), hs_inner(a, lindbladian.apply(b)), places=11
            )

    def test_random_generators_preserve_trace_and_hermiticity(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            lindbladian = build_lindbladian(random_config(rng, drive=rng.random() < 0.3))
            self.assertLess(np.max(np.abs(lindbladian.trace_functional())), 1e-12)
            image = lindbladian.apply(random_hermitian(rng))
            self.assertLess(np.max(np.abs(image - image.conj().T)), 1e-12)

    def test_rate_only_population_block(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            gp_l, gm_l, gp_r, gm_r = rng.uniform(0.1, 1.0, 4)
            config = SystemConfig(
                n_qubits=2,
                eps=(0.0, 0.0),
                baths=(explicit_bath(0, gp_l, gm_l), explicit_bath(1, gp_r, gm_r)),
            )
            # rows and columns r_00, r_01, r_10, r_11; qubit L is the leading factor
            expected = np.array([
                [-(gp_l + gp_r), gm_r, gm_l, 0.0],
                [gp_r, -(gm_r + gp_l), 0.0, gm_l],
                [gp_l, 0.0, -(gm_l + gp_r), gm_r],
                [0.0, gp_l, gp_r, -(gm_l + gm_r)],
            ])
            real = block_view(build_lindbladian(config))
            self.assertLess(np.max(np.abs(real[0:4, 0:4] - expected)), 1e-14)
            self.assertLess(np.max(np.abs(real[0:4, 4:16])), 1e-14)

    def test_structural_zeros_of_the_inner_block(self):
        rng = np.random.default_rng(24)
        im_alpha, re_alpha, im_beta, re_beta = 4, 5, 6, 7
        for case in ("general", "degenerate", "resonant", "resonant_degenerate"):
            for _ in range(5):
                real = block_view(build_lindbladian(random_config(rng, case=case)))
                self.assertLess(np.max(np.abs(real[0:8, 8:16])), 1e-14)
                self.assertLess(np.max(np.abs(real[8:16, 0:8])), 1e-14)
                # populations follow only the imaginary parts
                self.assertLess(np.max(np.abs(real[0:4, [re_alpha, re_beta]])), 1e-14)
                self.assertLess(np.max(np.abs(real[[im_alpha, re_alpha]][:, [im_beta, re_beta]])), 1e-14)
                self.assertLess(np.max(np.abs(real[[im_beta, re_beta]][:, [im_alpha, re_alpha]])), 1e-14)


class PropagationTests(SimpleTestCase):
    def setUp(self):
        self.lindbladian = build_lindbladian(reference_config())
        self.initial = DensityOperator.bell("psi_plus")
        self.times = np.linspace(0.0, 4.0, 9)

    def test_methods_agree(self):
        reference = Propagator(self.lindbladian).evolve_many(self.initial, self.times).matrices()
        for method in (PropagationMethod.SCALING_SQUARING, PropagationMethod.ADAPTIVE_RK):
            other = Propagator(self.lindbladian, method=method).evolve_many(self.initial, self.times)
            self.assertLess(np.max(np.abs(other.matrices() - reference)), 1e-8, method)

    def test_semigroup_property(self):
        propagator = Propagator(self.lindbladian)
        direct = propagator.evolve(self.initial, 3.0).matrix
        stepped = propagator.evolve(propagator.evolve(self.initial, 1.0), 2.0).matrix
        self.assertLess(np.max(np.abs(direct - stepped)), 1e-10)

    def test_time_zero_returns_the_initial_state(self):
        state = Propagator(self.lindbladian).evolve(self.initial, 0.0)
        self.assertTrue(np.allclose(state.matrix, self.initial.matrix))

    def test_negative_time_is_refused(self):
        with self.assertRaises(PropagationError):
            Propagator(self.lindbladian).evolve(self.initial, -1.0)

    def test_ill_conditioned_eigenvectors_fall_back(self):
        with self.assertLogs("lindblad.propagation", level="WARNING"):
            propagator = Propagator(self.lindbladian, condition_limit=1.0)
        self.assertEqual(propagator.method, PropagationMethod.SCALING_SQUARING)

    def test_long_time_limit_is_the_steady_state(self):
        rho_ss = steady_state(self.lindbladian)
        late = Propagator(self.lindbladian).evolve(self.initial, 200.0)
        self.assertLess(np.max(np.abs(late.matrix - rho_ss.matrix)), 1e-9)
        self.assertLess(np.max(np.abs(self.lindbladian.matrix @ vectorize(rho_ss.matrix))), 1e-10)

    def test_uncoupled_register_has_no_unique_steady_state(self):
        config = SystemConfig(n_qubits=2, eps=(1.0, 0.5), baths=())
        with self.assertRaises(DegenerateSteadyStateError) as raised:
            steady_state(build_lindbladian(config))
        self.assertGreater(raised.exception.near_zero_count, 1)

    def test_single_qubit_relaxation(self):
        rng = np.random.default_rng(25)
        for _ in range(10):
            gp, gm = rng.uniform(0.1, 1.0, 2)
            config = SystemConfig(n_qubits=1, eps=(rng.uniform(0.4, 1.5),), baths=(explicit_bath(0, gp, gm),))
            initial = random_density_matrix(rng, n_qubits=1)
            times = np.linspace(0.0, 6.0, 13)
            trajectory = Propagator(build_lindbladian(config)).evolve_many(initial, times)
            n0 = initial.matrix[1, 1].real
            gamma = gp + gm
            expected = gp / gamma + (n0 - gp / gamma) * np.exp(-gamma * times)
            observed = trajectory.matrices()[:, 1, 1].real
            self.assertLess(np.max(np.abs(observed - expected)), 1e-12)

    def test_uncoupled_qubits_relax_independently(self):
        config = reference_config(g_res=0.0, g_off=0.0)
        initial = random_density_matrix(np.random.default_rng(26))
        times = np.linspace(0.0, 5.0, 11)
        trajectory = Propagator(build_lindbladian(config)).evolve_many(initial, times)
        plus, minus = config.rates()
        for qubit in (0, 1):
            observable = number_operator(qubit, 2)
            n0 = np.trace(observable @ initial.matrix).real
            gamma = plus[qubit] + minus[qubit]
            expected = plus[qubit] / gamma + (n0 - plus[qubit] / gamma) * np.exp(-gamma * times)
            observed = [np.trace(observable @ rho).real for rho in trajectory.matrices()]
            self.assertLess(np.max(np.abs(np.array(observed) - expected)), 1e-12)

    def test_propagation_keeps_trace_and_positivity(self):
        rng = np.random.default_rng(27)
        for _ in range(100):
            config = random_config(rng, case=("general", "degenerate", "resonant")[rng.integers(3)])
            propagator = Propagator(build_lindbladian(config))
            slowest = min(config.derived().gamma_lead)
            times = np.geomspace(1e-3, 50.0 / slowest, 30)
            vectors = propagator.propagate_many(vectorize(random_density_matrix(rng).matrix), times)
            for vector in vectors:
                self.assertLess(abs(trace_of_vector(vector) - 1.0), 1e-10)
                matrix = devectorize(vector)
                self.assertGreater(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T)).min(), -1e-10)

    def test_steady_state_is_the_null_vector(self):
        rng = np.random.default_rng(28)
        for _ in range(20):
            lindbladian = build_lindbladian(random_config(rng, drive=rng.random() < 0.3))
            rho_ss = steady_state(lindbladian)
            self.assertAlmostEqual(np.trace(rho_ss.matrix).real, 1.0, places=12)
            self.assertLess(np.max(np.abs(lindbladian.matrix @ vectorize(rho_ss.matrix))), 1e-10)
            null = linalg.null_space(lindbladian.matrix, rcond=1e-10)
            self.assertEqual(null.shape[1], 1)
            overlap = abs(np.vdot(null[:, 0], vectorize(rho_ss.matrix))) / np.linalg.norm(rho_ss.matrix)
            self.assertAlmostEqual(overlap, 1.0, places=9)
