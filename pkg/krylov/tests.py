import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from krylov.arnoldi import (
    arnoldi,
    assemble_observable_space,
    krylov_matrix_rank,
    observable_space,
    occupation_seeds,
    orthonormal_span,
)
from krylov.spectral import degeneracy_clusters, spectral_analysis
from lindblad.superoperators import adjoint, build_lindbladian
from qubits.exceptions import ConfigurationError
from qubits.operators import POPULATIONS, direction_operator, vectorize
from qubits.schemas import SystemConfig
from qubits.testing import explicit_bath, random_config, reference_config

CASES = ("general", "degenerate", "resonant", "resonant_degenerate")


def heisenberg(config):
    return adjoint(build_lindbladian(config))


class ArnoldiTests(SimpleTestCase):
    def test_single_qubit_space_is_occupation_and_identity(self):
        config = SystemConfig(n_qubits=1, eps=(1.0,), baths=(explicit_bath(0, 0.3, 0.5),))
        generator = heisenberg(config)
        seed = occupation_seeds(config)["n_L"]
        basis = arnoldi(generator, seed, label="n_L")
        self.assertEqual(basis.dimension, 2)
        self.assertEqual(krylov_matrix_rank(generator, seed), 2)

    def test_basis_is_orthonormal_and_invariant(self):
        config = reference_config()
        generator = heisenberg(config)
        basis = arnoldi(generator, occupation_seeds(config)["n_L"], label="n_L")
        q = basis.vectors.T
        self.assertTrue(np.allclose(q.conj().T @ q, np.eye(basis.dimension), atol=1e-10))
        self.assertLess(np.linalg.norm(generator.matrix @ q - q @ basis.hessenberg), 1e-8)

    def test_zero_seed_is_refused(self):
        generator = heisenberg(reference_config())
        with self.assertRaises(ConfigurationError):
            arnoldi(generator, np.zeros((4, 4)))

    def test_orthonormal_span_drops_dependent_rows(self):
        rows = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
        self.assertEqual(orthonormal_span(rows).shape[0], 2)

    def test_closure_residual_is_below_the_stopping_threshold(self):
        rng = np.random.default_rng(41)
        tol = settings.TOMOGRAPHY["ARNOLDI_TOL"]
        for _ in range(10):
            config = random_config(rng, case=CASES[rng.integers(4)])
            generator = heisenberg(config)
            for label, seed in occupation_seeds(config).items():
                basis = arnoldi(generator, seed, label=label)
                q = basis.vectors.T
                last = np.linalg.norm(generator.matrix @ q[:, -1])
                self.assertLessEqual(basis.closure_residual, tol * max(1.0, last), label)
                self.assertEqual(len(basis.residual_norms), basis.dimension)
                self.assertLess(np.linalg.norm(generator.matrix @ q - q @ basis.hessenberg), 1e-8, label)


class ObservableSpaceTests(SimpleTestCase):
    def test_generic_system_reaches_populations_and_x_block(self):
        config = reference_config()
        _, space = observable_space(config, heisenberg(config))
        self.assertEqual(space.dimension, 8)
        for name in POPULATIONS + ("re_alpha", "im_alpha", "re_beta", "im_beta"):
            self.assertTrue(space.contains(direction_operator(name)), name)
        self.assertFalse(space.contains(direction_operator("re_x")))
        self.assertEqual(space.seeds, ("n_L", "n_R", "n_LR"))

    def test_degenerate_energies_hide_real_coherences(self):
        config = reference_config(eps=(0.8, 0.8), u_int=-1.6)
        _, space = observable_space(config, heisenberg(config))
        self.assertEqual(space.dimension, 6)
        self.assertFalse(space.contains(direction_operator("re_alpha")))
        self.assertFalse(space.contains(direction_operator("re_beta")))
        self.assertTrue(space.contains(direction_operator("im_alpha")))

    def test_drives_make_the_space_complete(self):
        config = reference_config(drive=(0.2, 0.1))
        _, space = observable_space(config, heisenberg(config))
        self.assertEqual(space.dimension, 16)

    def test_no_bath_means_no_space(self):
        config = SystemConfig(n_qubits=2, eps=(1.0, 0.5), g_res=0.2)
        with self.assertRaises(ConfigurationError):
            observable_space(config, heisenberg(config))

    def test_budgets_cover_each_basis(self):
        config = reference_config()
        bases, space = observable_space(config, heisenberg(config))
        for basis in bases:
            self.assertLessEqual(space.budgets[basis.label], basis.dimension)
        self.assertEqual(sum(space.added.values()), space.dimension)

    def test_low_powers_span_the_space(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            config = random_config(rng)
            generator = heisenberg(config)
            _, space = observable_space(config, generator)
            seeds = occupation_seeds(config)
            rows = [vectorize(seeds["n_LR"])]
            for label in ("n_L", "n_R"):
                vector = vectorize(seeds[label])
                for _ in range(4):
                    rows.append(vector / np.linalg.norm(vector))
                    vector = generator.matrix @ vector
            span = orthonormal_span(np.array(rows))
            self.assertEqual(span.shape[0], space.dimension)
            projector = span.T @ span.conj()
            self.assertLess(np.max(np.abs(projector - space.projector())), 1e-8)

    def test_seed_order_does_not_change_the_space(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            config = random_config(rng, case=CASES[rng.integers(4)])
            bases, space = observable_space(config, heisenberg(config))
            for order in ((2, 1, 0), (1, 2, 0)):
                shuffled = assemble_observable_space([bases[i] for i in order])
                self.assertEqual(shuffled.dimension, space.dimension)
                self.assertLess(np.max(np.abs(shuffled.projector() - space.projector())), 1e-8)
                self.assertEqual(sum(shuffled.added.values()), space.dimension)


class SpectralTests(SimpleTestCase):
    def test_spectral_dimension_matches_krylov(self):
        config = reference_config()
        report = spectral_analysis(build_lindbladian(config), config=config)
        self.assertFalse(report.near_defective)
        self.assertTrue(report.conjugate_pairs)
        self.assertLess(report.biorthogonality_residual, 1e-8)
        self.assertEqual(report.observable_dimension, 8)
        self.assertEqual(set(report.seeds), {"n_L", "n_R", "n_LR"})

    def test_degeneracy_clusters(self):
        clusters = degeneracy_clusters(np.array([0.0, 1e-12, 1.0, 2.0]), 1e-9)
        self.assertEqual(clusters, ((0, 1), (2,), (3,)))

    def test_eigen_overlaps_count_the_krylov_dimension(self):
        rng = np.random.default_rng(44)
        checked = 0
        for _ in range(10):
            config = random_config(rng)
            lindbladian = build_lindbladian(config)
            report = spectral_analysis(lindbladian, config=config)
            if report.degenerate or report.near_defective:
                continue
            checked += 1
            generator = adjoint(lindbladian)
            for label, seed in occupation_seeds(config).items():
                dimension = arnoldi(generator, seed, label=label).dimension
                self.assertEqual(report.seeds[label].reachable_count, dimension, label)
                self.assertEqual(report.seeds[label].reduced_count, dimension, label)
                self.assertEqual(len(report.seeds[label].overlaps), 16)
        self.assertGreater(checked, 0)

    def test_identical_decoupled_qubits_form_clusters(self):
        config = SystemConfig(
            n_qubits=2,
            eps=(0.9, 0.9),
            baths=(explicit_bath(0, 0.4, 0.6), explicit_bath(1, 0.4, 0.6)),
            gamma_z=(0.1, 0.1),
        )
        lindbladian = build_lindbladian(config)
        report = spectral_analysis(lindbladian, config=config)
        self.assertTrue(report.degenerate)
        self.assertFalse(report.near_defective)
        # the occupation modes of both qubits decay at Gamma = 1
        decay = [i for i, value in enumerate(report.eigenvalues) if abs(value + 1.0) < 1e-9]
        self.assertEqual(len(decay), 2)
        self.assertIn(tuple(decay), report.clusters)
        generator = adjoint(lindbladian)
        for label, expected in (("n_L", 2), ("n_R", 2), ("n_LR", 3)):
            basis = arnoldi(generator, occupation_seeds(config)[label], label=label)
            self.assertEqual(basis.dimension, expected, label)
            self.assertEqual(report.seeds[label].reduced_count, expected, label)
