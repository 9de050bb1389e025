"""
Krylov spaces of the Heisenberg generator seeded by occupation projectors.

K_P = span{ n_P, L^dag n_P, (L^dag)^2 n_P, ... } is built with Arnoldi
(modified Gram-Schmidt plus one reorthogonalization pass). The sum of the
K_P over all seeds is the observable space: the operators whose
expectation values transport measurements can reach.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from qubits.exceptions import ConfigurationError
from qubits.operators import lead_label, nonempty_subsets, occupation_projector, vectorize

logger = logging.getLogger(__name__)

RANK_TOL = 1e-8


@dataclass(frozen=True)
class KrylovBasis:
    """
    vectors: (K, d) rows, orthonormal in the HS inner product.
    hessenberg: (K, K) with L^dag Q = Q H for Q = vectors.T.
    """

    label: str
    vectors: np.ndarray
    hessenberg: np.ndarray
    residual_norms: tuple

    @property
    def dimension(self):
        return self.vectors.shape[0]

    @property
    def closure_residual(self):
        """Norm of the direction Arnoldi dropped when the space closed."""
        return self.residual_norms[-1]

    def projector(self):
        return self.vectors.T @ self.vectors.conj()


def arnoldi(adjoint, seed, tol=None, label="seed", max_dim=None):
    """
    Orthonormal basis of the Krylov space of `adjoint` from `seed`.

    Stops once the new direction's norm falls below tol * max(1, ||L^dag v||).
    """
    tol = tol if tol is not None else settings.TOMOGRAPHY["ARNOLDI_TOL"]
    matrix = adjoint.matrix
    d = matrix.shape[0]
    max_dim = min(max_dim or d, d)

    start = np.asarray(seed, dtype=complex)
    start = vectorize(start) if start.ndim == 2 else start.copy()
    norm = np.linalg.norm(start)
    if norm == 0:
        raise ConfigurationError(f"Krylov seed {label} is the zero operator")

    vectors = [start / norm]
    hessenberg = np.zeros((max_dim + 1, max_dim), dtype=complex)
    residuals = []
    while True:
        k = len(vectors)
        basis = np.array(vectors)
        image = matrix @ vectors[-1]
        scale = np.linalg.norm(image)
        coefficients = basis.conj() @ image
        remainder = image - coefficients @ basis
        correction = basis.conj() @ remainder
        remainder -= correction @ basis
        hessenberg[:k, k - 1] = coefficients + correction
        residual = float(np.linalg.norm(remainder))
        residuals.append(residual)
        if residual <= tol * max(1.0, scale) or k == max_dim:
            break
        hessenberg[k, k - 1] = residual
        vectors.append(remainder / residual)

    k = len(vectors)
    logger.debug("Arnoldi on %s stopped at dimension %d (residual %.2e)", label, k, residuals[-1])
    vectors = np.array(vectors)
    vectors.setflags(write=False)
    return KrylovBasis(
        label=label,
        vectors=vectors,
        hessenberg=hessenberg[:k, :k].copy(),
        residual_norms=tuple(residuals),
    )


def seed_label(subset):
    return "n_" + "".join(lead_label(q) for q in subset)


def occupation_seeds(config):
    """n_P for every nonempty subset P of bath-coupled qubits."""
    return {
        seed_label(subset): occupation_projector(subset, config.n_qubits)
        for subset in nonempty_subsets(config.lead_qubits)
    }


def orthonormal_span(rows, tol=RANK_TOL):
    """Orthonormal rows spanning the given rows (relative SVD cutoff)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=complex))
    if rows.size == 0:
        return rows
    u, s, _ = np.linalg.svd(rows.T, full_matrices=False)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return u[:, :rank].T


@dataclass(frozen=True)
class ObservableSpace:
    basis: np.ndarray
    seeds: tuple
    budgets: dict
    added: dict

    @property
    def dimension(self):
        return self.basis.shape[0]

    def projector(self):
        return self.basis.T @ self.basis.conj()

    def residual(self, operator):
        """Relative distance of an operator from the space."""
        vector = np.asarray(operator, dtype=complex)
        vector = vectorize(vector) if vector.ndim == 2 else vector
        norm = np.linalg.norm(vector)
        if norm == 0:
            return 0.0
        projected = self.basis.T @ (self.basis.conj() @ vector)
        return float(np.linalg.norm(vector - projected) / norm)

    def contains(self, operator, tol=1e-6):
        return self.residual(operator) < tol


def assemble_observable_space(bases):
    """
    Sum of Krylov spaces. budgets[label] is the shortest prefix of each
    basis that, on top of the earlier seeds, spans as much as the whole
    basis; added[label] is the number of new directions that seed brings.
    """
    if not bases:
        raise ConfigurationError("Observable space needs at least one seed; no qubit has a bath")
    collected = np.zeros((0, bases[0].vectors.shape[1]), dtype=complex)
    budgets, added = {}, {}
    for basis in bases:
        before = orthonormal_span(collected).shape[0] if collected.size else 0
        full = orthonormal_span(np.vstack([collected, basis.vectors])).shape[0]
        budget = 0
        for prefix in range(basis.dimension + 1):
            rank = orthonormal_span(np.vstack([collected, basis.vectors[:prefix]])).shape[0] \
                if (collected.size or prefix) else 0
            if rank == full:
                budget = prefix
                break
        budgets[basis.label] = budget
        added[basis.label] = full - before
        collected = np.vstack([collected, basis.vectors])

    space = orthonormal_span(collected)
    logger.info("Observable space dimension %d from %d seeds", space.shape[0], len(bases))
    return ObservableSpace(
        basis=space,
        seeds=tuple(basis.label for basis in bases),
        budgets=budgets,
        added=added,
    )


def observable_space(config, adjoint):
    bases = [
        arnoldi(adjoint, seed, label=label)
        for label, seed in occupation_seeds(config).items()
    ]
    return bases, assemble_observable_space(bases)


def krylov_matrix_rank(adjoint, seed, tol=RANK_TOL):
    """
    Rank of [n, L^dag n, ..., (L^dag)^(d-1) n] from normalized columns,
    an Arnoldi-free cross-check of the Krylov dimension.
    """
    vector = np.asarray(seed, dtype=complex)
    vector = vectorize(vector) if vector.ndim == 2 else vector
    columns = []
    for _ in range(vector.size):
        norm = np.linalg.norm(vector)
        if norm == 0:
            break
        vector = vector / norm
        columns.append(vector)
        vector = adjoint.matrix @ vector
    return orthonormal_span(np.array(columns), tol).shape[0] if columns else 0
