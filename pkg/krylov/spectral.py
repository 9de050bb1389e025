"""
Spectral view of the observable space.

For a diagonalizable L with right eigenvectors rho_i and biorthonormal left
eigenvectors sigma_i, a seed expands as n_P = sum_i <rho_i, n_P> sigma_i.
Only eigen-directions with a nonzero overlap are reachable by transport;
eigenvalues closer than the degeneracy tolerance are grouped into clusters
and contribute one reduced direction each.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from krylov.arnoldi import occupation_seeds, orthonormal_span
from qubits.operators import vectorize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeedSpectrum:
    label: str
    overlaps: np.ndarray
    reachable_count: int
    reduced_count: int


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    eigenvector_condition: float
    vandermonde_condition: float
    near_defective: bool
    conjugate_pairs: bool
    biorthogonality_residual: float
    clusters: tuple
    seeds: dict = field(default_factory=dict)
    observable_dimension: int = 0

    @property
    def degenerate(self):
        return any(len(cluster) > 1 for cluster in self.clusters)


def degeneracy_clusters(eigenvalues, tol):
    """Group indices of eigenvalues linked by gaps below tol."""
    parent = list(range(len(eigenvalues)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(eigenvalues)):
        for j in range(i + 1, len(eigenvalues)):
            if abs(eigenvalues[i] - eigenvalues[j]) < tol:
                parent[find(i)] = find(j)

    groups = {}
    for i in range(len(eigenvalues)):
        groups.setdefault(find(i), []).append(i)
    return tuple(tuple(group) for group in sorted(groups.values()))


def _has_conjugate_pairs(eigenvalues, tol):
    remaining = list(eigenvalues)
    while remaining:
        value = remaining.pop()
        if abs(value.imag) <= tol:
            continue
        partner = int(np.argmin([abs(other - value.conjugate()) for other in remaining])) \
            if remaining else None
        if partner is None or abs(remaining[partner] - value.conjugate()) > tol:
            return False
        remaining.pop(partner)
    return True


def spectral_analysis(lindbladian, seeds=None, config=None):
    """
    seeds: mapping label -> operator; defaults to the occupation seeds of
    `config`.
    """
    tomography = settings.TOMOGRAPHY
    degeneracy_tol = tomography["DEGENERACY_TOL"]
    overlap_tol = tomography["OVERLAP_TOL"]
    if seeds is None:
        seeds = occupation_seeds(config) if config is not None else {}

    eigenvalues, right = np.linalg.eig(lindbladian.matrix)
    condition = float(np.linalg.cond(right))
    with np.errstate(over="ignore", invalid="ignore"):
        vandermonde = float(np.linalg.cond(np.vander(eigenvalues, increasing=True)))
    near_defective = condition > tomography["CONDITION_LIMIT"]
    clusters = degeneracy_clusters(eigenvalues, degeneracy_tol)
    pairs = _has_conjugate_pairs(eigenvalues, 1e-6 * max(1.0, float(np.max(np.abs(eigenvalues)))))

    if near_defective:
        logger.warning(
            "Eigenvector condition %.3e: spectrum is near defective, overlaps not analyzed",
            condition,
        )
        return SpectralReport(
            eigenvalues=eigenvalues,
            eigenvector_condition=condition,
            vandermonde_condition=vandermonde,
            near_defective=True,
            conjugate_pairs=pairs,
            biorthogonality_residual=float("nan"),
            clusters=clusters,
        )

    right_inverse = np.linalg.inv(right)
    left = right_inverse.conj().T
    biorthogonality = float(np.max(np.abs(left.conj().T @ right - np.eye(right.shape[0]))))

    spectra = {}
    directions = []
    for label, seed in seeds.items():
        vector = vectorize(seed)
        overlaps = right.conj().T @ vector
        reachable = int(np.sum(np.abs(overlaps) > overlap_tol))
        reduced = 0
        for cluster in clusters:
            index = list(cluster)
            # component of the seed in the left invariant subspace of this cluster
            component = (right[:, index] @ right_inverse[index, :]).conj().T @ vector
            if np.linalg.norm(component) > overlap_tol * max(1.0, np.linalg.norm(vector)):
                reduced += 1
                directions.append(component)
        spectra[label] = SeedSpectrum(label, overlaps, reachable, reduced)

    dimension = orthonormal_span(np.array(directions)).shape[0] if directions else 0
    return SpectralReport(
        eigenvalues=eigenvalues,
        eigenvector_condition=condition,
        vandermonde_condition=vandermonde,
        near_defective=False,
        conjugate_pairs=pairs,
        biorthogonality_residual=biorthogonality,
        clusters=clusters,
        seeds=spectra,
        observable_dimension=dimension,
    )
