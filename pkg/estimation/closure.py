"""
Closure relations of the projection hierarchy.

On the Krylov space K_P the Heisenberg generator satisfies its own
characteristic polynomial, so sum_{k=0}^{K} c_k (L^dag)^k n_P = 0 with
c_K = -1, and therefore sum_k c_k p_{P,k}(t) = 0 for every state.
When the identity lies in K_P the constant term vanishes and the relation
drops one order: sum_{k=0}^{K-1} c_{k+1} p_{P,k}(t) = kappa.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from krylov.arnoldi import arnoldi
from lindblad.superoperators import adjoint
from qubits.exceptions import InternalConsistencyError
from qubits.operators import identity_vector, vectorize

logger = logging.getLogger(__name__)

ILL_CONDITIONED = 1e-6


@dataclass(frozen=True)
class ClosureResult:
    label: str
    coefficients: np.ndarray  # c_0 .. c_K with c_K = -1
    affine_coefficients: Optional[np.ndarray]  # c_1 .. c_K when c_0 ~ 0
    affine_constant: Optional[float]
    smallest_residual: float
    ill_conditioned: bool

    @property
    def order(self):
        return self.coefficients.size - 1

    def residual(self, projections):
        """sum_k c_k p_k for projections p_0 .. p_K."""
        return float(np.dot(self.coefficients, projections[: self.order + 1]))

    def affine_residual(self, projections):
        if self.affine_coefficients is None:
            return None
        k = self.affine_coefficients.size
        return float(np.dot(self.affine_coefficients, projections[:k]) - self.affine_constant)


def _real(values, what):
    values = np.asarray(values)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(values.imag)) > 1e-8 * scale:
        raise InternalConsistencyError(f"{what} are not real", {"imag": float(np.max(np.abs(values.imag)))})
    return values.real.copy()


def krylov_closure_coefficients(lindbladian, seed, label="seed"):
    heisenberg = adjoint(lindbladian)
    basis = arnoldi(heisenberg, seed, label=label)
    # np.poly: leading 1 then a_1 .. a_K of the characteristic polynomial
    poly = _real(np.poly(basis.hessenberg), "Closure coefficients")
    coefficients = -poly[::-1]

    affine, constant = None, None
    scale = float(np.max(np.abs(coefficients)))
    if abs(coefficients[0]) <= 1e-9 * scale:
        affine = coefficients[1:].copy()
        seed_vector = vectorize(np.asarray(seed, dtype=complex))
        combined = affine[-1] * seed_vector
        for c in affine[-2::-1]:
            combined = heisenberg.matrix @ combined + c * seed_vector
        identity = identity_vector(int(np.sqrt(seed_vector.size)))
        dimension = identity.size ** 0.5
        constant = float((np.vdot(identity, combined) / dimension).real)
        leftover = np.linalg.norm(combined - constant * identity)
        if leftover > 1e-7 * max(1.0, np.linalg.norm(combined)):
            logger.warning("Affine closure for %s leaves a residual %.2e", label, leftover)

    smallest = min(basis.residual_norms[:-1], default=float("inf"))
    ill = smallest < ILL_CONDITIONED
    if ill:
        logger.warning("Closure for %s is ill conditioned: Krylov residual %.2e", label, smallest)
    return ClosureResult(
        label=label,
        coefficients=coefficients,
        affine_coefficients=affine,
        affine_constant=constant,
        smallest_residual=smallest,
        ill_conditioned=ill,
    )
