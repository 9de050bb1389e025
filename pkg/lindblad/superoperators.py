"""
Dense superoperators on vectorized density matrices.

All matrices act on row-major vec(rho); see qubits.operators for the
convention.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from qubits.exceptions import ConfigurationError
from qubits.operators import (
    commutator_superoperator,
    devectorize,
    dissipator,
    identity_vector,
    real_coordinate_transform,
    sandwich,
    sigma_minus,
    sigma_plus,
    sigma_z,
    vectorize,
)
from qubits.states import as_matrix

logger = logging.getLogger(__name__)


class SuperoperatorTag(str, Enum):
    LINDBLADIAN = "lindbladian"
    LINDBLADIAN_ADJOINT = "lindbladian_adjoint"
    CURRENT = "current"
    ACTIVITY = "activity"
    DISSIPATOR = "dissipator"
    JUMP_PLUS = "jump_plus"
    JUMP_MINUS = "jump_minus"


_ADJOINT_TAGS = {
    SuperoperatorTag.LINDBLADIAN: SuperoperatorTag.LINDBLADIAN_ADJOINT,
    SuperoperatorTag.LINDBLADIAN_ADJOINT: SuperoperatorTag.LINDBLADIAN,
}


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    tag: SuperoperatorTag
    qubit: Optional[int] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, state):
        """Return the matrix of S(rho)."""
        return devectorize(self.matrix @ vectorize(as_matrix(state)))

    def power_apply(self, state, k):
        """Return the matrix of S^k(rho)."""
        vector = vectorize(as_matrix(state))
        for _ in range(k):
            vector = self.matrix @ vector
        return devectorize(vector)

    def trace_functional(self):
        """Row vector f with f . vec(rho) = Tr[S(rho)]."""
        side = math.isqrt(self.dim)
        return identity_vector(side) @ self.matrix


def build_lindbladian(config):
    """
    L = -i[H, .] + sum_j (gamma_j^+ D[sigma_j^+] + gamma_j^- D[sigma_j^-])
        + sum_j gamma_j^z / 2 D[sigma_j^z]
    """
    n = config.n_qubits
    matrix = commutator_superoperator(config.hamiltonian())

    plus, minus = config.rates()
    for qubit in config.lead_qubits:
        matrix += plus[qubit] * dissipator(sigma_plus(qubit, n))
        matrix += minus[qubit] * dissipator(sigma_minus(qubit, n))

    for qubit, rate in enumerate(config.dephasing_rates):
        if rate:
            matrix += 0.5 * rate * dissipator(sigma_z(qubit, n))

    logger.debug("Built Lindbladian of dimension %d for %d qubits", matrix.shape[0], n)
    return Superoperator(matrix, SuperoperatorTag.LINDBLADIAN)


def adjoint(superoperator):
    """Heisenberg-picture generator; the HS adjoint is the conjugate transpose."""
    try:
        tag = _ADJOINT_TAGS[superoperator.tag]
    except KeyError:
        raise ConfigurationError(
            f"adjoint is defined for Lindbladians, got {superoperator.tag.value}"
        ) from None
    return Superoperator(superoperator.matrix.conj().T, tag, superoperator.qubit)


def _require_lead(config, qubit):
    if config.bath_for(qubit) is None:
        raise ConfigurationError(f"Qubit {qubit} is not coupled to a bath")


def jump_superoperator(qubit, sign, config):
    """rho -> sigma^(+/-) rho sigma^(-/+) on a bath-coupled qubit (no rate)."""
    _require_lead(config, qubit)
    n = config.n_qubits
    up, down = sigma_plus(qubit, n), sigma_minus(qubit, n)
    if sign > 0:
        return Superoperator(sandwich(up, down), SuperoperatorTag.JUMP_PLUS, qubit)
    return Superoperator(sandwich(down, up), SuperoperatorTag.JUMP_MINUS, qubit)


def dissipator_superoperator(qubit, config):
    _require_lead(config, qubit)
    n = config.n_qubits
    plus, minus = config.rates()
    matrix = (
        plus[qubit] * dissipator(sigma_plus(qubit, n))
        + minus[qubit] * dissipator(sigma_minus(qubit, n))
    )
    return Superoperator(matrix, SuperoperatorTag.DISSIPATOR, qubit)


def block_view(superoperator):
    """
    Real 16x16 matrix of a two-qubit Hermiticity-preserving superoperator in
    the coordinates populations, (alpha, beta), (x, y), (v, z).
    """
    if superoperator.dim != 16:
        raise ConfigurationError("block_view needs a two-qubit superoperator")
    forward, inverse = real_coordinate_transform()
    real = forward @ superoperator.matrix @ inverse
    leakage = float(np.max(np.abs(real.imag)))
    if leakage > 1e-12:
        logger.warning("block_view: superoperator is not Hermiticity preserving (%.2e)", leakage)
    return real.real
