"""
Validated density operators.
"""

import math
from dataclasses import dataclass

import numpy as np

from qubits.exceptions import StateValidationError
from qubits.operators import COHERENCES, ELEMENT_INDICES, X_SHAPE_COHERENCES

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10

BELL_KETS = {
    "phi_plus": np.array([1, 0, 0, 1]) / math.sqrt(2),
    "phi_minus": np.array([1, 0, 0, -1]) / math.sqrt(2),
    "psi_plus": np.array([0, 1, 1, 0]) / math.sqrt(2),
    "psi_minus": np.array([0, 1, -1, 0]) / math.sqrt(2),
}


def as_matrix(state):
    """Accept a DensityOperator or any square array."""
    if isinstance(state, DensityOperator):
        return state.matrix
    return np.asarray(state, dtype=complex)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix of side 2^N."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise StateValidationError(f"Density matrix must be square, got {matrix.shape}")
        d = matrix.shape[0]
        if d < 2 or d & (d - 1):
            raise StateValidationError(f"Density matrix side {d} is not a power of two")

        hermiticity = float(np.max(np.abs(matrix - matrix.conj().T)))
        if hermiticity > HERMITICITY_TOL:
            raise StateValidationError(
                "Density matrix is not Hermitian", {"deviation": hermiticity}
            )
        trace_error = abs(np.trace(matrix) - 1.0)
        if trace_error > TRACE_TOL:
            raise StateValidationError(
                "Density matrix trace differs from one", {"deviation": trace_error}
            )
        smallest = float(np.linalg.eigvalsh(matrix)[0])
        if smallest < -POSITIVITY_TOL:
            raise StateValidationError(
                "Density matrix has a negative eigenvalue", {"eigenvalue": smallest}
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    # ------------------------------------------------------------------
    # Factories
    # ------------------------------------------------------------------

    @classmethod
    def ground(cls, n_qubits=2):
        d = 2 ** n_qubits
        matrix = np.zeros((d, d), dtype=complex)
        matrix[0, 0] = 1.0
        return cls(matrix)

    @classmethod
    def maximally_mixed(cls, n_qubits=2):
        d = 2 ** n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def from_ket(cls, ket):
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def bell(cls, name):
        try:
            return cls.from_ket(BELL_KETS[name])
        except KeyError:
            raise StateValidationError(f"Unknown Bell state {name!r}") from None

    # ------------------------------------------------------------------
    # Accessors
    # ------------------------------------------------------------------

    @property
    def n_qubits(self):
        return self.matrix.shape[0].bit_length() - 1

    def element(self, name):
        i, j = ELEMENT_INDICES[name]
        return self.matrix[i, j]

    @property
    def r_00(self):
        return self.element("r_00").real

    @property
    def r_01(self):
        return self.element("r_01").real

    @property
    def r_10(self):
        return self.element("r_10").real

    @property
    def r_11(self):
        return self.element("r_11").real

    @property
    def alpha(self):
        return self.element("alpha")

    @property
    def beta(self):
        return self.element("beta")

    def is_x_shaped(self, tol=1e-9):
        return is_x_shaped(self.matrix, tol)

    def with_coherences_zeroed(self, names):
        return with_coherences_zeroed(self, names)


def is_x_shaped(state, tol=1e-9):
    """Only populations and the alpha/beta coherences are nonzero."""
    matrix = as_matrix(state)
    for name in COHERENCES:
        if name in X_SHAPE_COHERENCES:
            continue
        i, j = ELEMENT_INDICES[name]
        if abs(matrix[i, j]) > tol:
            return False
    return True


def zero_coherences(state, names=None):
    """
    Copy of the matrix with the named coherences (and their conjugates) set
    to zero. Returns a plain array: the result need not be positive.
    """
    matrix = np.array(as_matrix(state), dtype=complex)
    for name in names or COHERENCES:
        i, j = ELEMENT_INDICES[name]
        matrix[i, j] = 0.0
        matrix[j, i] = 0.0
    return matrix


def with_coherences_zeroed(state, names):
    """DensityOperator with the named coherences removed; raises when that is not a state."""
    return DensityOperator(zero_coherences(state, names))
