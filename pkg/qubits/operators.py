"""
Single-qubit operators, tensor embedding and row-major vectorization.

Conventions used across the project:
  - qubit 0 is the left factor of every Kronecker product (qubit L),
    qubit 1 the next one (qubit R)
  - computational basis |0>, |1> per qubit, so two-qubit ordering is
    |00>, |01>, |10>, |11>
  - vec(rho)[i * D + j] = rho[i, j], which makes vec(A rho B) = (A (x) B^T) vec(rho)
"""

import math
from functools import reduce
from itertools import combinations

import numpy as np

LEFT = 0
RIGHT = 1
LEAD_LABELS = {LEFT: "L", RIGHT: "R"}

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
NUMBER = np.diag([0.0, 1.0]).astype(complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# (row, column) of named two-qubit matrix elements
ELEMENT_INDICES = {
    "r_00": (0, 0),
    "r_01": (1, 1),
    "r_10": (2, 2),
    "r_11": (3, 3),
    "alpha": (1, 2),
    "beta": (0, 3),
    "v": (0, 1),
    "x": (0, 2),
    "y": (1, 3),
    "z": (2, 3),
}
POPULATIONS = ("r_00", "r_01", "r_10", "r_11")
COHERENCES = ("alpha", "beta", "v", "x", "y", "z")
X_SHAPE_COHERENCES = ("alpha", "beta")


def lead_index(lead):
    """Accept 0/1 or 'L'/'R' and return the qubit index."""
    if isinstance(lead, str):
        labels = {label: index for index, label in LEAD_LABELS.items()}
        try:
            return labels[lead.upper()]
        except KeyError:
            raise ValueError(f"Unknown lead label {lead!r}") from None
    return int(lead)


def lead_label(index):
    return LEAD_LABELS.get(index, str(index))


def dimension(n_qubits):
    return 2 ** n_qubits


def embed(op, qubit, n_qubits):
    """Place a single-qubit operator on `qubit` of an n-qubit register."""
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"Qubit index {qubit} outside register of {n_qubits}")
    factors = [IDENTITY_2] * n_qubits
    factors[qubit] = op
    return reduce(np.kron, factors)


def sigma_plus(qubit, n_qubits):
    return embed(SIGMA_PLUS, qubit, n_qubits)


def sigma_minus(qubit, n_qubits):
    return embed(SIGMA_MINUS, qubit, n_qubits)


def sigma_z(qubit, n_qubits):
    return embed(SIGMA_Z, qubit, n_qubits)


def number_operator(qubit, n_qubits):
    return embed(NUMBER, qubit, n_qubits)


def occupation_projector(qubits, n_qubits):
    """n_P = prod_{j in P} n_j. The empty product is the identity."""
    projector = np.eye(dimension(n_qubits), dtype=complex)
    for qubit in qubits:
        projector = projector @ number_operator(qubit, n_qubits)
    return projector


def nonempty_subsets(qubits):
    """All nonempty subsets in order of size, then lexicographic."""
    qubits = tuple(sorted(qubits))
    return [
        subset
        for size in range(1, len(qubits) + 1)
        for subset in combinations(qubits, size)
    ]


def subsets(qubits):
    return [()] + nonempty_subsets(qubits)


# ----------------------------------------------------------------------
# Vectorization
# ----------------------------------------------------------------------

def vectorize(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix.reshape(-1).copy()


def devectorize(vector):
    vector = np.asarray(vector, dtype=complex)
    d = math.isqrt(vector.size)
    if d * d != vector.size:
        raise ValueError(f"Vector of length {vector.size} is not a vectorized square matrix")
    return vector.reshape(d, d).copy()


def identity_vector(dim):
    return np.eye(dim, dtype=complex).reshape(-1)


def trace_of_vector(vector):
    """Tr[X] from vec(X) without reshaping."""
    d = math.isqrt(vector.size)
    return vector[:: d + 1].sum()


def hs_inner(a, b):
    """Hilbert-Schmidt inner product <a, b> = Tr[a^dagger b]."""
    return np.vdot(np.asarray(a), np.asarray(b))


def sandwich(left, right):
    """Superoperator matrix of rho -> left @ rho @ right."""
    return np.kron(left, right.T)


def spre(op):
    return sandwich(op, np.eye(op.shape[0], dtype=complex))


def spost(op):
    return sandwich(np.eye(op.shape[0], dtype=complex), op)


def commutator_superoperator(hamiltonian):
    """Matrix of rho -> -i [H, rho]."""
    return -1j * (spre(hamiltonian) - spost(hamiltonian))


def dissipator(op):
    """Matrix of D[A] rho = A rho A^dag - 1/2 {A^dag A, rho}."""
    product = op.conj().T @ op
    return sandwich(op, op.conj().T) - 0.5 * (spre(product) + spost(product))


# ----------------------------------------------------------------------
# Real parametrization of two-qubit Hermitian matrices
# ----------------------------------------------------------------------

# populations, then the (alpha, beta), (x, y) and (v, z) coherence pairs,
# each coherence as (Im, Re)
REAL_COORDINATES = (
    "r_00", "r_01", "r_10", "r_11",
    "im_alpha", "re_alpha", "im_beta", "re_beta",
    "im_x", "re_x", "im_y", "re_y",
    "im_v", "re_v", "im_z", "re_z",
)
REAL_BLOCKS = {
    "populations": slice(0, 4),
    "alpha_beta": slice(4, 8),
    "x_y": slice(8, 12),
    "v_z": slice(12, 16),
}


def real_coordinate_transform():
    """
    Return (T, T_inv) with real_coordinates = T @ vec(rho) for Hermitian rho
    and vec(rho) = T_inv @ real_coordinates. Both are built entrywise so that
    structural zeros stay exact.
    """
    forward = np.zeros((16, 16), dtype=complex)
    inverse = np.zeros((16, 16), dtype=complex)
    for row, name in enumerate(REAL_COORDINATES):
        if name in POPULATIONS:
            i, _ = ELEMENT_INDICES[name]
            forward[row, 5 * i] = 1.0
            inverse[5 * i, row] = 1.0
            continue
        part, element = name.split("_", 1)
        i, j = ELEMENT_INDICES[element]
        upper, lower = 4 * i + j, 4 * j + i
        if part == "re":
            forward[row, upper] = 0.5
            forward[row, lower] = 0.5
            inverse[upper, row] = 1.0
            inverse[lower, row] = 1.0
        else:
            forward[row, upper] = -0.5j
            forward[row, lower] = 0.5j
            inverse[upper, row] = 1j
            inverse[lower, row] = -1j
    return forward, inverse


def direction_operator(name):
    """
    Hermitian operator A with Tr[A rho] equal to the named real coordinate.
    """
    operator = np.zeros((4, 4), dtype=complex)
    if name in POPULATIONS:
        i, _ = ELEMENT_INDICES[name]
        operator[i, i] = 1.0
        return operator
    part, element = name.split("_", 1)
    i, j = ELEMENT_INDICES[element]
    if part == "re":
        operator[j, i] = 0.5
        operator[i, j] = 0.5
    else:
        operator[j, i] = -0.5j
        operator[i, j] = 0.5j
    return operator
