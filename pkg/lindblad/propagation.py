"""
Time evolution rho(t) = exp(L t) rho(0) and the steady state of L.

The default method diagonalizes L once and reuses the eigendecomposition
for every time; when the eigenvector matrix is too ill-conditioned the
propagator falls back to scipy's scaling-and-squaring expm.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from django.conf import settings
from scipy import linalg
from scipy.integrate import solve_ivp

from qubits.exceptions import DegenerateSteadyStateError, PropagationError
from qubits.operators import devectorize, trace_of_vector, vectorize
from qubits.states import DensityOperator, as_matrix

logger = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-9
STEADY_STATE_GAP = 1e-10


class PropagationMethod(str, Enum):
    EIGEN = "eigendecomposition"
    SCALING_SQUARING = "scaling_squaring"
    ADAPTIVE_RK = "adaptive_rk"


def _residual(vector):
    """Largest deviation from unit trace and Hermiticity."""
    matrix = devectorize(vector)
    trace_error = abs(trace_of_vector(vector) - 1.0)
    hermiticity = float(np.max(np.abs(matrix - matrix.conj().T)))
    return max(trace_error, hermiticity)


class Propagator:
    """exp(L t) for one Lindbladian, evaluated at arbitrary times."""

    def __init__(self, lindbladian, method=PropagationMethod.EIGEN, condition_limit=None,
                 rtol=1e-10, atol=1e-12):
        self.lindbladian = lindbladian
        self.matrix = lindbladian.matrix
        self.method = PropagationMethod(method)
        self.rtol = rtol
        self.atol = atol
        self.condition = None

        if self.method == PropagationMethod.EIGEN:
            limit = condition_limit or settings.TOMOGRAPHY["CONDITION_LIMIT"]
            eigenvalues, right = np.linalg.eig(self.matrix)
            self.condition = float(np.linalg.cond(right))
            if self.condition > limit:
                logger.warning(
                    "Eigenvector condition %.3e above %.1e, falling back to scaling and squaring",
                    self.condition, limit,
                )
                self.method = PropagationMethod.SCALING_SQUARING
            else:
                self.eigenvalues = eigenvalues
                self.right = right
                self.right_inverse = np.linalg.inv(right)

    # ------------------------------------------------------------------

    def propagate(self, vector, t):
        """exp(L t) applied to a vectorized operator, no checks."""
        if t < 0:
            raise PropagationError(f"Negative time {t} requested", residual=None)
        if t == 0:
            return np.array(vector, dtype=complex)
        if self.method == PropagationMethod.EIGEN:
            return self.right @ (np.exp(self.eigenvalues * t) * (self.right_inverse @ vector))
        if self.method == PropagationMethod.SCALING_SQUARING:
            return linalg.expm(self.matrix * t) @ vector
        return self._integrate(vector, [t])[:, -1]

    def propagate_many(self, vector, times):
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise PropagationError("Negative times requested", residual=None)
        if self.method == PropagationMethod.EIGEN:
            coefficients = self.right_inverse @ vector
            phases = np.exp(np.outer(times, self.eigenvalues))
            return (phases * coefficients) @ self.right.T
        if self.method == PropagationMethod.ADAPTIVE_RK:
            return self._integrate(vector, times).T
        return np.array([self.propagate(vector, t) for t in times])

    def _integrate(self, vector, times):
        times = np.asarray(times, dtype=float)
        order = np.argsort(times)
        solution = solve_ivp(
            lambda _, y: self.matrix @ y,
            (0.0, float(times.max())),
            np.asarray(vector, dtype=complex),
            method="DOP853",
            t_eval=times[order],
            rtol=self.rtol,
            atol=self.atol,
        )
        if not solution.success:
            raise PropagationError(f"Integrator failed: {solution.message}", residual=None)
        values = np.empty_like(solution.y)
        values[:, order] = solution.y
        return values

    # ------------------------------------------------------------------

    def _checked_state(self, vector, t):
        residual = _residual(vector)
        if residual > RESIDUAL_LIMIT:
            raise PropagationError(
                f"Propagation at t={t:g} left the state manifold (residual {residual:.2e})",
                residual=residual,
            )
        matrix = devectorize(vector)
        matrix = 0.5 * (matrix + matrix.conj().T)
        return DensityOperator(matrix / np.trace(matrix).real)

    def evolve(self, state, t):
        vector = self.propagate(vectorize(as_matrix(state)), t)
        return self._checked_state(vector, t)

    def evolve_many(self, state, times):
        times = np.asarray(times, dtype=float)
        vectors = self.propagate_many(vectorize(as_matrix(state)), times)
        states = [self._checked_state(vector, t) for vector, t in zip(vectors, times)]
        return Trajectory(times, tuple(states))

    def path(self, state):
        return StatePath(self, state)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple

    def __len__(self):
        return len(self.states)

    def matrices(self):
        return np.array([state.matrix for state in self.states])


class StatePath:
    """t -> rho(t) for a fixed initial state."""

    def __init__(self, propagator, state):
        self.propagator = propagator
        self.initial = as_matrix(state)

    def __call__(self, t):
        return self.propagator.evolve(self.initial, t)


def evolve(lindbladian, state, t, method=PropagationMethod.EIGEN):
    return Propagator(lindbladian, method=method).evolve(state, t)


def evolve_many(lindbladian, state, times, method=PropagationMethod.EIGEN):
    return Propagator(lindbladian, method=method).evolve_many(state, times)


def steady_state(lindbladian):
    """
    Unique null vector of L, normalized to unit trace. Raises when more than
    one eigenvalue sits within the zero gap or the numerical null space is
    not one-dimensional.
    """
    matrix = lindbladian.matrix
    magnitudes = np.sort(np.abs(np.linalg.eigvals(matrix)))
    near_zero = int(np.sum(magnitudes <= STEADY_STATE_GAP))
    if magnitudes.size < 2 or magnitudes[1] <= STEADY_STATE_GAP:
        raise DegenerateSteadyStateError(
            f"Steady state is not unique: {near_zero} eigenvalues below {STEADY_STATE_GAP:g}",
            near_zero_count=near_zero,
        )

    null = linalg.null_space(matrix, rcond=STEADY_STATE_GAP)
    if null.shape[1] != 1:
        raise DegenerateSteadyStateError(
            f"Steady state is not unique: null space of dimension {null.shape[1]}",
            near_zero_count=null.shape[1],
        )
    vector = null[:, 0]
    trace = trace_of_vector(vector)
    if abs(trace) < 1e-14:
        raise DegenerateSteadyStateError("Null vector of L is traceless", near_zero_count=near_zero)
    matrix_ss = devectorize(vector / trace)
    matrix_ss = 0.5 * (matrix_ss + matrix_ss.conj().T)
    return DensityOperator(matrix_ss / np.trace(matrix_ss).real)
