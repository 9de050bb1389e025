"""
Two-qubit concurrence, from the density matrix or from transport data.

For X-shaped states
    C = 2 max{0, |alpha| - sqrt(r_00 r_11), |beta| - sqrt(r_01 r_10)}
and every quantity on the right is available from transport measurements.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from qubits.exceptions import CaseAssumptionError, ConfigurationError
from qubits.operators import LEFT, RIGHT, SIGMA_Y
from qubits.states import DensityOperator, as_matrix, is_x_shaped
from tomography.reconstruction import TransportAlgebra

logger = logging.getLogger(__name__)

SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)
SINGULAR_ENERGY = 1e-6
CASE_TOL = 1e-12


class ConcurrenceMethod(str, Enum):
    X_STATE = "x_state"
    WOOTTERS_FULL = "wootters_full"
    TRANSPORT_SPECIAL = "transport_special"
    TRANSPORT_GENERAL = "transport_general"


@dataclass(frozen=True)
class ConcurrenceResult:
    value: float
    method: ConcurrenceMethod
    branch: Optional[str] = None  # "alpha", "beta" or None when C = 0
    branch_arguments: dict = field(default_factory=dict)
    partial: bool = False
    flags: tuple = ()


def _from_branches(arguments, method, partial=False, flags=()):
    """C = 2 max{0, arguments...}; records which argument won."""
    branch, best = max(arguments.items(), key=lambda item: item[1])
    if best <= 0:
        branch, best = None, 0.0
    return ConcurrenceResult(
        value=2.0 * best,
        method=method,
        branch=branch,
        branch_arguments=dict(arguments),
        partial=partial,
        flags=tuple(flags),
    )


def concurrence_x_state(rho, tol=1e-9):
    matrix = as_matrix(rho)
    if matrix.shape != (4, 4):
        raise ConfigurationError("Concurrence needs a two-qubit state")
    if not is_x_shaped(matrix, tol):
        raise ConfigurationError(
            "State is not X-shaped (v, x, y or z nonzero); use wootters_full"
        )
    populations = np.clip(np.diag(matrix).real, 0.0, None)
    return _from_branches(
        {
            "alpha": abs(matrix[1, 2]) - math.sqrt(populations[0] * populations[3]),
            "beta": abs(matrix[0, 3]) - math.sqrt(populations[1] * populations[2]),
        },
        ConcurrenceMethod.X_STATE,
    )


def wootters_full(rho):
    """
    max{0, l1 - l2 - l3 - l4}, l_i the decreasing square roots of the
    eigenvalues of rho (Y x Y) rho* (Y x Y). Computed as the singular values
    of W^T (Y x Y) W for rho = W W^dag, which avoids the non-Hermitian
    eigenproblem.
    """
    matrix = as_matrix(rho)
    if matrix.shape != (4, 4):
        raise ConfigurationError("Concurrence needs a two-qubit state")
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    eigenvalues = np.where(eigenvalues > 1e-13 * max(eigenvalues.max(), 1e-300), eigenvalues, 0.0)
    factor = eigenvectors * np.sqrt(eigenvalues)
    spectrum = np.linalg.svd(factor.T @ SPIN_FLIP @ factor, compute_uv=False)
    value = max(0.0, float(spectrum[0] - spectrum[1:].sum()))
    return ConcurrenceResult(value=value, method=ConcurrenceMethod.WOOTTERS_FULL)


def werner_state(p):
    """p |Psi^-><Psi^-| + (1 - p) 1/4."""
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"Werner weight must lie in [0, 1], got {p}")
    singlet = DensityOperator.bell("psi_minus").matrix
    return DensityOperator(p * singlet + (1.0 - p) * np.eye(4) / 4.0)


# ----------------------------------------------------------------------
# Transport based
# ----------------------------------------------------------------------

def _population_products(algebra):
    """(sqrt(r_00 r_11), sqrt(r_01 r_10)) from I_L, I_R and S_LR."""
    s = algebra.scaled_cross()
    chi_l, chi_r = algebra.chi(LEFT), algebra.chi(RIGHT)
    r_11 = s + chi_l * chi_r
    r_00 = s + (chi_l + 1.0) * (chi_r + 1.0)
    r_01_r_10 = (s + chi_l * (chi_r + 1.0)) * (s + (chi_l + 1.0) * chi_r)
    return math.sqrt(max(r_00 * r_11, 0.0)), math.sqrt(max(r_01_r_10, 0.0))


def concurrence_transport_special(snapshot, known):
    """
    delta = 0, g_off = 0, evolution from the ground state: alpha is purely
    imaginary, beta never builds up, and |alpha| = |phi_L| / (2 g_res).
    """
    if known.g_res is None or known.g_off is None or known.delta is None:
        raise ConfigurationError("Transport concurrence needs g_res, g_off and delta")
    if abs(known.g_off) > CASE_TOL or abs(known.delta) > CASE_TOL:
        raise CaseAssumptionError(
            "Case assumption violated: this formula needs delta = 0 and g_off = 0",
            {"delta": known.delta, "g_off": known.g_off},
        )
    if abs(known.g_res) <= CASE_TOL:
        raise CaseAssumptionError("Case assumption violated: g_res = 0 leaves the qubits uncoupled")
    algebra = TransportAlgebra(snapshot, known)
    outer, inner = _population_products(algebra)
    return _from_branches(
        {
            "alpha": abs(algebra.phi(LEFT)) / (2.0 * abs(known.g_res)) - outer,
            "beta": -inner,
        },
        ConcurrenceMethod.TRANSPORT_SPECIAL,
    )


def _coherence_magnitude(imaginary_part, real_numerator, coupling, energy, scale, name, flags):
    """
    |c| from -4 g Im c = imaginary_part and -4 g E Re c = real_numerator.
    Near E = 0 only the imaginary part is used, which bounds |c| from below.
    """
    if abs(coupling) <= CASE_TOL:
        return 0.0, False
    if abs(energy) < SINGULAR_ENERGY * scale:
        flags.append(f"{name}: energy below {SINGULAR_ENERGY:g} x Gamma, Re part dropped (partial)")
        return abs(imaginary_part) / (4.0 * abs(coupling)), True
    return math.hypot(imaginary_part, real_numerator / energy) / (4.0 * abs(coupling)), False


def concurrence_transport_general(snapshot, known, x_shaped=True):
    """
    |alpha| = sqrt(dphi^2 + ((dphi' + Gt/2 dphi + 4 g^2 dchi) / delta)^2) / (4 g)
    |beta|  = sqrt(Phi^2  + ((Phi' + Gt/2 Phi + 4 g'^2 (X + 1)) / E)^2) / (4 g')
    """
    needed = ("g_res", "g_off", "delta", "doublon_energy", "gamma_tilde")
    missing = [name for name in needed if getattr(known, name) is None]
    if missing:
        raise ConfigurationError(
            f"Transport concurrence needs known parameters: {', '.join(missing)}", {"missing": missing}
        )
    flags = []
    if not x_shaped:
        flags.append("evolution not X-shaped: the transport formula ignores v, x, y, z")
        logger.warning("Transport concurrence evaluated on a non X-shaped evolution")

    algebra = TransportAlgebra(snapshot, known)
    phi_l, phi_r = algebra.phi(LEFT), algebra.phi(RIGHT)
    phi_dot_l, phi_dot_r = algebra.phi_dot(LEFT), algebra.phi_dot(RIGHT)
    chi_l, chi_r = algebra.chi(LEFT), algebra.chi(RIGHT)
    half_gamma = 0.5 * known.gamma_tilde

    dphi = phi_l - phi_r
    phi_sum = phi_l + phi_r
    alpha_numerator = (phi_dot_l - phi_dot_r) + half_gamma * dphi + 4.0 * known.g_res ** 2 * (chi_l - chi_r)
    beta_numerator = (phi_dot_l + phi_dot_r) + half_gamma * phi_sum + 4.0 * known.g_off ** 2 * (chi_l + chi_r + 1.0)

    scale = known.gamma_total
    alpha, alpha_partial = _coherence_magnitude(
        dphi, alpha_numerator, known.g_res, known.delta, scale, "alpha", flags
    )
    beta, beta_partial = _coherence_magnitude(
        phi_sum, beta_numerator, known.g_off, known.doublon_energy, scale, "beta", flags
    )
    outer, inner = _population_products(algebra)
    return _from_branches(
        {"alpha": alpha - outer, "beta": beta - inner},
        ConcurrenceMethod.TRANSPORT_GENERAL,
        partial=alpha_partial or beta_partial,
        flags=flags,
    )
