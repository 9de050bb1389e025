"""
Random configurations and states for property-style tests.
"""

import numpy as np

from qubits.schemas import BathSpec, SystemConfig
from qubits.states import DensityOperator


def random_density_matrix(rng, n_qubits=2, x_shaped=False):
    """Ginibre-distributed state; optionally projected onto the X shape."""
    d = 2 ** n_qubits
    ginibre = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if x_shaped:
        mask = np.eye(d, dtype=bool) | np.fliplr(np.eye(d, dtype=bool))
        ginibre = np.where(mask, ginibre, 0.0)
    matrix = ginibre @ ginibre.conj().T
    matrix = 0.5 * (matrix + matrix.conj().T)
    return DensityOperator(matrix / np.trace(matrix).real)


def explicit_bath(qubit, gamma_plus, gamma_minus):
    return BathSpec(qubit=qubit, gamma_plus=gamma_plus, gamma_minus=gamma_minus)


def random_config(rng, case="general", dephasing=True, drive=False):
    """
    Two-qubit config with explicit bath rates.

    case: "general", "degenerate" (delta = E = 0), "resonant" (g_off = 0)
    or "resonant_degenerate" (delta = 0 and g_off = 0).
    """
    eps_left = rng.uniform(0.4, 1.5)
    eps_right = rng.uniform(0.4, 1.5)
    u_int = rng.uniform(-0.5, 0.5)
    g_res = rng.uniform(0.1, 0.5)
    g_off = rng.uniform(0.1, 0.5)
    if case in ("degenerate", "resonant_degenerate"):
        eps_right = eps_left
    if case == "degenerate":
        u_int = -2.0 * eps_left
    if case in ("resonant", "resonant_degenerate"):
        g_off = 0.0
    return SystemConfig(
        n_qubits=2,
        eps=(eps_left, eps_right),
        u_int=u_int,
        g_res=g_res,
        g_off=g_off,
        drive=tuple(rng.uniform(0.1, 0.4, 2)) if drive else None,
        baths=(
            explicit_bath(0, rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)),
            explicit_bath(1, rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)),
        ),
        gamma_z=tuple(rng.uniform(0.0, 0.2, 2)) if dephasing else None,
    )


def reference_config(**changes):
    """Fixed generic config with well separated rates and energies."""
    values = dict(
        n_qubits=2,
        eps=(1.0, 0.6),
        u_int=0.3,
        g_res=0.35,
        g_off=0.25,
        baths=(explicit_bath(0, 0.6, 0.4), explicit_bath(1, 0.3, 0.7)),
        gamma_z=(0.05, 0.1),
    )
    values.update(changes)
    return SystemConfig(**values)


def random_hermitian(rng, d=4, scale=1.0):
    matrix = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (matrix + matrix.conj().T)
