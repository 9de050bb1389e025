"""
Bath transition rates and the weak-coupling validity check.
"""

import logging

import numpy as np
from scipy.special import expit

from qubits.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

WEAK_COUPLING_RATIO = 0.1
INTERACTION_RATIO = 2.0


def bath_rates(bath, eps):
    """
    Return (gamma_plus, gamma_minus) for a bath coupled to a qubit of
    splitting `eps`. Explicit rates on the bath override the thermal ones.
    """
    if bath.gamma_plus is not None and bath.gamma_minus is not None:
        return float(bath.gamma_plus), float(bath.gamma_minus)

    gamma = float(bath.gamma_bare)
    x = (eps - bath.chem_potential) / bath.temperature
    if bath.statistics == "fermionic":
        return gamma * float(expit(-x)), gamma * float(expit(x))

    if x <= 0:
        raise ConfigurationError(
            "Bosonic bath with eps <= mu: divergent bosonic occupation",
            {"qubit": bath.qubit, "eps": eps, "chem_potential": bath.chem_potential},
        )
    occupation = 1.0 / float(np.expm1(x))
    return gamma * occupation, gamma * (1.0 + occupation)


def _bare_rate(bath, eps):
    if bath.gamma_bare is not None:
        return float(bath.gamma_bare)
    plus, minus = bath_rates(bath, eps)
    return plus + minus


def validity_check(config):
    """
    Advisory warnings when the weak-coupling or local-master-equation regime
    is left. Returns the warning strings; nothing is raised.
    """
    warnings = []
    scales = []
    for bath in config.baths:
        if bath.temperature is not None:
            scales.append(("T", bath.qubit, bath.temperature))
            detuning = abs(config.eps[bath.qubit] - bath.chem_potential)
            scales.append(("|eps - mu|", bath.qubit, detuning))

    bare = {bath.qubit: _bare_rate(bath, config.eps[bath.qubit]) for bath in config.baths}

    for qubit, gamma in bare.items():
        for name, owner, scale in scales:
            if scale <= 0 or gamma / scale > WEAK_COUPLING_RATIO:
                warnings.append(
                    f"weak coupling: gamma on qubit {qubit} = {gamma:g} is not "
                    f"small against {name} of qubit {owner} = {scale:g}"
                )

    if config.n_qubits >= 2:
        coupling = max(abs(config.g_res), abs(config.g_off))
        largest = max(bare.values(), default=0.0)
        if coupling > INTERACTION_RATIO * largest:
            warnings.append(
                f"local master equation: inter-qubit coupling {coupling:g} exceeds "
                f"{INTERACTION_RATIO:g} x largest bath rate {largest:g}"
            )

    for message in warnings:
        logger.warning("Validity check: %s", message)
    return warnings
