"""
State projections p_{P,k} = Tr[n_P L^k rho] and their expression through
transport moments.

Each occupation projector factorizes over bath-coupled qubits as
n_j = (gamma_j^+ - I_j) / Gamma_j under the trace, so

  p_{P,k} = sum_{P' subset P} (-1)^|P'| prod_{i in P \\ P'} gamma_i^+
            / prod_{j in P} Gamma_j  *  I_{P'}^(k)

with I_{}^(k) = Tr[L^k rho] = delta_{k,0}.
"""

import numpy as np

from qubits.exceptions import ConfigurationError
from qubits.operators import hs_inner, occupation_projector, subsets, trace_of_vector, vectorize


def project_state(leads, k, state, lindbladian, config):
    """Direct evaluation of Tr[n_P L^k rho]."""
    projector = occupation_projector(leads, config.n_qubits)
    return float(hs_inner(projector, lindbladian.power_apply(state, k)).real)


def factored_projection(leads, k, state, model):
    """Tr[ prod_j (gamma_j^+ - I_j)/Gamma_j  L^k rho ] with transport superoperators."""
    d = model.derived
    vector = vectorize(model.lindbladian.power_apply(state, k))
    for lead in leads:
        if d.gamma_lead[lead] == 0:
            raise ConfigurationError(f"Qubit {lead} has no bath; its occupation is not factorizable")
        current = model.currents[lead].matrix
        vector = (d.gamma_plus[lead] * vector - current @ vector) / d.gamma_lead[lead]
    return float(trace_of_vector(vector).real)


def transport_moments(leads, k, state, model):
    """I_{P'}^(k) for every subset P' of `leads`, the empty one included."""
    moments = {}
    for subset in subsets(leads):
        moments[subset] = float(k == 0) if not subset else model.moment(subset, k, state)
    return moments


def inclusion_exclusion_projection(leads, k, moments, derived):
    """p_{P,k} from the transport moments of all subsets of P."""
    leads = tuple(sorted(leads))
    denominator = np.prod([derived.gamma_lead[j] for j in leads])
    if denominator == 0:
        raise ConfigurationError("Every qubit in P needs a bath with nonzero rate")
    total = 0.0
    for subset in subsets(leads):
        key = tuple(sorted(subset))
        if key not in moments:
            raise ConfigurationError(f"Missing transport moment for subset {key}")
        value = float(k == 0) if not key else moments[key]
        weight = np.prod([derived.gamma_plus[i] for i in leads if i not in key])
        total += (-1) ** len(key) * weight * value
    return float(total / denominator)
