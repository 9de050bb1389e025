"""
Transport observables of a state: current moments, cross correlations,
activities and two-time current correlations.

I_P^(k) = Tr[ prod_{j in P} I_j  L^k rho ]

For k = 0 and |P| = 1 this is the mean current, for higher k its k-th time
derivative, and for |P| = 2 the zero-time current product.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from lindblad.propagation import Propagator
from lindblad.superoperators import build_lindbladian
from qubits.exceptions import ConfigurationError, InternalConsistencyError
from qubits.operators import LEFT, RIGHT, lead_index, trace_of_vector, vectorize
from qubits.states import as_matrix
from transport.records import TransportRecord, TransportSnapshot
from transport.superoperators import activity_superoperator, current_superoperator

logger = logging.getLogger(__name__)

IMAGINARY_TOL = 1e-9


def _real_trace(vector, what):
    value = trace_of_vector(vector)
    if abs(value.imag) > IMAGINARY_TOL * max(1.0, abs(value.real)):
        raise InternalConsistencyError(
            f"{what} has an imaginary part {value.imag:.3e}", {"value": complex(value)}
        )
    return float(value.real)


class TransportModel:
    """Superoperators of one SystemConfig, built once and reused."""

    def __init__(self, config, lindbladian=None):
        self.config = config
        self.derived = config.derived()
        self.lindbladian = lindbladian or build_lindbladian(config)
        self.leads = config.lead_qubits
        self.currents = {j: current_superoperator(j, config) for j in self.leads}
        self.activities = {j: activity_superoperator(j, config) for j in self.leads}
        self._propagator = None

    @property
    def propagator(self):
        if self._propagator is None:
            self._propagator = Propagator(self.lindbladian)
        return self._propagator

    def _lead(self, lead):
        qubit = lead_index(lead)
        if qubit not in self.currents:
            raise ConfigurationError(f"Qubit {qubit} is not coupled to a bath")
        return qubit

    def _apply_currents(self, leads, vector):
        for lead in leads:
            vector = self.currents[self._lead(lead)].matrix @ vector
        return vector

    # ------------------------------------------------------------------

    def moment(self, leads, k, state):
        vector = vectorize(as_matrix(state))
        for _ in range(k):
            vector = self.lindbladian.matrix @ vector
        vector = self._apply_currents(leads, vector)
        return _real_trace(vector, f"I_{tuple(leads)}^({k})")

    def derivatives(self, lead, state, k_max):
        """(I_j, dI_j/dt, ..., d^k_max I_j/dt^k_max)."""
        qubit = self._lead(lead)
        vector = vectorize(as_matrix(state))
        values = []
        for k in range(k_max + 1):
            values.append(_real_trace(self.currents[qubit].matrix @ vector, f"I_{qubit}^({k})"))
            vector = self.lindbladian.matrix @ vector
        return tuple(values)

    def activity(self, lead, state):
        qubit = self._lead(lead)
        vector = self.activities[qubit].matrix @ vectorize(as_matrix(state))
        return _real_trace(vector, f"A_{qubit}")

    def cross_correlation(self, state):
        """S_LR = I_LR - I_L I_R."""
        both = self.moment((LEFT, RIGHT), 0, state)
        return both - self.moment((LEFT,), 0, state) * self.moment((RIGHT,), 0, state)

    def auto_correlation(self, lead, state):
        """Regular part and delta coefficient of <<I_j(t) I_j(t)>>."""
        qubit = self._lead(lead)
        mean = self.moment((qubit,), 0, state)
        regular = self.moment((qubit, qubit), 0, state) - mean * mean
        return TwoTimeCorrelation(
            lead_1=qubit, time_1=None, lead_2=qubit, time_2=None,
            regular=regular, delta_coefficient=self.activity(qubit, state),
        )

    def two_time_correlation(self, lead_1, time_1, lead_2, time_2, path):
        """
        <<I_j1(t1) I_j2(t2)>> for rho(t) = path(t). The step function is
        taken as 1/2 at equal times, which symmetrizes the product there.
        """
        j1, j2 = self._lead(lead_1), self._lead(lead_2)
        propagator = getattr(path, "propagator", None) or self.propagator
        rho_1, rho_2 = as_matrix(path(time_1)), as_matrix(path(time_2))
        mean_1 = self.moment((j1,), 0, rho_1)
        mean_2 = self.moment((j2,), 0, rho_2)

        if time_1 == time_2:
            joint = 0.5 * (self.moment((j1, j2), 0, rho_1) + self.moment((j2, j1), 0, rho_1))
        else:
            (early_lead, early_state, late_lead, gap) = (
                (j2, rho_2, j1, time_1 - time_2) if time_1 > time_2
                else (j1, rho_1, j2, time_2 - time_1)
            )
            kicked = self.currents[early_lead].matrix @ vectorize(early_state)
            evolved = propagator.propagate(kicked, gap)
            joint = _real_trace(self.currents[late_lead].matrix @ evolved, "two-time correlation")

        return TwoTimeCorrelation(
            lead_1=j1, time_1=time_1, lead_2=j2, time_2=time_2,
            regular=joint - mean_1 * mean_2,
            delta_coefficient=self.activity(j1, rho_1) if j1 == j2 else None,
        )

    def internal_currents(self, state):
        """(I_S, P_S) = (-2 g Im alpha, 2 g' Im beta)."""
        matrix = as_matrix(state)
        alpha, beta = matrix[1, 2], matrix[0, 3]
        return -2.0 * self.config.g_res * alpha.imag, 2.0 * self.config.g_off * beta.imag

    def internal_current_derivatives(self, state):
        """
        Time derivatives of (I_S, P_S) from the coherence equations of
        motion. Valid without local drives.
        """
        matrix = as_matrix(state)
        d = self.derived
        g, gp = self.config.g_res, self.config.g_off
        alpha, beta = matrix[1, 2], matrix[0, 3]
        n_left = (matrix[2, 2] + matrix[3, 3]).real
        n_right = (matrix[1, 1] + matrix[3, 3]).real
        i_s, p_s = self.internal_currents(matrix)
        d_i_s = (-2.0 * g * d.delta * alpha.real + 2.0 * g * g * (n_left - n_right)
                 - 0.5 * d.gamma_tilde * i_s)
        d_p_s = (2.0 * gp * d.doublon_energy * beta.real
                 + 2.0 * gp * gp * (matrix[0, 0] - matrix[3, 3]).real
                 - 0.5 * d.gamma_tilde * p_s)
        return d_i_s, d_p_s

    def snapshot(self, state, time=0.0, k_max=3):
        currents = {j: self.derivatives(j, state, k_max) for j in self.leads}
        two_leads = LEFT in self.currents and RIGHT in self.currents
        i_lr = self.moment((LEFT, RIGHT), 0, state) if two_leads else None
        s_lr = i_lr - currents[LEFT][0] * currents[RIGHT][0] if two_leads else None
        internal = self.internal_currents(state) if self.config.n_qubits == 2 else (None, None)
        return TransportSnapshot(
            time=float(time),
            currents=currents,
            i_lr=i_lr,
            s_lr=s_lr,
            activities={j: self.activity(j, state) for j in self.leads},
            internal_current=internal[0],
            pair_current=internal[1],
        )


@dataclass(frozen=True)
class TwoTimeCorrelation:
    lead_1: int
    time_1: Optional[float]
    lead_2: int
    time_2: Optional[float]
    regular: float
    delta_coefficient: Optional[float]

    @property
    def is_singular(self):
        """Whether a delta(t1 - t2) term accompanies the regular part."""
        return self.delta_coefficient is not None and self.time_1 == self.time_2


# ----------------------------------------------------------------------
# Functional surface
# ----------------------------------------------------------------------

def current_moment(leads, k, state, lindbladian, config):
    return TransportModel(config, lindbladian).moment(leads, k, state)


def cross_correlation(state, lindbladian, config):
    return TransportModel(config, lindbladian).cross_correlation(state)


def auto_correlation(lead, state, lindbladian, config):
    return TransportModel(config, lindbladian).auto_correlation(lead, state)


def two_time_correlation(lead_1, time_1, lead_2, time_2, path, lindbladian, config):
    return TransportModel(config, lindbladian).two_time_correlation(
        lead_1, time_1, lead_2, time_2, path
    )


def transport_record(trajectory, model, k_max=3):
    snapshots = [
        model.snapshot(state, time, k_max)
        for time, state in zip(trajectory.times, trajectory.states)
    ]
    return TransportRecord.from_snapshots(snapshots, k_max)
