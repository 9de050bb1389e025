"""
Probe data for parameter estimation: transport snapshots at a few times,
reduced to the chi/phi combinations the estimation identities use.
"""

import logging
from enum import Enum
from functools import cached_property

import numpy as np

from qubits.exceptions import ConfigurationError
from qubits.operators import LEFT, RIGHT
from tomography.reconstruction import TransportAlgebra

logger = logging.getLogger(__name__)


class EstimationCase(str, Enum):
    GENERAL = "general"
    DEGENERATE = "degenerate"  # delta = E = 0
    RESONANT = "resonant"  # g_off = 0
    RESONANT_DEGENERATE = "resonant_degenerate"  # delta = 0 and g_off = 0


MIN_PROBES = {
    EstimationCase.GENERAL: 5,
    EstimationCase.DEGENERATE: 3,
    EstimationCase.RESONANT: 3,
    EstimationCase.RESONANT_DEGENERATE: 2,
}


def probe_snapshots(model, path, times, k_max=3):
    """Exact transport snapshots of rho(t) = path(t) at the probe times."""
    return [model.snapshot(path(t), t, k_max) for t in times]


def suggest_probe_times(gamma_total, count=5, start=0.1, stop=5.0, exclude=()):
    """Log-spaced times over [start, stop] / Gamma, skipping ones already used."""
    candidates = np.geomspace(start, stop, count + len(exclude)) / gamma_total
    used = np.asarray(exclude, dtype=float)
    picked = [
        float(t) for t in candidates
        if used.size == 0 or np.min(np.abs(used - t)) > 1e-9 * max(1.0, t)
    ]
    return picked[:count]


class ProbeSeries:
    """
    Arrays over probes of the estimation variables:
      dphi = phi_L - phi_R,  phi_sum = phi_L + phi_R,
      dchi = chi_L - chi_R,  chi_sum = chi_L + chi_R,
    and their time derivatives. Each array is computed on first access, so
    data only needs the columns the chosen estimator reads.
    """

    def __init__(self, snapshots, known):
        if not snapshots:
            raise ConfigurationError("No probe data supplied")
        self.snapshots = list(snapshots)
        self.known = known
        self.times = np.array([snapshot.time for snapshot in snapshots], dtype=float)
        self._algebras = [TransportAlgebra(snapshot, known) for snapshot in snapshots]

    def _series(self, method, lead):
        return np.array([getattr(a, method)(lead) for a in self._algebras], dtype=float)

    def _pair(self, method, sign):
        return self._series(method, LEFT) + sign * self._series(method, RIGHT)

    @cached_property
    def dchi(self):
        return self._pair("chi", -1.0)

    @cached_property
    def chi_sum(self):
        return self._pair("chi", 1.0)

    @cached_property
    def dchi_dot(self):
        return self._pair("chi_dot", -1.0)

    @cached_property
    def chi_sum_dot(self):
        return self._pair("chi_dot", 1.0)

    @cached_property
    def dphi(self):
        return self._pair("phi", -1.0)

    @cached_property
    def phi_sum(self):
        return self._pair("phi", 1.0)

    @cached_property
    def dphi_dot(self):
        return self._pair("phi_dot", -1.0)

    @cached_property
    def phi_sum_dot(self):
        return self._pair("phi_dot", 1.0)

    @cached_property
    def dphi_ddot(self):
        return self._pair("phi_ddot", -1.0)

    @cached_property
    def phi_sum_ddot(self):
        return self._pair("phi_ddot", 1.0)

    def left(self, method):
        return self._series(method, LEFT)

    def right(self, method):
        return self._series(method, RIGHT)

    def __len__(self):
        return self.times.size

    def require(self, case, gamma_tilde_known=False):
        case = EstimationCase(case)
        needed = MIN_PROBES[case]
        if case == EstimationCase.GENERAL and gamma_tilde_known:
            needed = 4
        if len(self) < needed:
            raise ConfigurationError(
                f"{case.value} estimation needs at least {needed} probe times, got {len(self)}",
                {"needed": needed, "given": len(self)},
            )
