"""
Which of the 16 real two-qubit density-matrix directions transport data can
reach for a given configuration.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from krylov.arnoldi import KrylovBasis, assemble_observable_space, observable_space
from lindblad.superoperators import adjoint, build_lindbladian
from qubits.exceptions import ConfigurationError
from qubits.operators import REAL_COORDINATES, direction_operator, identity_vector

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-6


class Observability(str, Enum):
    RECONSTRUCTIBLE = "reconstructible"
    UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class DirectionEntry:
    name: str
    observability: Observability
    residual: float
    via_trace: bool = False


@dataclass(frozen=True)
class CompletenessReport:
    entries: tuple
    observable_dimension: int
    seed_dimensions: dict
    budgets: dict
    seed_reach: dict

    def status(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry.observability
        raise KeyError(name)

    @property
    def reconstructible(self):
        return tuple(
            entry.name for entry in self.entries
            if entry.observability == Observability.RECONSTRUCTIBLE
        )

    @property
    def complete(self):
        return len(self.reconstructible) == len(self.entries)


def _seed_reach(bases, trace_seed):
    """Directions each seed reaches on its own (trace included)."""
    reach = {}
    for basis in bases:
        own = assemble_observable_space([basis, trace_seed])
        reach[basis.label] = tuple(
            name for name in REAL_COORDINATES
            if own.residual(direction_operator(name)) < MEMBERSHIP_TOL
        )
    return reach


def completeness_report(config, lindbladian=None):
    """
    A direction counts as reconstructible when its operator lies in the
    observable space, possibly after adding the identity (the trace of rho
    is known to be one).
    """
    if config.n_qubits != 2:
        raise ConfigurationError("completeness_report covers two-qubit registers")
    lindbladian = lindbladian or build_lindbladian(config)
    bases, space = observable_space(config, adjoint(lindbladian))
    # A and A - c 1 carry the same information once Tr rho = 1 is known
    trace_seed = KrylovBasis("trace", identity_vector(4)[None, :] / 2.0, np.zeros((1, 1)), (0.0,))
    with_trace = assemble_observable_space([*bases, trace_seed])

    entries = []
    for name in REAL_COORDINATES:
        operator = direction_operator(name)
        residual = space.residual(operator)
        via_trace = False
        if residual >= MEMBERSHIP_TOL:
            traced = with_trace.residual(operator)
            if traced < MEMBERSHIP_TOL:
                residual, via_trace = traced, True
        observability = (
            Observability.RECONSTRUCTIBLE if residual < MEMBERSHIP_TOL else Observability.UNREACHABLE
        )
        entries.append(DirectionEntry(name, observability, residual, via_trace))

    report = CompletenessReport(
        entries=tuple(entries),
        observable_dimension=space.dimension,
        seed_dimensions={basis.label: basis.dimension for basis in bases},
        budgets=space.budgets,
        seed_reach=_seed_reach(bases, trace_seed),
    )
    logger.info(
        "Completeness: %d/16 directions reconstructible, K_tot=%d",
        len(report.reconstructible), report.observable_dimension,
    )
    return report


class CoherenceReach(str, Enum):
    REACHABLE = "reachable"
    PARTIAL = "partial"
    NOT_GENERATED = "not_generated"
    UNREACHABLE = "unreachable"


def coherence_summary(report, config):
    """
    Per coherence: both real directions reconstructible, one of them, or
    none. A coherence with no reachable direction whose coupling is zero is
    never generated by the dynamics.
    """
    couplings = {"alpha": config.g_res, "beta": config.g_off}
    summary = {}
    for coherence in ("alpha", "beta", "v", "x", "y", "z"):
        reached = [
            report.status(f"{part}_{coherence}") == Observability.RECONSTRUCTIBLE
            for part in ("re", "im")
        ]
        if all(reached):
            summary[coherence] = CoherenceReach.REACHABLE
        elif any(reached):
            summary[coherence] = CoherenceReach.PARTIAL
        elif couplings.get(coherence, None) == 0:
            summary[coherence] = CoherenceReach.NOT_GENERATED
        else:
            summary[coherence] = CoherenceReach.UNREACHABLE
    return summary
