"""
Two-qubit state reconstruction from transport data.

Notation for bath-coupled qubit j (all evaluated at one time):
  chi_j  = (I_j - gamma_j^+) / Gamma_j          (= -<n_j>)
  phi_j  = dI_j / Gamma_j + I_j                  (internal current seen by j)
  s      = S_LR / (Gamma_L Gamma_R)

Populations need k = 0 data, the imaginary coherences k <= 1 and the real
coherences k <= 2 together with the dynamics parameters.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
from django.conf import settings

from qubits.exceptions import ConfigurationError, InconsistentDataError, StateValidationError
from qubits.operators import ELEMENT_INDICES, LEFT, RIGHT
from qubits.states import DensityOperator
from transport.records import derivative_column

logger = logging.getLogger(__name__)

ZERO = 1e-12
CONSISTENCY_TOL = 1e-9


class ElementStatus(str, Enum):
    RECONSTRUCTED = "reconstructed"
    UNIDENTIFIABLE = "unidentifiable"
    NOT_GENERATED = "not_generated"


class ReconstructionLevel(str, Enum):
    POPULATIONS = "populations"
    IMAGINARY = "imaginary"
    FULL = "full"


LEVEL_ORDER = {
    ReconstructionLevel.POPULATIONS: 0,
    ReconstructionLevel.IMAGINARY: 1,
    ReconstructionLevel.FULL: 2,
}


@dataclass(frozen=True)
class KnownParameters:
    """Bath rates plus whichever dynamics parameters are known."""

    gamma_plus: tuple
    gamma_minus: tuple
    g_res: Optional[float] = None
    g_off: Optional[float] = None
    delta: Optional[float] = None
    doublon_energy: Optional[float] = None
    gamma_tilde: Optional[float] = None
    driven: bool = False

    @classmethod
    def from_config(cls, config, unknown=()):
        d = config.derived()
        values = {
            "g_res": config.g_res,
            "g_off": config.g_off,
            "delta": d.delta,
            "doublon_energy": d.doublon_energy,
            "gamma_tilde": d.gamma_tilde,
        }
        for name in unknown:
            values[name] = None
        return cls(
            gamma_plus=d.gamma_plus[:2],
            gamma_minus=d.gamma_minus[:2],
            driven=config.has_drive,
            **values,
        )

    @property
    def gamma_lead(self):
        return tuple(p + m for p, m in zip(self.gamma_plus, self.gamma_minus))

    @property
    def gamma_total(self):
        return sum(self.gamma_lead)


class TransportAlgebra:
    """chi, phi and their derivatives for one snapshot."""

    def __init__(self, snapshot, known):
        self.snapshot = snapshot
        self.known = known
        for lead in (LEFT, RIGHT):
            if known.gamma_lead[lead] <= 0:
                raise ConfigurationError(f"Qubit {lead} needs a bath with nonzero rate")

    def current(self, lead, k=0):
        return self.snapshot.current(lead, k)

    def chi(self, lead):
        return (self.current(lead) - self.known.gamma_plus[lead]) / self.known.gamma_lead[lead]

    def chi_dot(self, lead):
        return self.current(lead, 1) / self.known.gamma_lead[lead]

    def phi(self, lead):
        return self.current(lead, 1) / self.known.gamma_lead[lead] + self.current(lead)

    def phi_dot(self, lead):
        return self.current(lead, 2) / self.known.gamma_lead[lead] + self.current(lead, 1)

    def phi_ddot(self, lead):
        return self.current(lead, 3) / self.known.gamma_lead[lead] + self.current(lead, 2)

    def scaled_cross(self):
        if self.snapshot.s_lr is None:
            raise ConfigurationError(
                "Transport data lacks required columns: S_LR", {"missing": ["S_LR"]}
            )
        gamma = self.known.gamma_lead
        return self.snapshot.s_lr / (gamma[LEFT] * gamma[RIGHT])


@dataclass(frozen=True)
class NoiseGates:
    """
    Consistency tolerances for measured records. `stds` holds the standard
    deviation of each record column; a combination sum_i w_i x_i is allowed
    to miss its target by `sigmas` times sum_i |w_i| std_i.
    """

    stds: dict
    sigmas: float = 5.0

    @classmethod
    def from_variances(cls, variances, sigmas=None):
        if sigmas is None:
            sigmas = settings.TOMOGRAPHY["NOISE_GATE_SIGMAS"]
        return cls({name: float(np.sqrt(value)) for name, value in variances.items()}, float(sigmas))

    def spread(self, terms):
        return sum(abs(weight) * self.stds.get(column, 0.0) for column, weight in terms)

    def tolerance(self, floor, terms):
        return max(floor, self.sigmas * self.spread(terms))


def _lead_terms(lead, weights):
    """(column, weight) pairs for sum_k weights[k] * d^k I_lead / dt^k."""
    return [(derivative_column(lead, k), weight) for k, weight in enumerate(weights) if weight]


def _phi_terms(known, lead):
    return _lead_terms(lead, (1.0, 1.0 / known.gamma_lead[lead]))


def _rhs_terms(known, lead, coupling):
    # d(phi)/dt + Gt/2 phi + 4 g^2 chi, expanded in the current derivatives
    gamma = known.gamma_lead[lead]
    half = 0.5 * known.gamma_tilde
    return _lead_terms(
        lead, (half + 4.0 * coupling ** 2 / gamma, 1.0 + half / gamma, 1.0 / gamma)
    )


def _population_terms(algebra):
    # largest sensitivity of any r_ab to each measured column
    gamma = algebra.known.gamma_lead
    return [
        ("S_LR", 1.0 / (gamma[LEFT] * gamma[RIGHT])),
        ("I_L", (1.0 + abs(algebra.chi(RIGHT))) / gamma[LEFT]),
        ("I_R", (1.0 + abs(algebra.chi(LEFT))) / gamma[RIGHT]),
    ]


def _gate(inp, floor, terms):
    if inp.noise is None:
        return floor
    return inp.noise.tolerance(floor, terms)


# ----------------------------------------------------------------------
# Result types
# ----------------------------------------------------------------------

class Populations(NamedTuple):
    r_00: float
    r_01: float
    r_10: float
    r_11: float
    consistent: bool = True


@dataclass(frozen=True)
class ElementEstimate:
    name: str
    value: Optional[float]
    status: ElementStatus
    residual: Optional[float] = None
    consistent: bool = True


@dataclass(frozen=True)
class GammaTildeEstimate:
    value: float
    gamma_dephasing: float
    alternatives: tuple = ()


@dataclass(frozen=True)
class ReconstructedState:
    time: float
    level: ReconstructionLevel
    populations: Populations
    elements: dict
    flags: tuple = ()
    matrix: Optional[np.ndarray] = None
    density_operator: Optional[DensityOperator] = None
    gamma_tilde: Optional[GammaTildeEstimate] = None

    @property
    def physical(self):
        return self.density_operator is not None

    def value(self, name):
        if name in self.populations._fields:
            return getattr(self.populations, name)
        return self.elements[name].value


# ----------------------------------------------------------------------
# Reconstruction steps
# ----------------------------------------------------------------------

def reconstruct_populations(inp, tol=None):
    tol = tol if tol is not None else settings.TOMOGRAPHY["RECONSTRUCTION_TOL"]
    algebra = TransportAlgebra(inp.snapshot, inp.known)
    tol = _gate(inp, tol, _population_terms(algebra))
    chi_l, chi_r = algebra.chi(LEFT), algebra.chi(RIGHT)
    r_11 = algebra.scaled_cross() + chi_l * chi_r
    r_10 = -chi_l - r_11
    r_01 = -chi_r - r_11
    r_00 = 1.0 - r_01 - r_10 - r_11
    values = (r_00, r_01, r_10, r_11)
    consistent = all(-tol <= value <= 1.0 + tol for value in values)
    if not consistent:
        logger.warning("Inconsistent transport data at t=%g: populations %s", inp.snapshot.time, values)
    return Populations(*values, consistent=consistent)


def _vanishing(name, residual, status, tol):
    consistent = residual < tol
    if not consistent:
        logger.warning("Inconsistent data: %s should vanish, residual %.3e", name, residual)
    return ElementEstimate(name, None, status, residual, consistent)


def reconstruct_im_coherences(inp, tol=CONSISTENCY_TOL):
    """(Im alpha, Im beta) from -4 g Im alpha = phi_L - phi_R and -4 g' Im beta = phi_L + phi_R."""
    algebra = TransportAlgebra(inp.snapshot, inp.known)
    phi_l, phi_r = algebra.phi(LEFT), algebra.phi(RIGHT)
    estimates = []
    for name, coupling, combination in (
        ("im_alpha", inp.known.g_res, phi_l - phi_r),
        ("im_beta", inp.known.g_off, phi_l + phi_r),
    ):
        if coupling is None:
            estimates.append(ElementEstimate(name, None, ElementStatus.UNIDENTIFIABLE))
        elif abs(coupling) <= ZERO:
            gate = _gate(inp, tol, _phi_terms(inp.known, LEFT) + _phi_terms(inp.known, RIGHT))
            estimates.append(
                _vanishing(name, abs(combination), ElementStatus.UNIDENTIFIABLE, gate)
            )
        else:
            estimates.append(
                ElementEstimate(name, -combination / (4.0 * coupling), ElementStatus.RECONSTRUCTED)
            )
    return tuple(estimates)


def reconstruct_re_coherences(inp, tol=1e-8):
    """
    (Re alpha, Re beta) from
      -4 g delta Re alpha = d(phi_L - phi_R)/dt + Gt/2 (phi_L - phi_R) + 4 g^2 (chi_L - chi_R)
      -4 g' E Re beta     = d(phi_L + phi_R)/dt + Gt/2 (phi_L + phi_R) + 4 g'^2 (chi_L + chi_R + 1)
    """
    known = inp.known
    algebra = TransportAlgebra(inp.snapshot, known)
    estimates = []
    for name, coupling, energy, sign, offset in (
        ("re_alpha", known.g_res, known.delta, -1.0, 0.0),
        ("re_beta", known.g_off, known.doublon_energy, 1.0, 1.0),
    ):
        if coupling is not None and abs(coupling) <= ZERO:
            estimates.append(ElementEstimate(name, None, ElementStatus.NOT_GENERATED))
            continue
        if coupling is None or energy is None or known.gamma_tilde is None:
            estimates.append(ElementEstimate(name, None, ElementStatus.UNIDENTIFIABLE))
            continue
        combination = algebra.phi(LEFT) + sign * algebra.phi(RIGHT)
        combination_dot = algebra.phi_dot(LEFT) + sign * algebra.phi_dot(RIGHT)
        chi_term = algebra.chi(LEFT) + sign * algebra.chi(RIGHT) + offset
        rhs = (combination_dot + 0.5 * known.gamma_tilde * combination
               + 4.0 * coupling ** 2 * chi_term)
        if abs(energy) <= ZERO:
            gate = _gate(
                inp, tol, _rhs_terms(known, LEFT, coupling) + _rhs_terms(known, RIGHT, coupling)
            )
            estimates.append(_vanishing(name, abs(rhs), ElementStatus.UNIDENTIFIABLE, gate))
        else:
            estimates.append(
                ElementEstimate(name, -rhs / (4.0 * coupling * energy), ElementStatus.RECONSTRUCTED)
            )
    return tuple(estimates)


def assemble(time, level, populations, elements, gamma_tilde=None, flags=()):
    """
    Fill the matrix when every alpha/beta part is reconstructed or not
    generated. A coherence whose coupling vanishes is never generated by the
    dynamics and enters the matrix as zero.
    """
    flags = list(flags)
    if not populations.consistent:
        flags.append("inconsistent transport data")
    flags.extend(
        f"inconsistent data: {estimate.name}"
        for estimate in elements.values()
        if not estimate.consistent
    )

    matrix = None
    density = None
    usable = []
    for coherence in ("alpha", "beta"):
        re, im = elements.get(f"re_{coherence}"), elements.get(f"im_{coherence}")
        if re is None or im is None:
            usable.append(False)
        elif re.status == ElementStatus.NOT_GENERATED:
            usable.append(im.consistent)
        else:
            usable.append(ElementStatus.UNIDENTIFIABLE not in (re.status, im.status))
    if all(usable):
        matrix = np.diag(np.array(populations[:4], dtype=complex))
        for coherence in ("alpha", "beta"):
            re = elements[f"re_{coherence}"].value or 0.0
            im = elements[f"im_{coherence}"].value or 0.0
            i, j = ELEMENT_INDICES[coherence]
            matrix[i, j] = re + 1j * im
            matrix[j, i] = re - 1j * im
        try:
            density = DensityOperator(matrix)
        except StateValidationError as exc:
            flags.append(f"non-physical: {exc}")
    return ReconstructedState(
        time=time,
        level=level,
        populations=populations,
        elements=elements,
        flags=tuple(flags),
        matrix=matrix,
        density_operator=density,
        gamma_tilde=gamma_tilde,
    )


@dataclass(frozen=True)
class ReconstructionInput:
    snapshot: object
    known: KnownParameters
    notes: tuple = field(default_factory=tuple)
    # measured records only; exact records keep the fixed tolerances
    noise: Optional[NoiseGates] = None


def reconstruct_state(inp, level=ReconstructionLevel.FULL):
    level = ReconstructionLevel(level)
    flags = list(inp.notes)
    if inp.known.driven:
        flags.append("local drives present: transport identities assume none")
    populations = reconstruct_populations(inp)
    elements = {
        name: ElementEstimate(name, None, ElementStatus.UNIDENTIFIABLE)
        for name in ("re_alpha", "im_alpha", "re_beta", "im_beta")
    }
    if LEVEL_ORDER[level] >= 1:
        for estimate in reconstruct_im_coherences(inp):
            elements[estimate.name] = estimate
    if LEVEL_ORDER[level] >= 2:
        for estimate in reconstruct_re_coherences(inp):
            elements[estimate.name] = estimate
    return assemble(inp.snapshot.time, level, populations, elements, flags=flags)


# ----------------------------------------------------------------------
# Steady state
# ----------------------------------------------------------------------

def estimate_gamma_tilde(current, known):
    """
    Roots of (I/4) Gt^2 + (g^2 Gamma I / (Gamma_L Gamma_R) - g^2 D) Gt + delta^2 I = 0,
    D = gamma_L^+/Gamma_L - gamma_R^+/Gamma_R, valid for g_off = 0. Roots
    below Gamma would imply negative dephasing and are dropped; the largest
    admissible root is returned with the others as alternatives.
    """
    if known.g_res is None or known.delta is None:
        raise ConfigurationError("Gamma-tilde from the steady current needs g_res and delta")
    gamma = known.gamma_lead
    g2 = known.g_res ** 2
    drive = known.gamma_plus[LEFT] / gamma[LEFT] - known.gamma_plus[RIGHT] / gamma[RIGHT]
    coefficients = [
        current / 4.0,
        g2 * known.gamma_total * current / (gamma[LEFT] * gamma[RIGHT]) - g2 * drive,
        known.delta ** 2 * current,
    ]
    if abs(current) <= ZERO:
        raise InconsistentDataError(
            "Parameters inconsistent with steady current: zero current fixes no dephasing rate"
        )
    roots = np.roots(coefficients)
    positive = sorted(
        (float(root.real) for root in roots if abs(root.imag) <= 1e-12 * abs(root) and root.real > 0),
        reverse=True,
    )
    if not positive:
        raise InconsistentDataError(
            "Parameters inconsistent with steady current: no positive dephasing rate",
            {"roots": [complex(root) for root in roots]},
        )
    admissible = [root for root in positive if root >= known.gamma_total * (1.0 - 1e-9)]
    candidates = admissible or positive
    if not admissible:
        logger.warning("Steady current implies a dephasing rate below Gamma; keeping %g", candidates[0])
    value = candidates[0]
    return GammaTildeEstimate(
        value=value,
        gamma_dephasing=0.5 * (value - known.gamma_total),
        alternatives=tuple(candidates[1:]),
    )


def steady_state_qst(inp):
    """
    Reconstruction from steady-state currents alone (time derivatives vanish).
    An unknown Gamma-tilde is solved for first when g_off = 0.
    """
    known = inp.known
    algebra = TransportAlgebra(inp.snapshot, known)
    current_l, current_r = algebra.current(LEFT), algebra.current(RIGHT)
    gamma_estimate = None
    if known.gamma_tilde is None:
        if known.g_off is None or abs(known.g_off) > ZERO:
            raise ConfigurationError("Unknown Gamma-tilde can only be solved for with g_off = 0")
        gamma_estimate = estimate_gamma_tilde(current_l, known)
        known = KnownParameters(**{**known.__dict__, "gamma_tilde": gamma_estimate.value})

    populations = reconstruct_populations(ReconstructionInput(inp.snapshot, known, noise=inp.noise))
    chi_l, chi_r = algebra.chi(LEFT), algebra.chi(RIGHT)
    elements = {}
    for coherence, coupling, energy, combination, chi_term in (
        ("alpha", known.g_res, known.delta, current_l - current_r, chi_l - chi_r),
        ("beta", known.g_off, known.doublon_energy, current_l + current_r, chi_l + chi_r + 1.0),
    ):
        im_name, re_name = f"im_{coherence}", f"re_{coherence}"
        if coupling is None:
            elements[im_name] = ElementEstimate(im_name, None, ElementStatus.UNIDENTIFIABLE)
            elements[re_name] = ElementEstimate(re_name, None, ElementStatus.UNIDENTIFIABLE)
            continue
        if abs(coupling) <= ZERO:
            gate = _gate(inp, CONSISTENCY_TOL, _lead_terms(LEFT, (1.0,)) + _lead_terms(RIGHT, (1.0,)))
            elements[im_name] = _vanishing(im_name, abs(combination), ElementStatus.UNIDENTIFIABLE, gate)
            elements[re_name] = ElementEstimate(re_name, None, ElementStatus.NOT_GENERATED)
            continue
        elements[im_name] = ElementEstimate(
            im_name, -combination / (4.0 * coupling), ElementStatus.RECONSTRUCTED
        )
        rhs = 0.5 * known.gamma_tilde * combination + 4.0 * coupling ** 2 * chi_term
        if energy is None:
            elements[re_name] = ElementEstimate(re_name, None, ElementStatus.UNIDENTIFIABLE)
        elif abs(energy) <= ZERO:
            weights = [0.5 * known.gamma_tilde + 4.0 * coupling ** 2 / gamma for gamma in known.gamma_lead]
            gate = _gate(inp, 1e-8, _lead_terms(LEFT, weights[:1]) + _lead_terms(RIGHT, weights[1:]))
            elements[re_name] = _vanishing(re_name, abs(rhs), ElementStatus.UNIDENTIFIABLE, gate)
        else:
            elements[re_name] = ElementEstimate(
                re_name, -rhs / (4.0 * coupling * energy), ElementStatus.RECONSTRUCTED
            )

    return assemble(
        inp.snapshot.time,
        ReconstructionLevel.FULL,
        populations,
        elements,
        gamma_tilde=gamma_estimate,
        flags=inp.notes,
    )
