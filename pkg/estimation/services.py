"""
Parameter estimation from transport probes.

Every estimator follows the same pattern:
  - build the linear system implied by the transport identities at each
    probe time (one row per probe and identity)
  - solve by least squares after column scaling, failing on rank loss
  - back-solve the physical parameters and refine them with a bounded
    number of Gauss-Newton steps where the identities are nonlinear

delta and E come back as magnitudes: flipping both signs together with
sigma_z on one qubit leaves every transport signal unchanged.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from scipy.optimize import least_squares, minimize_scalar

from estimation.probes import EstimationCase, ProbeSeries, suggest_probe_times
from qubits.exceptions import CaseAssumptionError, ConditioningError, InconsistentDataError

logger = logging.getLogger(__name__)

RANK_CUTOFF = 1e-12
NULL_COLUMN = 1e-10
NEGATIVE_TOL = 1e-8


@dataclass(frozen=True)
class EstimationResult:
    case: EstimationCase
    parameters: dict
    residual_norm: float
    condition: float
    unidentifiable: tuple = ()
    notes: tuple = field(default_factory=tuple)
    # identity family -> residual at each probe, at the reported parameters
    equation_residuals: dict = field(default_factory=dict)

    def value(self, name):
        return self.parameters.get(name)


def _condition(matrix):
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0] = 1.0
    singular = np.linalg.svd(matrix / norms, compute_uv=False)
    if singular[-1] <= 0:
        return math.inf
    return float(singular[0] / singular[-1])


def _solve(matrix, rhs, probes, what):
    """Column-scaled least squares; raises ConditioningError on rank loss."""
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0] = 1.0
    scaled = matrix / norms
    singular = np.linalg.svd(scaled, compute_uv=False)
    if singular[-1] <= RANK_CUTOFF * singular[0]:
        condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else math.inf
        raise ConditioningError(
            f"{what}: probe system is singular (condition {condition:.3e}); add probe times",
            condition=condition,
            suggested_times=suggest_probe_times(
                probes.known.gamma_total, count=2, exclude=probes.times,
            ),
        )
    solution, *_ = np.linalg.lstsq(scaled, rhs, rcond=None)
    solution = solution / norms
    residual = float(np.linalg.norm(matrix @ solution - rhs))
    return solution, residual, float(singular[0] / singular[-1])


def _nonnegative(name, value, scale=1.0):
    if value < -NEGATIVE_TOL * max(1.0, scale):
        raise InconsistentDataError(
            f"Inconsistent probe data: {name} came out negative ({value:.3e})", {name: value}
        )
    return max(value, 0.0)


def _refine(residuals, start):
    """Levenberg-Marquardt polish of a linear-stage solution."""
    tomography = settings.TOMOGRAPHY
    result = least_squares(
        residuals,
        start,
        method="lm",
        xtol=1e-14,
        ftol=1e-14,
        gtol=tomography["GAUSS_NEWTON_GTOL"],
        max_nfev=tomography["GAUSS_NEWTON_MAX_ITER"] * (start.size + 1),
    )
    if not result.success:
        logger.warning("Gauss-Newton refinement stopped early: %s", result.message)
    return result.x, float(np.linalg.norm(result.fun))


def _dephasing(gamma_tilde, known):
    return 0.5 * (gamma_tilde - known.gamma_total)


def _families(vector, names=("phi_difference", "phi_sum")):
    """Split stacked per-time residuals into one tuple per identity family."""
    chunks = np.split(np.asarray(vector, dtype=float), len(names))
    return {name: tuple(float(value) for value in chunk) for name, chunk in zip(names, chunks)}


# ----------------------------------------------------------------------
# delta = 0, g_off = 0
# ----------------------------------------------------------------------

def estimate_g_res_gamma_tilde(snapshots, known):
    """
    phi_L' + (Gt/2) phi_L + 2 g^2 (chi_L - chi_R) = 0 at each probe, linear
    in (Gt/2, 2 g^2).
    """
    probes = ProbeSeries(snapshots, known)
    probes.require(EstimationCase.RESONANT_DEGENERATE)
    matrix = np.column_stack([probes.left("phi"), probes.dchi])
    rhs = -probes.left("phi_dot")
    solution, residual, condition = _solve(matrix, rhs, probes, "g_res/Gamma-tilde")
    half_gamma, two_g2 = solution
    if two_g2 < -NEGATIVE_TOL:
        raise CaseAssumptionError(
            f"Case assumption violated: fitted g_res^2 = {two_g2 / 2:.3e} < 0 "
            "(data is not from delta = 0, g_off = 0 dynamics)"
        )
    gamma_tilde = 2.0 * half_gamma
    g_res = math.sqrt(max(two_g2, 0.0) / 2.0)
    logger.info("Estimated g_res=%.6g Gamma-tilde=%.6g (residual %.2e)", g_res, gamma_tilde, residual)
    return EstimationResult(
        case=EstimationCase.RESONANT_DEGENERATE,
        parameters={
            "g_res": g_res,
            "gamma_tilde": gamma_tilde,
            "gamma_dephasing": _dephasing(gamma_tilde, known),
        },
        residual_norm=residual,
        condition=condition,
        equation_residuals=_families(matrix @ solution - rhs, names=("phi_difference",)),
    )


def estimate_dephasing(snapshot, g_res, known):
    """Gamma-tilde from a single probe once g_res is known (delta = 0, g_off = 0)."""
    probes = ProbeSeries([snapshot], known)
    phi = float(probes.left("phi")[0])
    if abs(phi) <= 1e-14:
        raise ConditioningError(
            "phi_L vanishes at this probe; Gamma-tilde is not determined",
            condition=math.inf,
            suggested_times=suggest_probe_times(known.gamma_total, count=2, exclude=probes.times),
        )
    phi_dot = float(probes.left("phi_dot")[0])
    return -2.0 * (phi_dot + 2.0 * g_res ** 2 * float(probes.dchi[0])) / phi


# ----------------------------------------------------------------------
# delta = E = 0
# ----------------------------------------------------------------------

def estimate_degenerate(snapshots, known, gamma_tilde=None):
    """
    dphi' + (Gt/2) dphi + 4 g^2 dchi = 0 and
    Phi'  + (Gt/2) Phi  + 4 g'^2 (X + 1) = 0.
    """
    probes = ProbeSeries(snapshots, known)
    probes.require(EstimationCase.DEGENERATE)
    zeros = np.zeros(len(probes))
    chi_term = probes.chi_sum + 1.0
    if gamma_tilde is None:
        matrix = np.vstack([
            np.column_stack([probes.dphi, probes.dchi, zeros]),
            np.column_stack([probes.phi_sum, zeros, chi_term]),
        ])
        rhs = -np.concatenate([probes.dphi_dot, probes.phi_sum_dot])
        solution, residual, condition = _solve(matrix, rhs, probes, "degenerate case")
        half_gamma, four_g2, four_gp2 = solution
        gamma_tilde = 2.0 * half_gamma
    else:
        matrix = np.vstack([
            np.column_stack([probes.dchi, zeros]),
            np.column_stack([zeros, chi_term]),
        ])
        rhs = -np.concatenate([
            probes.dphi_dot + 0.5 * gamma_tilde * probes.dphi,
            probes.phi_sum_dot + 0.5 * gamma_tilde * probes.phi_sum,
        ])
        solution, residual, condition = _solve(matrix, rhs, probes, "degenerate case")
        four_g2, four_gp2 = solution

    return EstimationResult(
        case=EstimationCase.DEGENERATE,
        parameters={
            "g_res": math.sqrt(_nonnegative("g_res^2", four_g2 / 4.0)),
            "g_off": math.sqrt(_nonnegative("g_off^2", four_gp2 / 4.0)),
            "gamma_tilde": gamma_tilde,
            "gamma_dephasing": _dephasing(gamma_tilde, known),
        },
        residual_norm=residual,
        condition=condition,
        equation_residuals=_families(matrix @ solution - rhs),
    )


# ----------------------------------------------------------------------
# g_off = 0
# ----------------------------------------------------------------------

def _resonant_series(probes):
    """
    With g_off = 0 the internal current into R mirrors the one into L
    (phi_R = -phi_L), so the right lead only contributes I_R itself.
    """
    phi = probes.left("phi")
    current_right = np.array([snapshot.current(1) for snapshot in probes.snapshots], dtype=float)
    chi_right_dot = -phi - current_right
    dchi = probes.left("chi") - probes.right("chi")
    dchi_dot = probes.left("chi_dot") - chi_right_dot
    return 2.0 * phi, 2.0 * probes.left("phi_dot"), 2.0 * probes.left("phi_ddot"), dchi, dchi_dot


def estimate_resonant(snapshots, known, grid_points=600):
    """
    g_off = 0 with delta, g_res and Gamma-tilde unknown:
      dphi'' + Gt dphi' + (Gt^2/4 + delta^2) dphi + g^2 (4 dchi' + 2 Gt dchi) = 0.
    The identity is linear in (delta^2, g^2) for fixed Gt, so Gt is found by
    variable projection and all three are then refined together.
    """
    probes = ProbeSeries(snapshots, known)
    probes.require(EstimationCase.RESONANT)
    dphi, dphi_dot, dphi_ddot, dchi, dchi_dot = _resonant_series(probes)

    def linear_part(gamma_tilde):
        matrix = np.column_stack([dphi, 4.0 * dchi_dot + 2.0 * gamma_tilde * dchi])
        rhs = -(dphi_ddot + gamma_tilde * dphi_dot + 0.25 * gamma_tilde ** 2 * dphi)
        solution, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
        return solution, matrix @ solution - rhs

    def projected(gamma_tilde):
        return float(np.sum(linear_part(gamma_tilde)[1] ** 2))

    gamma_total = known.gamma_total
    grid = np.geomspace(0.5 * gamma_total, 1e3 * gamma_total, grid_points)
    best = int(np.argmin([projected(value) for value in grid]))
    lower, upper = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
    search = minimize_scalar(
        projected, bounds=(lower, upper), method="bounded", options={"xatol": 1e-13 * upper}
    )
    gamma_tilde = float(search.x)
    (delta2, g2), _ = linear_part(gamma_tilde)

    def residuals(theta):
        gt, d2, gg = theta
        return (dphi_ddot + gt * dphi_dot + (0.25 * gt ** 2 + d2) * dphi
                + gg * (4.0 * dchi_dot + 2.0 * gt * dchi))

    theta, residual = _refine(residuals, np.array([gamma_tilde, delta2, g2]))
    gamma_tilde, delta2, g2 = theta
    jacobian = np.column_stack([
        dphi_dot + 0.5 * gamma_tilde * dphi + 2.0 * g2 * dchi,
        dphi,
        4.0 * dchi_dot + 2.0 * gamma_tilde * dchi,
    ])
    return EstimationResult(
        case=EstimationCase.RESONANT,
        parameters={
            "g_res": math.sqrt(_nonnegative("g_res^2", g2)),
            "delta": math.sqrt(_nonnegative("delta^2", delta2, gamma_tilde ** 2)),
            "gamma_tilde": gamma_tilde,
            "gamma_dephasing": _dephasing(gamma_tilde, known),
        },
        residual_norm=residual,
        condition=_condition(jacobian),
        notes=("delta reported as |delta|",),
        equation_residuals=_families(residuals(theta), names=("phi_difference",)),
    )


# ----------------------------------------------------------------------
# General case
# ----------------------------------------------------------------------

def _general_columns(probes, gamma_tilde, has_delta, has_energy):
    """
    Columns of the lifted linear system, as (name, alpha rows, beta rows).
    With Gt unknown the unknowns are
      a = Gt, b = Gt^2/4 + delta^2, c = 4 g^2, d = 2 g^2 Gt  (and b', c', d');
    with Gt known the a term moves to the right-hand side and c, d merge.
    """
    zeros = np.zeros(len(probes))
    chi_term = probes.chi_sum + 1.0
    columns = []
    if gamma_tilde is None:
        columns.append(("a", probes.dphi_dot, probes.phi_sum_dot))
    if has_delta:
        columns.append(("b", probes.dphi, zeros))
    if gamma_tilde is None:
        columns += [("c", probes.dchi_dot, zeros), ("d", probes.dchi, zeros)]
    else:
        columns.append(("c", probes.dchi_dot + 0.5 * gamma_tilde * probes.dchi, zeros))
    if has_energy:
        columns.append(("b_prime", zeros, probes.phi_sum))
    if gamma_tilde is None:
        columns += [("c_prime", zeros, probes.chi_sum_dot), ("d_prime", zeros, chi_term)]
    else:
        columns.append(("c_prime", zeros, probes.chi_sum_dot + 0.5 * gamma_tilde * chi_term))
    return columns


def estimate_general(snapshots, known, gamma_tilde=None):
    """
    Two identities per probe,
      dphi'' + Gt dphi' + (Gt^2/4 + delta^2) dphi + 4 g^2 dchi' + 2 g^2 Gt dchi = 0
      Phi''  + Gt Phi'  + (Gt^2/4 + E^2) Phi + 4 g'^2 X' + 2 g'^2 Gt (X + 1) = 0,
    solved first in lifted linear unknowns and then refined in the physical
    parameters. A phi family that vanishes identically means its coupling is
    zero, and the matching energy is reported unidentifiable.
    """
    probes = ProbeSeries(snapshots, known)
    probes.require(EstimationCase.GENERAL, gamma_tilde_known=gamma_tilde is not None)
    n = len(probes)
    chi_term = probes.chi_sum + 1.0
    scale = max(
        float(np.max(np.abs(column)))
        for column in (probes.dphi_dot, probes.dphi, probes.dchi, probes.phi_sum_dot, probes.phi_sum, chi_term)
    )
    floor = NULL_COLUMN * scale * math.sqrt(n)
    has_delta = bool(np.linalg.norm(probes.dphi) > floor)
    has_energy = bool(np.linalg.norm(probes.phi_sum) > floor)
    unidentifiable = [
        name for name, present in (("delta", has_delta), ("doublon_energy", has_energy)) if not present
    ]

    columns = _general_columns(probes, gamma_tilde, has_delta, has_energy)
    matrix = np.vstack([
        np.column_stack([alpha for _, alpha, _ in columns]),
        np.column_stack([beta for _, _, beta in columns]),
    ])
    rhs = -np.concatenate([probes.dphi_ddot, probes.phi_sum_ddot])
    if gamma_tilde is not None:
        rhs = rhs - gamma_tilde * np.concatenate([probes.dphi_dot, probes.phi_sum_dot])
    solution, linear_residual, condition = _solve(matrix, rhs, probes, "general case")
    lifted = dict(zip((name for name, _, _ in columns), solution))

    a = lifted.get("a", gamma_tilde)
    start = []
    if gamma_tilde is None:
        start.append(a)
    if has_delta:
        start.append(_nonnegative("delta^2", lifted["b"] - 0.25 * a ** 2, a ** 2))
    if has_energy:
        start.append(_nonnegative("E^2", lifted["b_prime"] - 0.25 * a ** 2, a ** 2))
    start += [_nonnegative("g_res^2", lifted["c"] / 4.0), _nonnegative("g_off^2", lifted["c_prime"] / 4.0)]
    logger.debug("General estimation: linear stage residual %.2e, start %s", linear_residual, start)

    def unpack(theta):
        values = list(theta)
        gt = values.pop(0) if gamma_tilde is None else gamma_tilde
        d2 = values.pop(0) if has_delta else 0.0
        e2 = values.pop(0) if has_energy else 0.0
        return gt, d2, e2, values.pop(0), values.pop(0)

    def residuals(theta):
        gt, d2, e2, gg, ggp = unpack(theta)
        first = (probes.dphi_ddot + gt * probes.dphi_dot + (0.25 * gt ** 2 + d2) * probes.dphi
                 + 4.0 * gg * probes.dchi_dot + 2.0 * gg * gt * probes.dchi)
        second = (probes.phi_sum_ddot + gt * probes.phi_sum_dot + (0.25 * gt ** 2 + e2) * probes.phi_sum
                  + 4.0 * ggp * probes.chi_sum_dot + 2.0 * ggp * gt * chi_term)
        return np.concatenate([first, second])

    theta, residual = _refine(residuals, np.array(start, dtype=float))
    gt, delta2, energy2, g2, gp2 = unpack(theta)

    parameters = {
        "g_res": math.sqrt(max(g2, 0.0)),
        "g_off": math.sqrt(max(gp2, 0.0)),
        "delta": math.sqrt(max(delta2, 0.0)) if has_delta else None,
        "doublon_energy": math.sqrt(max(energy2, 0.0)) if has_energy else None,
        "gamma_tilde": gt,
        "gamma_dephasing": _dephasing(gt, known),
    }
    notes = ["delta and E reported as magnitudes"]
    notes.extend(f"{name} unidentifiable: its coupling vanishes" for name in unidentifiable)
    logger.info("General estimation: %s (residual %.2e, condition %.2e)", parameters, residual, condition)
    return EstimationResult(
        case=EstimationCase.GENERAL,
        parameters=parameters,
        residual_norm=residual,
        condition=condition,
        unidentifiable=tuple(unidentifiable),
        notes=tuple(notes),
        equation_residuals=_families(residuals(theta)),
    )


def estimate(case, snapshots, known, gamma_tilde=None):
    case = EstimationCase(case)
    if case == EstimationCase.GENERAL:
        return estimate_general(snapshots, known, gamma_tilde)
    if case == EstimationCase.DEGENERATE:
        return estimate_degenerate(snapshots, known, gamma_tilde)
    if case == EstimationCase.RESONANT:
        return estimate_resonant(snapshots, known)
    return estimate_g_res_gamma_tilde(snapshots, known)
