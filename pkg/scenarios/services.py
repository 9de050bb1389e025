"""
Scenario services behind the management commands.

Each service follows the same pattern:
  - built from a validated ScenarioConfig
  - .run(...) computes everything in memory and returns a result object or
    report schema; writing files is left to the command
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from entanglement.concurrence import (
    concurrence_transport_general,
    concurrence_transport_special,
    concurrence_x_state,
    wootters_full,
)
from estimation.closure import krylov_closure_coefficients
from estimation.probes import MIN_PROBES, EstimationCase, probe_snapshots, suggest_probe_times
from estimation.schemas import estimation_schema
from estimation.services import estimate
from krylov.arnoldi import krylov_matrix_rank, observable_space, occupation_seeds, seed_label
from krylov.spectral import spectral_analysis
from lindblad.propagation import steady_state
from lindblad.superoperators import adjoint
from qubits.exceptions import ConfigurationError, DegenerateSteadyStateError
from qubits.operators import nonempty_subsets
from qubits.rates import validity_check
from qubits.states import is_x_shaped
from scenarios.noise import gate_variances, noisy_record
from scenarios.schemas import (
    AnalysisSchema,
    ConcurrenceReportSchema,
    ConcurrenceRowSchema,
    Pipeline,
    SeedSchema,
    SimulationSchema,
    SpectrumSchema,
)
from tomography.completeness import coherence_summary, completeness_report
from tomography.projections import project_state
from tomography.reconstruction import (
    ElementStatus,
    KnownParameters,
    NoiseGates,
    ReconstructionInput,
    ReconstructionLevel,
    reconstruct_state,
    steady_state_qst,
)
from tomography.schemas import ReconstructionReportSchema, completeness_schema, reconstruction_schema
from transport.observables import TransportModel, transport_record

logger = logging.getLogger(__name__)

CASE_TOL = 1e-12
LEVEL_COLUMNS = {
    ReconstructionLevel.POPULATIONS: ("I_L", "I_R", "S_LR"),
    ReconstructionLevel.IMAGINARY: ("I_L", "I_R", "S_LR", "dI_L", "dI_R"),
    ReconstructionLevel.FULL: ("I_L", "I_R", "S_LR", "dI_L", "dI_R", "d2I_L", "d2I_R"),
}


def true_values(matrix):
    """Reference values of every element the reconstruction reports."""
    alpha, beta = matrix[1, 2], matrix[0, 3]
    return {
        "r_00": matrix[0, 0].real,
        "r_01": matrix[1, 1].real,
        "r_10": matrix[2, 2].real,
        "r_11": matrix[3, 3].real,
        "re_alpha": alpha.real,
        "im_alpha": alpha.imag,
        "re_beta": beta.real,
        "im_beta": beta.imag,
    }


def element_errors(state, matrix):
    truth = true_values(matrix)
    errors = {name: abs(getattr(state.populations, name) - truth[name]) for name in truth if name.startswith("r_")}
    for name, estimate_ in state.elements.items():
        if estimate_.status == ElementStatus.RECONSTRUCTED:
            errors[name] = abs(estimate_.value - truth[name])
    return errors


@dataclass(frozen=True)
class SimulationResult:
    trajectory: object
    exact: object
    record: object
    sample_std: Optional[float] = None
    variances: Optional[dict] = None
    gate_variances: Optional[dict] = None


class SimulationService:
    """rho(t) on the time grid and the transport record measured along it."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.config = scenario.system
        self.model = TransportModel(self.config)

    def run(self):
        scenario = self.scenario
        times = scenario.time_grid.times()
        trajectory = self.model.propagator.evolve_many(scenario.initial_density(), times)
        exact = transport_record(trajectory, self.model, scenario.k_max)
        if scenario.pipeline == Pipeline.EXACT:
            return SimulationResult(trajectory, exact, exact)
        gamma_scale = max(self.model.derived.gamma_lead)
        noisy = noisy_record(exact, scenario.noise, gamma_scale, scenario.k_max)
        return SimulationResult(
            trajectory, exact, noisy.record, noisy.sample_std, noisy.variances, noisy.gate_variances
        )

    @staticmethod
    def _current_deviation(result):
        if result.record is result.exact:
            return None
        deviations = [
            np.nanmax(np.abs(result.record.column(name) - result.exact.column(name)))
            for name in ("I_L", "I_R")
            if result.exact.available(name)
        ]
        return float(max(deviations)) if deviations else None

    def summary(self, result):
        return SimulationSchema(
            name=self.scenario.name,
            pipeline=self.scenario.pipeline.value,
            n_points=len(result.trajectory),
            k_max=self.scenario.k_max,
            sample_std=result.sample_std,
            max_current_deviation=self._current_deviation(result),
            warnings=validity_check(self.config),
        )


class ReconstructionService:
    def __init__(self, scenario, level=None, steady=False):
        self.scenario = scenario
        self.config = scenario.system
        self.level = ReconstructionLevel(level or scenario.level)
        self.steady = steady

    def _report(self, states, truths, sample_std=None, variances=None, noise=None):
        rows, all_errors, population_errors = [], [], []
        for state, matrix in zip(states, truths):
            errors = element_errors(state, matrix) if matrix is not None else {}
            all_errors.extend(errors.values())
            population_errors.extend(value for name, value in errors.items() if name.startswith("r_"))
            rows.append(reconstruction_schema(state, errors))
        return ReconstructionReportSchema(
            pipeline=self.scenario.pipeline.value,
            level=self.level.value,
            rows=rows,
            max_error=float(np.max(all_errors)) if all_errors else None,
            median_error=float(np.median(all_errors)) if all_errors else None,
            population_median_error=float(np.median(population_errors)) if population_errors else None,
            sample_std=sample_std,
            derivative_variances=variances or {},
            noise_gate_sigmas=noise.sigmas if noise is not None else None,
        )

    def run_steady_state(self):
        """Single late-time reconstruction from steady-state currents."""
        model = TransportModel(self.config)
        rho = steady_state(model.lindbladian)
        snapshot = model.snapshot(rho, self.scenario.time_grid.t_end, k_max=0)
        known = KnownParameters.from_config(self.config)
        state = steady_state_qst(ReconstructionInput(snapshot, known, notes=("steady state",)))
        self.level = ReconstructionLevel.FULL
        return self._report([state], [rho.matrix])

    def run(self, record=None, simulation=None):
        """
        Reconstruct every row of `record`, or of a fresh simulation when no
        record is given. Errors are reported when the simulated states are
        available.
        """
        if self.steady:
            return self.run_steady_state()
        truths = None
        sample_std, variances, gates = None, None, None
        if record is None:
            simulation = simulation or SimulationService(self.scenario).run()
            record = simulation.record
            truths = simulation.trajectory.matrices()
            sample_std, variances = simulation.sample_std, simulation.variances
            gates = simulation.gate_variances
        record.require(LEVEL_COLUMNS[self.level])
        if gates is None and self.scenario.pipeline == Pipeline.NOISY:
            gamma_scale = max(self.config.derived().gamma_lead)
            gates = gate_variances(record, self.scenario.noise, gamma_scale, self.scenario.k_max)
        noise = NoiseGates.from_variances(gates) if gates else None
        known = KnownParameters.from_config(self.config)
        states = [
            reconstruct_state(ReconstructionInput(snapshot, known, noise=noise), self.level)
            for snapshot in record.snapshots(self.scenario.k_max)
        ]
        logger.info("Reconstructed %d states at level %s", len(states), self.level.value)
        return self._report(
            states, truths if truths is not None else [None] * len(states), sample_std, variances, noise
        )


class EstimationService:
    def __init__(self, scenario, case=None):
        self.scenario = scenario
        self.config = scenario.system
        self.case = EstimationCase(case or scenario.estimation.case)
        self.model = TransportModel(self.config)

    def probe_times(self):
        chosen = self.scenario.estimation.probe_times
        if chosen:
            return np.array(chosen, dtype=float)
        return np.array(suggest_probe_times(self.model.derived.gamma_total, count=MIN_PROBES[self.case] + 1))

    def _snapshots(self, times):
        initial = self.scenario.initial_density()
        if self.scenario.pipeline == Pipeline.EXACT:
            path = self.model.propagator.path(initial)
            return probe_snapshots(self.model, path, times, k_max=3)
        record = SimulationService(self.scenario).run().record
        rows = sorted({int(np.argmin(np.abs(record.times - t))) for t in times})
        return [record.snapshot(row, 3) for row in rows]

    def _closure_residuals(self, times):
        """Closure relations evaluated on the simulated state at the first probe."""
        path = self.model.propagator.path(self.scenario.initial_density())
        rho = path(float(times[0]))
        residuals = []
        seeds = occupation_seeds(self.config)
        for leads in nonempty_subsets(self.config.lead_qubits):
            label = seed_label(leads)
            closure = krylov_closure_coefficients(self.model.lindbladian, seeds[label], label)
            projections = [
                project_state(leads, k, rho, self.model.lindbladian, self.config)
                for k in range(closure.order + 1)
            ]
            residuals.append((label, closure.residual(np.array(projections))))
            affine = closure.affine_residual(np.array(projections))
            if affine is not None:
                residuals.append((f"{label} affine", affine))
        return residuals

    def truth(self):
        d = self.model.derived
        return {
            "g_res": abs(self.config.g_res),
            "g_off": abs(self.config.g_off),
            "delta": abs(d.delta),
            "doublon_energy": abs(d.doublon_energy),
            "gamma_tilde": d.gamma_tilde,
            "gamma_dephasing": d.gamma_dephasing,
        }

    def run(self):
        times = self.probe_times()
        snapshots = self._snapshots(times)
        known = KnownParameters.from_config(
            self.config, unknown=("g_res", "g_off", "delta", "doublon_energy", "gamma_tilde")
        )
        gamma_tilde = self.model.derived.gamma_tilde if self.scenario.estimation.gamma_tilde_known else None
        result = estimate(self.case, snapshots, known, gamma_tilde)
        closure = self._closure_residuals(times) if self.scenario.pipeline == Pipeline.EXACT else ()
        return estimation_schema(result, [s.time for s in snapshots], self.truth(), closure)


class AnalysisService:
    """Observability of the state from transport for the scenario's system."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.config = scenario.system

    def run(self):
        if self.config.n_qubits != 2:
            raise ConfigurationError("analyze covers two-qubit registers")
        model = TransportModel(self.config)
        heisenberg = adjoint(model.lindbladian)
        report = completeness_report(self.config, model.lindbladian)
        bases, _ = observable_space(self.config, heisenberg)
        spectrum = spectral_analysis(model.lindbladian, config=self.config)
        seeds = occupation_seeds(self.config)

        seed_rows = []
        for basis in bases:
            closure = krylov_closure_coefficients(model.lindbladian, seeds[basis.label], basis.label)
            spectral = spectrum.seeds.get(basis.label)
            seed_rows.append(SeedSchema(
                label=basis.label,
                krylov_dimension=basis.dimension,
                closure_residual=basis.closure_residual,
                matrix_rank=krylov_matrix_rank(heisenberg, seeds[basis.label]),
                overlaps=[float(value) for value in np.abs(spectral.overlaps)] if spectral else [],
                reachable_count=spectral.reachable_count if spectral else None,
                reduced_count=spectral.reduced_count if spectral else None,
                closure_order=closure.order,
                closure_ill_conditioned=closure.ill_conditioned,
            ))

        return AnalysisSchema(
            name=self.scenario.name,
            completeness=completeness_schema(report),
            coherences={name: reach.value for name, reach in coherence_summary(report, self.config).items()},
            seeds=seed_rows,
            spectrum=spectrum_schema(spectrum),
            warnings=validity_check(self.config),
        )


def _finite(value):
    return float(value) if np.isfinite(value) else None


def spectrum_schema(spectrum):
    return SpectrumSchema(
        eigenvalues=[(float(value.real), float(value.imag)) for value in spectrum.eigenvalues],
        degeneracy_clusters=[list(cluster) for cluster in spectrum.clusters if len(cluster) > 1],
        eigenvector_condition=spectrum.eigenvector_condition,
        vandermonde_condition=_finite(spectrum.vandermonde_condition),
        biorthogonality_residual=_finite(spectrum.biorthogonality_residual),
        near_defective=spectrum.near_defective,
        conjugate_pairs=spectrum.conjugate_pairs,
        degenerate=spectrum.degenerate,
        observable_dimension=spectrum.observable_dimension,
    )


class ConcurrenceService:
    """C(t) from the simulated state and from the transport record."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.config = scenario.system

    def _special_case(self):
        d = self.config.derived()
        return (
            abs(self.config.g_off) <= CASE_TOL
            and abs(d.delta) <= CASE_TOL
            and self.scenario.initial_state.kind.value == "ground"
            and not self.config.has_drive
        )

    def run(self, simulation=None):
        special = self._special_case()
        needed = 1 if special else 2
        if self.scenario.k_max < needed:
            raise ConfigurationError(f"Transport concurrence needs derivatives up to order {needed} (k_max)")
        simulation = simulation or SimulationService(self.scenario).run()
        known = KnownParameters.from_config(self.config)
        x_shaped = is_x_shaped(self.scenario.initial_density()) and not self.config.has_drive
        flags = [] if x_shaped else ["evolution not X-shaped"]

        rows, deviations = [], []
        snapshots = simulation.record.snapshots(self.scenario.k_max)
        for state, snapshot in zip(simulation.trajectory.states, snapshots):
            state_based = (concurrence_x_state(state) if state.is_x_shaped() else wootters_full(state)).value
            if special:
                transport = concurrence_transport_special(snapshot, known)
            else:
                transport = concurrence_transport_general(snapshot, known, x_shaped=x_shaped)
            deviations.append(abs(transport.value - state_based))
            rows.append(ConcurrenceRowSchema(
                time=snapshot.time,
                state=state_based,
                transport=transport.value,
                branch=transport.branch,
                partial=transport.partial,
            ))

        try:
            steady = wootters_full(steady_state(TransportModel(self.config).lindbladian)).value
        except DegenerateSteadyStateError:
            steady = None
        return ConcurrenceReportSchema(
            name=self.scenario.name,
            method="transport_special" if special else "transport_general",
            rows=rows,
            steady_state=steady,
            max_deviation=max(deviations) if deviations else None,
            flags=flags,
        )
