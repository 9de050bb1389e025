"""
Scenario files: a system, an initial state, a time grid and what to do
with them. Unknown keys are rejected.
"""

import json
from enum import Enum
from typing import Optional

import numpy as np
from ninja import Schema
from pydantic import ConfigDict, Field, ValidationError, model_validator

from estimation.probes import EstimationCase
from qubits.exceptions import ConfigurationError
from qubits.schemas import SystemConfig
from qubits.states import BELL_KETS, DensityOperator
from tomography.reconstruction import ReconstructionLevel
from tomography.schemas import CompletenessSchema


class Pipeline(str, Enum):
    EXACT = "exact"
    NOISY = "noisy"


class Spacing(str, Enum):
    LINEAR = "linear"
    LOG = "log"


class InitialKind(str, Enum):
    GROUND = "ground"
    MAXIMALLY_MIXED = "maximally_mixed"
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    EXPLICIT = "explicit"


class InitialState(Schema):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: InitialKind = InitialKind.GROUND
    # explicit matrices as rows of [re, im] pairs
    matrix: Optional[tuple[tuple[tuple[float, float], ...], ...]] = None

    @model_validator(mode="after")
    def _check_matrix(self):
        if (self.kind == InitialKind.EXPLICIT) != (self.matrix is not None):
            raise ValueError("matrix is required for kind 'explicit' and only allowed there")
        return self

    def density_operator(self, n_qubits):
        if self.kind == InitialKind.GROUND:
            return DensityOperator.ground(n_qubits)
        if self.kind == InitialKind.MAXIMALLY_MIXED:
            return DensityOperator.maximally_mixed(n_qubits)
        if self.kind.value in BELL_KETS:
            if n_qubits != 2:
                raise ConfigurationError("Bell initial states need two qubits")
            return DensityOperator.bell(self.kind.value)
        values = np.array(self.matrix, dtype=float)
        if values.ndim != 3 or values.shape[0] != values.shape[1] or values.shape[0] != 2 ** n_qubits:
            raise ConfigurationError(
                f"Explicit initial matrix must be {2 ** n_qubits}x{2 ** n_qubits} [re, im] pairs"
            )
        return DensityOperator(values[..., 0] + 1j * values[..., 1])


class TimeGrid(Schema):
    model_config = ConfigDict(extra="forbid", frozen=True)

    t_start: float = Field(0.0, ge=0)
    t_end: float = Field(..., gt=0)
    n_points: int = Field(101, ge=1)
    spacing: Spacing = Spacing.LINEAR

    @model_validator(mode="after")
    def _check_range(self):
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.spacing == Spacing.LOG and self.t_start <= 0:
            raise ValueError("log spacing needs t_start > 0")
        return self

    def times(self):
        if self.n_points == 1:
            return np.array([self.t_end])
        if self.spacing == Spacing.LOG:
            return np.geomspace(self.t_start, self.t_end, self.n_points)
        return np.linspace(self.t_start, self.t_end, self.n_points)


class NoiseSpec(Schema):
    """White Gaussian noise on every current sample, averaged per time point."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    current_std: float = Field(1e-4, ge=0)
    samples_per_point: int = Field(10_000, ge=1)
    seed: int = 0
    window: int = Field(11, ge=5)
    poly_order: int = Field(4, ge=1, le=4)

    @model_validator(mode="after")
    def _check_window(self):
        if self.window % 2 == 0:
            raise ValueError("window must be odd")
        if self.poly_order >= self.window:
            raise ValueError("poly_order must be smaller than window")
        return self


class Output(str, Enum):
    TRAJECTORY = "trajectory"
    TRANSPORT = "transport"
    RECONSTRUCTION = "reconstruction"
    ESTIMATION = "estimation"
    ANALYSIS = "analysis"
    CONCURRENCE = "concurrence"


class EstimationSpec(Schema):
    model_config = ConfigDict(extra="forbid", frozen=True)

    case: EstimationCase = EstimationCase.GENERAL
    probe_times: Optional[tuple[float, ...]] = None
    gamma_tilde_known: bool = False


class ScenarioConfig(Schema):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "scenario"
    system: SystemConfig
    initial_state: InitialState = InitialState()
    time_grid: TimeGrid
    pipeline: Pipeline = Pipeline.EXACT
    noise: NoiseSpec = NoiseSpec()
    outputs: tuple[Output, ...] = (Output.TRAJECTORY, Output.TRANSPORT)
    k_max: int = Field(3, ge=0, le=3)
    level: ReconstructionLevel = ReconstructionLevel.FULL
    estimation: EstimationSpec = EstimationSpec()

    def initial_density(self):
        return self.initial_state.density_operator(self.system.n_qubits)


def load_scenario(path):
    """Read and validate a JSON scenario; any problem is a ConfigurationError."""
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        errors = [
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
        ]
        raise ConfigurationError(f"{path}: invalid scenario", {"errors": errors}) from exc


# --- Reports ---


class SeedSchema(Schema):
    label: str
    krylov_dimension: int
    closure_residual: float
    matrix_rank: int
    # |<rho_i, n_P>| for each eigenvalue, in the order of spectrum.eigenvalues
    overlaps: list[float] = []
    reachable_count: Optional[int] = None
    reduced_count: Optional[int] = None
    closure_order: int
    closure_ill_conditioned: bool = False


class SpectrumSchema(Schema):
    # (re, im) pairs
    eigenvalues: list[tuple[float, float]]
    degeneracy_clusters: list[list[int]] = []
    eigenvector_condition: float
    vandermonde_condition: Optional[float] = None
    biorthogonality_residual: Optional[float] = None
    near_defective: bool
    conjugate_pairs: bool
    degenerate: bool
    observable_dimension: int


class AnalysisSchema(Schema):
    name: str
    completeness: CompletenessSchema
    coherences: dict[str, str]
    seeds: list[SeedSchema]
    spectrum: SpectrumSchema
    warnings: list[str] = []


class ConcurrenceRowSchema(Schema):
    time: float
    state: float
    transport: Optional[float] = None
    branch: Optional[str] = None
    partial: bool = False


class ConcurrenceReportSchema(Schema):
    name: str
    method: Optional[str] = None
    rows: list[ConcurrenceRowSchema]
    steady_state: Optional[float] = None
    max_deviation: Optional[float] = None
    flags: list[str] = []


class SimulationSchema(Schema):
    name: str
    pipeline: str
    n_points: int
    k_max: int
    sample_std: Optional[float] = None
    max_current_deviation: Optional[float] = None
    warnings: list[str] = []
