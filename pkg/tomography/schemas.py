from typing import Optional

from ninja import Schema

from tomography.reconstruction import ElementStatus


# --- Reconstruction ---


class ElementSchema(Schema):
    name: str
    value: Optional[float] = None
    status: ElementStatus
    residual: Optional[float] = None
    consistent: bool = True


class PopulationsSchema(Schema):
    r_00: float
    r_01: float
    r_10: float
    r_11: float
    consistent: bool = True


class GammaTildeSchema(Schema):
    value: float
    gamma_dephasing: float
    alternatives: list[float] = []


class ReconstructionSchema(Schema):
    time: float
    level: str
    populations: PopulationsSchema
    elements: list[ElementSchema]
    flags: list[str] = []
    physical: bool = False
    matrix: Optional[str] = None
    gamma_tilde: Optional[GammaTildeSchema] = None
    errors: dict[str, float] = {}


class ReconstructionReportSchema(Schema):
    pipeline: str
    level: str
    rows: list[ReconstructionSchema]
    max_error: Optional[float] = None
    median_error: Optional[float] = None
    population_median_error: Optional[float] = None
    sample_std: Optional[float] = None
    derivative_variances: dict[str, float] = {}
    noise_gate_sigmas: Optional[float] = None


# --- Completeness ---


class DirectionSchema(Schema):
    name: str
    observability: str
    residual: float
    via_trace: bool = False


class CompletenessSchema(Schema):
    observable_dimension: int
    seed_dimensions: dict[str, int]
    budgets: dict[str, int]
    seed_reach: dict[str, list[str]] = {}
    directions: list[DirectionSchema]


def matrix_text_block(matrix):
    """Plain 4x4 complex matrix, one row per line."""
    return "\n".join(
        "  ".join(f"{value.real:+.12e}{value.imag:+.12e}j" for value in row) for row in matrix
    )


def reconstruction_schema(state, errors=None):
    gamma = state.gamma_tilde
    return ReconstructionSchema(
        time=state.time,
        level=state.level.value,
        populations=PopulationsSchema(**state.populations._asdict()),
        elements=[
            ElementSchema(
                name=estimate.name,
                value=estimate.value,
                status=estimate.status,
                residual=estimate.residual,
                consistent=estimate.consistent,
            )
            for estimate in state.elements.values()
        ],
        flags=list(state.flags),
        physical=state.physical,
        matrix=matrix_text_block(state.matrix) if state.matrix is not None else None,
        gamma_tilde=GammaTildeSchema(
            value=gamma.value,
            gamma_dephasing=gamma.gamma_dephasing,
            alternatives=list(gamma.alternatives),
        ) if gamma is not None else None,
        errors=errors or {},
    )


def completeness_schema(report):
    return CompletenessSchema(
        observable_dimension=report.observable_dimension,
        seed_dimensions=report.seed_dimensions,
        budgets=report.budgets,
        seed_reach={label: list(names) for label, names in report.seed_reach.items()},
        directions=[
            DirectionSchema(
                name=entry.name,
                observability=entry.observability.value,
                residual=entry.residual,
                via_trace=entry.via_trace,
            )
            for entry in report.entries
        ],
    )
