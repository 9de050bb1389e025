from typing import Optional

import numpy as np
from ninja import Schema


class EquationResidualSchema(Schema):
    name: str
    residual: float


class EquationFamilySchema(Schema):
    """One transport identity evaluated at every estimation time."""

    name: str
    residuals: list[float]
    norm: float


class EstimationSchema(Schema):
    case: str
    probe_times: list[float]
    parameters: dict[str, Optional[float]]
    true_parameters: dict[str, float] = {}
    relative_errors: dict[str, float] = {}
    residual_norm: float
    condition: float
    unidentifiable: list[str] = []
    notes: list[str] = []
    equations: list[EquationFamilySchema] = []
    closure: list[EquationResidualSchema] = []


def estimation_schema(result, probe_times, truth=None, closure=()):
    truth = truth or {}
    errors = {}
    for name, value in result.parameters.items():
        reference = truth.get(name)
        if value is None or reference is None:
            continue
        errors[name] = abs(value - reference) / abs(reference) if reference else abs(value)
    return EstimationSchema(
        case=result.case.value,
        probe_times=[float(t) for t in probe_times],
        parameters=dict(result.parameters),
        true_parameters={name: value for name, value in truth.items() if name in result.parameters},
        relative_errors=errors,
        residual_norm=result.residual_norm,
        condition=result.condition,
        unidentifiable=list(result.unidentifiable),
        notes=list(result.notes),
        equations=[
            EquationFamilySchema(name=name, residuals=list(values), norm=float(np.linalg.norm(values)))
            for name, values in result.equation_residuals.items()
        ],
        closure=[EquationResidualSchema(name=name, residual=value) for name, value in closure],
    )
