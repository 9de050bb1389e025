"""
Configuration schemas for a register of bath-coupled qubits.

Qubit 0 is the left qubit L and qubit 1 the right qubit R; the coupling
terms U, g_res and g_off always act between those two.
"""

from enum import Enum
from typing import Optional

import numpy as np
from ninja import Schema
from pydantic import ConfigDict, Field, model_validator

from qubits.operators import (
    LEFT,
    RIGHT,
    dimension,
    number_operator,
    sigma_minus,
    sigma_plus,
)


class Statistics(str, Enum):
    FERMIONIC = "fermionic"
    BOSONIC = "bosonic"


class BathSpec(Schema):
    model_config = ConfigDict(extra="forbid", frozen=True)

    qubit: int = Field(..., ge=0)
    statistics: Statistics = Statistics.FERMIONIC
    gamma_bare: Optional[float] = Field(None, ge=0)
    temperature: Optional[float] = Field(None, gt=0)
    chem_potential: float = 0.0
    # explicit rates override the thermal computation
    gamma_plus: Optional[float] = Field(None, ge=0)
    gamma_minus: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _check_rate_source(self):
        explicit = (self.gamma_plus is not None, self.gamma_minus is not None)
        if any(explicit) and not all(explicit):
            raise ValueError("gamma_plus and gamma_minus must be given together")
        if not all(explicit) and (self.gamma_bare is None or self.temperature is None):
            raise ValueError(
                "bath needs either explicit gamma_plus/gamma_minus or gamma_bare and temperature"
            )
        return self


class DerivedQuantities(Schema):
    """Rates and combinations every formula downstream reads."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma_plus: tuple[float, ...]
    gamma_minus: tuple[float, ...]
    gamma_lead: tuple[float, ...]
    gamma_total: float
    gamma_dephasing: float
    gamma_tilde: float
    delta: float
    doublon_energy: float

    def chi(self, qubit, current):
        """chi_j = (I_j - gamma_j^+) / Gamma_j, i.e. minus the occupation."""
        return (current - self.gamma_plus[qubit]) / self.gamma_lead[qubit]


class SystemConfig(Schema):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_qubits: int = Field(2, ge=1, le=6)
    eps: tuple[float, ...] = (0.0, 0.0)
    u_int: float = 0.0
    g_res: float = 0.0
    g_off: float = 0.0
    drive: Optional[tuple[float, ...]] = None
    baths: tuple[BathSpec, ...] = ()
    gamma_z: Optional[tuple[float, ...]] = None

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.n_qubits
        if len(self.eps) != n:
            raise ValueError(f"eps needs {n} entries, got {len(self.eps)}")
        if self.drive is not None and len(self.drive) != n:
            raise ValueError(f"drive needs {n} entries, got {len(self.drive)}")
        if self.gamma_z is not None:
            if len(self.gamma_z) != n:
                raise ValueError(f"gamma_z needs {n} entries, got {len(self.gamma_z)}")
            if any(rate < 0 for rate in self.gamma_z):
                raise ValueError("gamma_z entries must be non-negative")
        seen = set()
        for bath in self.baths:
            if bath.qubit >= n:
                raise ValueError(f"bath on qubit {bath.qubit} outside register of {n}")
            if bath.qubit in seen:
                raise ValueError(f"qubit {bath.qubit} has more than one bath")
            seen.add(bath.qubit)
        if n < 2 and (self.u_int or self.g_res or self.g_off):
            raise ValueError("u_int, g_res and g_off need at least two qubits")
        return self

    # ------------------------------------------------------------------

    @property
    def drives(self):
        return self.drive if self.drive is not None else (0.0,) * self.n_qubits

    @property
    def dephasing_rates(self):
        return self.gamma_z if self.gamma_z is not None else (0.0,) * self.n_qubits

    @property
    def lead_qubits(self):
        return tuple(sorted(bath.qubit for bath in self.baths))

    @property
    def has_drive(self):
        return any(self.drives)

    def bath_for(self, qubit):
        for bath in self.baths:
            if bath.qubit == qubit:
                return bath
        return None

    def rates(self):
        """(gamma_plus, gamma_minus) tuples indexed by qubit, zero when uncoupled."""
        from qubits.rates import bath_rates

        plus = [0.0] * self.n_qubits
        minus = [0.0] * self.n_qubits
        for bath in self.baths:
            plus[bath.qubit], minus[bath.qubit] = bath_rates(bath, self.eps[bath.qubit])
        return tuple(plus), tuple(minus)

    def derived(self):
        plus, minus = self.rates()
        lead = tuple(p + m for p, m in zip(plus, minus))
        dephasing = sum(self.dephasing_rates[:2])
        total = sum(lead[:2])
        if self.n_qubits >= 2:
            delta = self.eps[LEFT] - self.eps[RIGHT]
            doublon = self.eps[LEFT] + self.eps[RIGHT] + self.u_int
        else:
            delta = 0.0
            doublon = 0.0
        return DerivedQuantities(
            gamma_plus=plus,
            gamma_minus=minus,
            gamma_lead=lead,
            gamma_total=total,
            gamma_dephasing=dephasing,
            gamma_tilde=total + 2.0 * dephasing,
            delta=delta,
            doublon_energy=doublon,
        )

    def hamiltonian(self):
        n = self.n_qubits
        h = np.zeros((dimension(n), dimension(n)), dtype=complex)
        for qubit in range(n):
            h += self.eps[qubit] * number_operator(qubit, n)
            f = self.drives[qubit]
            if f:
                h += f * (sigma_plus(qubit, n) + sigma_minus(qubit, n))
        if n >= 2:
            h += self.u_int * number_operator(LEFT, n) @ number_operator(RIGHT, n)
            hop = sigma_plus(LEFT, n) @ sigma_minus(RIGHT, n)
            pair = sigma_plus(LEFT, n) @ sigma_plus(RIGHT, n)
            h += self.g_res * (hop + hop.conj().T)
            h += self.g_off * (pair + pair.conj().T)
        return h

    def with_updates(self, **changes):
        return self.model_validate({**self.model_dump(), **changes})
