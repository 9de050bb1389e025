"""
Measurement mode: sampled current traces with white Gaussian noise and
local-polynomial derivative estimates.

Each time point is measured samples_per_point times and averaged, so the
mean carries noise of standard deviation current_std / sqrt(samples). One
child seed per time point keeps runs reproducible under a fixed seed.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import savgol_coeffs, savgol_filter

from qubits.exceptions import ConfigurationError
from qubits.operators import LEFT, RIGHT
from transport.records import RECORD_COLUMNS, TransportRecord, derivative_column

logger = logging.getLogger(__name__)

UNIFORM_GRID_TOL = 1e-9


@dataclass(frozen=True)
class NoisyDerivativeEstimator:
    """Savitzky-Golay fits of a fixed odd window on a uniform grid."""

    window: int = 11
    poly_order: int = 4

    def __post_init__(self):
        if self.window < 5 or self.window % 2 == 0:
            raise ConfigurationError(f"window must be an odd integer >= 5, got {self.window}")
        if not 1 <= self.poly_order <= 4 or self.poly_order >= self.window:
            raise ConfigurationError(f"poly_order must lie in 1..4 and below window, got {self.poly_order}")

    def _spacing(self, times):
        steps = np.diff(times)
        if steps.size == 0 or np.max(np.abs(steps - steps[0])) > UNIFORM_GRID_TOL * max(abs(steps[0]), 1.0):
            raise ConfigurationError("Derivative estimation needs a uniform (linear) time grid")
        return float(steps[0])

    def estimate(self, times, values, k):
        """k-th derivative of the sampled series at every grid point."""
        values = np.asarray(values, dtype=float)
        if k == 0:
            return values.copy()
        if k > self.poly_order:
            raise ConfigurationError(f"Derivative order {k} exceeds poly_order {self.poly_order}")
        if values.size < self.window:
            raise ConfigurationError(
                f"Derivative window {self.window} is longer than the series ({values.size} points)"
            )
        spacing = self._spacing(np.asarray(times, dtype=float))
        return savgol_filter(values, self.window, self.poly_order, deriv=k, delta=spacing, mode="interp")

    def variance(self, times, sample_std, k):
        """Noise variance of the k-th derivative estimate at interior points."""
        if k == 0:
            return sample_std ** 2
        spacing = self._spacing(np.asarray(times, dtype=float))
        coefficients = savgol_coeffs(self.window, self.poly_order, deriv=k, delta=spacing, use="dot")
        return sample_std ** 2 * float(np.sum(coefficients ** 2))

    def peak_variance(self, times, sample_std, k):
        """Largest noise variance of the k-th derivative estimate over the grid, edge fits included."""
        if k == 0:
            return sample_std ** 2
        spacing = self._spacing(np.asarray(times, dtype=float))
        spreads = [
            np.sum(savgol_coeffs(self.window, self.poly_order, deriv=k, delta=spacing, pos=pos, use="dot") ** 2)
            for pos in range(self.window // 2 + 1)
        ]
        return sample_std ** 2 * float(max(spreads))


@dataclass(frozen=True)
class NoisyRecord:
    record: TransportRecord
    sample_std: float
    variances: dict
    # worst row per column, S_LR included
    gate_variances: dict = field(default_factory=dict)


def sample_noise(record, noise, gamma_scale):
    """
    Noisy copy of the measured columns I_L, I_R and I_LR. The joint current
    is scaled by the largest bath rate so that its noise is comparable.
    """
    sample_std = noise.current_std / math.sqrt(noise.samples_per_point)
    children = np.random.SeedSequence(noise.seed).spawn(len(record))
    draws = np.array([np.random.default_rng(child).standard_normal(3) for child in children])
    measured = {}
    for index, (name, scale) in enumerate((("I_L", 1.0), ("I_R", 1.0), ("I_LR", gamma_scale))):
        measured[name] = record.column(name) + sample_std * scale * draws[:, index]
    logger.info(
        "Sampled %d points with noise %.3e per point (seed %d)", len(record), sample_std, noise.seed
    )
    return measured, sample_std


def noisy_record(record, noise, gamma_scale, k_max=3):
    """Measurement-mode TransportRecord: noisy k = 0 data plus estimated derivatives."""
    record.require(("I_L", "I_R", "I_LR"))
    estimator = NoisyDerivativeEstimator(noise.window, noise.poly_order)
    measured, sample_std = sample_noise(record, noise, gamma_scale)
    times = record.times

    columns = {name: np.full(len(record), np.nan) for name in RECORD_COLUMNS[1:]}
    variances = {}
    for lead, name in ((LEFT, "I_L"), (RIGHT, "I_R")):
        for k in range(k_max + 1):
            column = derivative_column(lead, k)
            columns[column] = estimator.estimate(times, measured[name], k)
            variances[column] = estimator.variance(times, sample_std, k)
    columns["I_LR"] = measured["I_LR"]
    columns["S_LR"] = measured["I_LR"] - measured["I_L"] * measured["I_R"]
    variances["I_LR"] = (sample_std * gamma_scale) ** 2
    noisy = TransportRecord(times, columns)
    return NoisyRecord(
        noisy, sample_std, variances, gate_variances(noisy, noise, gamma_scale, k_max)
    )


def gate_variances(record, noise, gamma_scale, k_max=3):
    """
    Worst-row noise variance of every column a measured record carries.
    S_LR = I_LR - I_L I_R is bounded through the largest current magnitudes.
    """
    estimator = NoisyDerivativeEstimator(noise.window, noise.poly_order)
    sample_std = noise.current_std / math.sqrt(noise.samples_per_point)
    times = record.times
    variances = {
        derivative_column(lead, k): estimator.peak_variance(times, sample_std, k)
        for lead in (LEFT, RIGHT)
        for k in range(k_max + 1)
    }
    variances["I_LR"] = (sample_std * gamma_scale) ** 2
    peak = {lead: float(np.nanmax(np.abs(record.column(derivative_column(lead, 0))))) for lead in (LEFT, RIGHT)}
    variances["S_LR"] = (sample_std * (gamma_scale + peak[LEFT] + peak[RIGHT])) ** 2
    return variances
