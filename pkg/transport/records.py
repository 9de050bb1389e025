"""
Transport data at one time (TransportSnapshot) and along a time grid
(TransportRecord), with the CSV layout shared by every command.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qubits.exceptions import ConfigurationError
from qubits.operators import LEAD_LABELS, LEFT, RIGHT, lead_label

logger = logging.getLogger(__name__)

DERIVATIVE_PREFIXES = ("", "d", "d2", "d3")
RECORD_COLUMNS = (
    "time",
    "I_L", "dI_L", "d2I_L", "d3I_L",
    "I_R", "dI_R", "d2I_R", "d3I_R",
    "I_LR", "S_LR", "A_L", "A_R", "I_S", "P_S",
)


def derivative_column(lead, k):
    return f"{DERIVATIVE_PREFIXES[k]}I_{lead_label(lead)}"


def format_value(value):
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    return "{:.17g}".format(value)


@dataclass(frozen=True)
class TransportSnapshot:
    """
    currents[j] holds (I_j, dI_j/dt, ...) up to the available order.
    """

    time: float
    currents: dict
    i_lr: Optional[float] = None
    s_lr: Optional[float] = None
    activities: dict = field(default_factory=dict)
    internal_current: Optional[float] = None
    pair_current: Optional[float] = None

    def order(self, lead):
        return len(self.currents.get(lead, ())) - 1

    def current(self, lead, k=0):
        values = self.currents.get(lead, ())
        if k >= len(values):
            raise ConfigurationError(
                f"Transport data lacks column {derivative_column(lead, k)}",
                {"missing": [derivative_column(lead, k)]},
            )
        return values[k]


@dataclass(frozen=True)
class TransportRecord:
    """Column arrays over a time grid; missing cells are NaN."""

    times: np.ndarray
    columns: dict

    @classmethod
    def from_snapshots(cls, snapshots, k_max=3):
        times = np.array([snapshot.time for snapshot in snapshots], dtype=float)
        columns = {name: np.full(times.size, np.nan) for name in RECORD_COLUMNS[1:]}
        for row, snapshot in enumerate(snapshots):
            for lead, values in snapshot.currents.items():
                if lead not in LEAD_LABELS:
                    continue
                for k, value in enumerate(values[: len(DERIVATIVE_PREFIXES)]):
                    columns[derivative_column(lead, k)][row] = value
                if lead in snapshot.activities:
                    columns[f"A_{lead_label(lead)}"][row] = snapshot.activities[lead]
            for name, value in (
                ("I_LR", snapshot.i_lr),
                ("S_LR", snapshot.s_lr),
                ("I_S", snapshot.internal_current),
                ("P_S", snapshot.pair_current),
            ):
                if value is not None:
                    columns[name][row] = value
        return cls(times, columns)

    def __len__(self):
        return self.times.size

    def column(self, name):
        return self.columns[name]

    def available(self, name):
        return name in self.columns and not np.all(np.isnan(self.columns[name]))

    def require(self, names):
        missing = [name for name in names if not self.available(name)]
        if missing:
            raise ConfigurationError(
                f"Transport data lacks required columns: {', '.join(missing)}",
                {"missing": missing},
            )

    def snapshot(self, row, k_max=3):
        currents = {}
        for lead in (LEFT, RIGHT):
            values = []
            for k in range(min(k_max, 3) + 1):
                value = self.columns[derivative_column(lead, k)][row]
                if np.isnan(value):
                    break
                values.append(float(value))
            if values:
                currents[lead] = tuple(values)

        def cell(name):
            value = self.columns[name][row]
            return None if np.isnan(value) else float(value)

        activities = {
            lead: cell(f"A_{suffix}")
            for lead, suffix in LEAD_LABELS.items()
            if cell(f"A_{suffix}") is not None
        }
        return TransportSnapshot(
            time=float(self.times[row]),
            currents=currents,
            i_lr=cell("I_LR"),
            s_lr=cell("S_LR"),
            activities=activities,
            internal_current=cell("I_S"),
            pair_current=cell("P_S"),
        )

    def snapshots(self, k_max=3):
        return [self.snapshot(row, k_max) for row in range(len(self))]

    # ------------------------------------------------------------------
    # CSV
    # ------------------------------------------------------------------

    def to_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(RECORD_COLUMNS)
            for row in range(len(self)):
                writer.writerow(
                    [format_value(float(self.times[row]))]
                    + [format_value(float(self.columns[name][row])) for name in RECORD_COLUMNS[1:]]
                )
        logger.info("Wrote %d transport rows to %s", len(self), path)

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ConfigurationError(f"Transport file {path} is empty") from None
            rows = list(reader)

        unknown = [name for name in header if name not in RECORD_COLUMNS]
        if unknown:
            raise ConfigurationError(
                f"Transport file has unknown columns: {', '.join(unknown)}",
                {"unknown": unknown},
            )
        if "time" not in header:
            raise ConfigurationError(
                "Transport data lacks required columns: time", {"missing": ["time"]}
            )

        values = np.full((len(rows), len(header)), np.nan)
        for i, row in enumerate(rows):
            for j, cell in enumerate(row):
                if cell.strip():
                    try:
                        values[i, j] = float(cell)
                    except ValueError:
                        raise ConfigurationError(
                            f"Non-numeric value {cell!r} in column {header[j]} row {i + 1}"
                        ) from None

        index = {name: j for j, name in enumerate(header)}
        columns = {
            name: values[:, index[name]] if name in index else np.full(len(rows), np.nan)
            for name in RECORD_COLUMNS[1:]
        }
        return cls(values[:, index["time"]], columns)
