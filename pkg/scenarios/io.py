"""
Files written by the scenario commands. CSV is UTF-8 with a header row and
17 significant digits; reports are indented JSON.
"""

import csv
import logging
from pathlib import Path

from qubits.operators import ELEMENT_INDICES
from transport.records import format_value

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = (
    "time", "r_00", "r_01", "r_10", "r_11",
    "re_alpha", "im_alpha", "re_beta", "im_beta",
    "re_v", "im_v", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z",
)
CONCURRENCE_COLUMNS = ("time", "C_state", "C_transport", "branch", "partial")


def ensure_directory(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def state_row(time, matrix):
    values = [time]
    for name in TRAJECTORY_COLUMNS[1:]:
        if name.startswith("r_"):
            i, j = ELEMENT_INDICES[name]
            values.append(matrix[i, j].real)
            continue
        part, element = name.split("_", 1)
        i, j = ELEMENT_INDICES[element]
        value = matrix[i, j]
        values.append(value.real if part == "re" else value.imag)
    return values


def write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [format_value(float(cell)) if isinstance(cell, (int, float)) and not isinstance(cell, bool)
                 else ("" if cell is None else str(cell)) for cell in row]
            )
    logger.info("Wrote %d rows to %s", len(rows), path)


def write_trajectory(path, trajectory):
    """State elements along a two-qubit trajectory."""
    rows = [state_row(float(t), state.matrix) for t, state in zip(trajectory.times, trajectory.states)]
    write_table(path, TRAJECTORY_COLUMNS, rows)


def write_report(path, schema):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(schema.model_dump_json(indent=2))
        handle.write("\n")
    logger.info("Wrote report %s", path)
