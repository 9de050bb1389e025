from scenarios.io import write_report, write_table
from scenarios.management.base import ScenarioCommand
from scenarios.services import ReconstructionService
from tomography.reconstruction import ReconstructionLevel
from transport.records import TransportRecord

RECONSTRUCTION_COLUMNS = (
    "time", "r_00", "r_01", "r_10", "r_11",
    "re_alpha", "im_alpha", "re_beta", "im_beta", "physical", "max_error",
)


class Command(ScenarioCommand):
    help = "Reconstruct two-qubit states from transport data"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--level",
            choices=[level.value for level in ReconstructionLevel],
            help="Override the scenario reconstruction level.",
        )
        parser.add_argument(
            "--steady-state",
            action="store_true",
            help="Reconstruct from steady-state currents only.",
        )
        parser.add_argument(
            "--transport",
            help="Transport CSV to reconstruct instead of simulating.",
        )

    def execute_scenario(self, scenario, out, options):
        service = ReconstructionService(scenario, level=options.get("level"), steady=options["steady_state"])
        record = TransportRecord.from_csv(options["transport"]) if options.get("transport") else None
        report = service.run(record=record)

        if options["format"] == "report":
            path = out / "reconstruction.json"
            write_report(path, report)
            return [path]

        rows = []
        for row in report.rows:
            values = {element.name: element.value for element in row.elements}
            populations = row.populations
            rows.append([
                row.time, populations.r_00, populations.r_01, populations.r_10, populations.r_11,
                values.get("re_alpha"), values.get("im_alpha"), values.get("re_beta"), values.get("im_beta"),
                int(row.physical), max(row.errors.values()) if row.errors else None,
            ])
        path = out / "reconstruction.csv"
        write_table(path, RECONSTRUCTION_COLUMNS, rows)
        if report.max_error is not None:
            self.stdout.write(f"  max error {report.max_error:.3e}, median {report.median_error:.3e}")
        return [path]
