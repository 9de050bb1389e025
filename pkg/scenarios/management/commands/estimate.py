from estimation.probes import EstimationCase
from scenarios.io import write_report, write_table
from scenarios.management.base import ScenarioCommand
from scenarios.services import EstimationService


class Command(ScenarioCommand):
    help = "Estimate unknown dynamics parameters from transport probes"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--case",
            choices=[case.value for case in EstimationCase],
            help="Override the scenario estimation case.",
        )

    def execute_scenario(self, scenario, out, options):
        report = EstimationService(scenario, case=options.get("case")).run()
        if options["format"] == "report":
            path = out / "estimation.json"
            write_report(path, report)
            return [path]
        rows = [
            [name, value, report.true_parameters.get(name), report.relative_errors.get(name)]
            for name, value in report.parameters.items()
        ]
        path = out / "estimation.csv"
        write_table(path, ("parameter", "value", "true_value", "relative_error"), rows)
        return [path]
