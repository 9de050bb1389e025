from scenarios.io import write_report, write_table
from scenarios.management.base import ScenarioCommand
from scenarios.services import AnalysisService


class Command(ScenarioCommand):
    help = "Report which density-matrix directions transport measurements reach"

    def execute_scenario(self, scenario, out, options):
        report = AnalysisService(scenario).run()
        for message in report.warnings:
            self.stdout.write(self.style.WARNING(f"  {message}"))
        if options["format"] == "report":
            path = out / "analysis.json"
            write_report(path, report)
            return [path]
        rows = [
            [direction.name, direction.observability, direction.residual, int(direction.via_trace)]
            for direction in report.completeness.directions
        ]
        path = out / "analysis.csv"
        write_table(path, ("direction", "observability", "residual", "via_trace"), rows)
        return [path]
