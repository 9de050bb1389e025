from scenarios.io import CONCURRENCE_COLUMNS, write_report, write_table
from scenarios.management.base import ScenarioCommand
from scenarios.services import ConcurrenceService


class Command(ScenarioCommand):
    help = "Concurrence along a trajectory, from the state and from transport data"

    def execute_scenario(self, scenario, out, options):
        report = ConcurrenceService(scenario).run()
        for flag in report.flags:
            self.stdout.write(self.style.WARNING(f"  {flag}"))
        if options["format"] == "report":
            path = out / "concurrence.json"
            write_report(path, report)
            return [path]
        rows = [
            [row.time, row.state, row.transport, row.branch, int(row.partial)]
            for row in report.rows
        ]
        path = out / "concurrence.csv"
        write_table(path, CONCURRENCE_COLUMNS, rows)
        return [path]
