from scenarios.io import write_report, write_trajectory
from scenarios.management.base import ScenarioCommand
from scenarios.schemas import Output
from scenarios.services import SimulationService


class Command(ScenarioCommand):
    help = "Simulate a scenario and write the state trajectory and transport record"

    def execute_scenario(self, scenario, out, options):
        service = SimulationService(scenario)
        result = service.run()
        written = []
        if Output.TRAJECTORY in scenario.outputs:
            path = out / "trajectory.csv"
            write_trajectory(path, result.trajectory)
            written.append(path)
        if Output.TRANSPORT in scenario.outputs:
            path = out / "transport.csv"
            result.record.to_csv(path)
            written.append(path)
        if options["format"] == "report":
            path = out / "simulation.json"
            write_report(path, service.summary(result))
            written.append(path)
        return written
