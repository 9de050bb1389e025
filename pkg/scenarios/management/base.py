import logging
import time

from django.core.management.base import BaseCommand, CommandError

from qubits.exceptions import ConfigurationError, NumericalError
from scenarios.io import ensure_directory
from scenarios.schemas import Pipeline, load_scenario

logger = logging.getLogger(__name__)


class ScenarioCommand(BaseCommand):
    """
    Shared options and error handling for the scenario commands.

    Subclasses implement execute_scenario(scenario, out, options) and return
    the paths they wrote.
    """

    def add_arguments(self, parser):
        parser.add_argument(
            "--config",
            required=True,
            help="Scenario JSON file.",
        )
        parser.add_argument(
            "--out",
            default=".",
            help="Output directory (created if missing). Default: current directory.",
        )
        parser.add_argument(
            "--pipeline",
            choices=[pipeline.value for pipeline in Pipeline],
            help="Override the scenario pipeline.",
        )
        parser.add_argument(
            "--seed",
            type=int,
            help="Override the noise seed.",
        )
        parser.add_argument(
            "--format",
            choices=["csv", "report"],
            default="csv",
            help="csv tables or a JSON report. Default: csv.",
        )

    def load(self, options):
        scenario = load_scenario(options["config"])
        changes = {}
        if options.get("pipeline"):
            changes["pipeline"] = Pipeline(options["pipeline"])
        if options.get("seed") is not None:
            changes["noise"] = scenario.noise.model_copy(update={"seed": options["seed"]})
        return scenario.model_copy(update=changes) if changes else scenario

    def execute_scenario(self, scenario, out, options):
        raise NotImplementedError

    def handle(self, *args, **options):
        start_time = time.time()
        try:
            scenario = self.load(options)
            out = ensure_directory(options["out"])
            written = self.execute_scenario(scenario, out, options)
        except ConfigurationError as exc:
            raise CommandError(self._describe(exc), returncode=1) from exc
        except NumericalError as exc:
            raise CommandError(self._describe(exc), returncode=2) from exc
        except OSError as exc:
            raise CommandError(f"I/O error: {exc}", returncode=3) from exc

        for path in written:
            self.stdout.write(self.style.SUCCESS(f"  wrote {path}"))
        elapsed = time.time() - start_time
        self.stdout.write(f"\nDone in {elapsed:.1f}s")

    @staticmethod
    def _describe(exc):
        details = {key: value for key, value in exc.details.items() if value is not None}
        logger.error("%s: %s", type(exc).__name__, exc)
        return f"{exc} {details}" if details else str(exc)
