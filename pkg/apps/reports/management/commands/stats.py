"""
Summary statistics of a built panel.
"""

from apps.reports.management.base import ReportCommand
from apps.reports.service import report_service, resolve_output_dir


class Command(ReportCommand):
    help = "Write summary_stats.csv (panel, variable, n, mean, sd, min, max) for a panel CSV."

    def add_arguments(self, parser):
        parser.add_argument("--input", nargs="+", required=True, help="Panel CSV file(s)")
        parser.add_argument("--series", nargs="*", help="Keys to summarise (default: all)")
        self.add_output_argument(parser)

    def run(self, **options):
        rows = report_service.summary(options["input"], options["series"])
        path = report_service.write_summary(rows, resolve_output_dir(options["out"]))
        self.stdout.write(str(path))
