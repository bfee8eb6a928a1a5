"""
Build the route and industry panel from raw source CSVs.
"""

from apps.reports.management.base import ReportCommand
from apps.reports.service import report_service, resolve_output_dir


class Command(ReportCommand):
    help = "Build panel.csv and build_log.json from source CSVs, a CPI table and a build config."

    def add_arguments(self, parser):
        parser.add_argument("--input", nargs="+", required=True, help="Source CSV file(s)")
        parser.add_argument("--cpi", help="CPI CSV (year,cpi)")
        parser.add_argument("--config", required=True, help="Panel build config (JSON)")
        self.add_output_argument(parser)

    def run(self, **options):
        out_dir = resolve_output_dir(options["out"])
        written = report_service.build_panel(
            options["input"], options["config"], out_dir, cpi_path=options["cpi"]
        )
        for path in written:
            self.stdout.write(str(path))
