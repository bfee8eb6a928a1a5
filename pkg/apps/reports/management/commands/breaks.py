"""
Multiple structural break analysis of every selected series.
"""

import argparse

from django.core.management.base import CommandError

from apps.panel.io import load_json_config
from apps.reports.management.base import ReportCommand
from apps.reports.service import report_service, resolve_output_dir

OVERRIDES = {
    "input": "inputs",
    "series": "series",
    "min_len": "min_len",
    "max_m": "max_m",
    "level": "level",
    "window": "window",
    "bandwidth": "bandwidth",
    "het_regressors": "het_regressors",
    "het_errors": "het_errors",
}


class Command(ReportCommand):
    help = "Select break counts by BIC and write break reports with confidence intervals."

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Analysis config (JSON)")
        parser.add_argument("--input", nargs="+", help="Panel or series CSV file(s)")
        parser.add_argument("--series", nargs="+", help="Series ids or keys to analyse")
        parser.add_argument("--min-len", type=int, dest="min_len", help="Minimum regime length")
        parser.add_argument("--max-m", type=int, dest="max_m", help="Largest break count")
        parser.add_argument("--level", type=float, help="Confidence level of the intervals")
        parser.add_argument(
            "--window", nargs=2, type=int, metavar=("START", "END"), help="Sample window"
        )
        parser.add_argument("--bandwidth", help='Bartlett kernel lag or "auto"')
        parser.add_argument(
            "--het-reg",
            dest="het_regressors",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="Regressor moments differ across regimes",
        )
        parser.add_argument(
            "--het-err",
            dest="het_errors",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="Error variances differ across regimes",
        )
        self.add_output_argument(parser)

    def run(self, **options):
        payload = load_json_config(options["config"]) if options["config"] else {}
        for option, field_name in OVERRIDES.items():
            if options.get(option) is not None:
                payload[field_name] = options[option]
        config = report_service.analysis_config(payload, options["config"])

        run = report_service.run(config)
        report_service.write(run, resolve_output_dir(options["out"], config.out_dir))
        for report in run.reports:
            years = " ".join(str(year) for year in report.break_years) or "-"
            self.stdout.write(f"{report.series_id}: m={report.chosen_m} breaks={years}")
        for item in run.skipped:
            self.report({"code": item.code, "message": item.message, "series": item.series_id})
        if run.exit_code:
            raise CommandError(
                f"{len(run.skipped)} series skipped, {len(run.reports)} analysed",
                returncode=run.exit_code,
            )
