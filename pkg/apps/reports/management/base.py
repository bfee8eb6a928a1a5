"""
Base command with structured error reporting and the CLI exit codes.
"""

import json
import logging
import sys

from django.core.management.base import BaseCommand, CommandError, handle_default_options

from apps.core.exceptions import LinerBreaksError
from apps.core.utils.json import to_json_safe

logger = logging.getLogger(__name__)


class ReportCommand(BaseCommand):
    """
    Commands run ``run(**options)``; library errors become a JSON report on stderr and a
    CommandError carrying the error's exit code.
    """

    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        # argparse failures raise CommandError (exit 1) instead of SystemExit(2)
        parser.called_from_command_line = False
        return parser

    def run_from_argv(self, argv):
        """
        Like Django's, but stderr carries only the JSON reports written by the command.
        """
        self._called_from_command_line = True
        try:
            parser = self.create_parser(argv[0], argv[1])
            options = parser.parse_args(argv[2:])
        except CommandError as exc:
            self.report({"code": "usage_error", "message": str(exc)})
            sys.exit(exc.returncode)
        cmd_options = vars(options)
        args = cmd_options.pop("args", ())
        handle_default_options(options)
        try:
            self.execute(*args, **cmd_options)
        except CommandError as exc:
            if options.traceback:
                raise
            sys.exit(exc.returncode)

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except LinerBreaksError as exc:
            self.report(exc.to_payload())
            raise CommandError(exc.message, returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError

    def report(self, payload):
        self.stderr.write(json.dumps(to_json_safe(payload), sort_keys=True))

    def add_output_argument(self, parser):
        parser.add_argument("--out", help="Output directory (overrides BREAKS_OUTPUT_DIR)")
