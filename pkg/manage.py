#!/usr/bin/env python
"""Django's command-line utility for administrative tasks."""
import os
import sys

SUBCOMMANDS = {
    "panel-build": "panel_build",
    "breaks": "breaks",
    "stats": "stats",
}


def cli():
    """Run ``liner-breaks <panel-build|breaks|stats> ...``."""
    argv = list(sys.argv)
    if len(argv) > 1 and argv[1] in SUBCOMMANDS:
        argv[1] = SUBCOMMANDS[argv[1]]
    elif len(argv) > 1 and argv[1] not in ("help", "--help", "-h"):
        sys.stderr.write(f"Unknown command: {argv[1]!r}. Use one of {', '.join(SUBCOMMANDS)}.\n")
        sys.exit(1)
    sys.argv = argv
    main()


def main():
    """Run administrative tasks."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    try:
        from django.core.management import execute_from_command_line  # pylint: disable=import-outside-toplevel
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
