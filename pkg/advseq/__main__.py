""" `python -m advseq` and console-script entry point. """
import traceback

import click

from advseq import __app_name__, cli


def main():
    """ Run the advseq command group. Library errors are handled by each command;
    anything else escaping is printed with its traceback and exits with status 1.
    """
    try:
        cli(prog_name=__app_name__)
    except Exception as exc:  # pylint: disable=W0703
        click.echo(f"{traceback.format_exc()}\nUnhandled exception - {exc}", err=True)
        raise SystemExit(1) from exc


if __name__ == "__main__":
    main()
