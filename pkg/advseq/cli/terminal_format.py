""" Styled console messages. Errors go to stderr. """
import click


INDENT = "  "


def error_style(err: str, indent: int = 0) -> str:
    """Format a string to display as an error

    Args:
        err: The error message to display to the user
        indent: The number of indents for alignment

    Returns:
        str: The styled message
    """
    return INDENT * indent + click.style("Error: ", fg="red", bold=True) + err


def error(err: str, indent: int = 0) -> None:
    """ Show an error message on stderr. """
    click.echo(error_style(err, indent), err=True)
