""" advseq CLI main command group. """
import click

from advseq import __version__
from advseq.cli.commands.attack import commands as attack_commands
from advseq.cli.commands.evaluate import eval_
from advseq.cli.commands.generate import commands as generate_commands
from advseq.cli.commands.jacobian import jacobian
from advseq.cli.commands.train import commands as train_commands
from advseq.cli.utils import CustomGroup


@click.command(cls=CustomGroup, name="advseq")
@click.version_option(version=__version__)
def cli():
    """
    Train small recurrent networks and craft adversarial sequences from their Jacobians
    """


# Add subcommands to the "cli" group.

cli.add_command(generate_commands, command_group="Experiments", priority=1)
cli.add_command(train_commands, command_group="Experiments", priority=2)
cli.add_command(eval_, command_group="Experiments", priority=3)
cli.add_command(attack_commands, command_group="Attacks", priority=1)
cli.add_command(jacobian, command_group="Attacks", priority=2)


if __name__ == "__main__":
    cli()  # pylint: disable=E1120
