""" Terminal progress indicators, shown only when stdout is a terminal. """
import sys

import yaspin
from tqdm import tqdm

SPINNER_COLOR = "cyan"


class _SilentProgress:
    """ No-op stand-in used when output is piped. """

    def update(self, _=1):
        pass

    def set_postfix(self, *_, **__):
        pass

    def close(self):
        pass


def start_progress_bar(total: int, desc: str, unit: str = "it"):
    """
    Progress bar for a counted loop.

    Args:
        total: number of iterations.
        desc: label shown left of the bar.
        unit: iteration unit.

    Returns:
        A tqdm bar, or a no-op object with update/set_postfix/close when piped.
    """
    if not sys.stdout.isatty():
        return _SilentProgress()
    return tqdm(desc=desc, total=total, unit=unit, ncols=80, leave=False, colour="green")


def start_spinner(text: str):
    """ Spinner for work without a known length. Returns an object with .close(). """
    if not sys.stdout.isatty():
        return _SilentProgress()
    spinner = yaspin.yaspin(text=text, color=SPINNER_COLOR)
    spinner.close = spinner.stop
    spinner.start()
    return spinner
