import logging

import pytest

from advseq.sdk.logs import DEBUG_ENV_VAR, debug_level, get_logger


@pytest.mark.parametrize("value, level", [
    ("", 0),
    ("1", logging.DEBUG),
    ("yes", logging.DEBUG),
    ("info", logging.INFO),
    ("WARNING", logging.WARNING),
])
def test_debug_level(monkeypatch, value, level):
    monkeypatch.setenv(DEBUG_ENV_VAR, value)
    assert debug_level() == level


def test_quiet_by_default(monkeypatch):
    monkeypatch.delenv(DEBUG_ENV_VAR, raising=False)
    logger = get_logger("advseq.tests.quiet")
    assert logger.level == logging.WARNING
    assert not logger.handlers


def test_debug_switch_attaches_one_handler(monkeypatch):
    monkeypatch.setenv(DEBUG_ENV_VAR, "info")
    get_logger("advseq.tests.loud")
    logger = get_logger("advseq.tests.loud")
    assert logger.level == logging.INFO
    assert len(logger.handlers) == 1
