""" Logger factory shared by every advseq module. """
import logging
import os


LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
TIME_FORMAT = "%Y-%m-%d %H:%M:%S"

DEBUG_ENV_VAR = "ADVSEQ_DEBUG"


def debug_level() -> int:
    """
    Level requested through ADVSEQ_DEBUG: a level name ("INFO", "warning")
    is honoured, any other non-empty value means DEBUG. 0 when unset.
    """
    value = os.getenv(DEBUG_ENV_VAR, "").strip()
    if not value:
        return 0
    level = logging.getLevelName(value.upper())
    return level if isinstance(level, int) else logging.DEBUG


def get_logger(logger_name: str) -> logging.Logger:
    """ Setup and return a logger instance.

    Quiet (WARNING) unless ADVSEQ_DEBUG is set, in which case a stream handler
    is attached at the requested level.
    """
    logger = logging.getLogger(logger_name)
    level = debug_level()
    if level and not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT, TIME_FORMAT))
        logger.addHandler(handler)
    logger.setLevel(level or logging.WARNING)
    return logger
