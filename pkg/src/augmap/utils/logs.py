"""
Logging setup for the command-line front end.

Library modules only create module loggers with ``logging.getLogger``;
handlers are installed here, once, by the CLI.
"""

import logging

_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(verbosity: int = 0) -> logging.Logger:
    """
    Configure the ``augmap`` logger.

    Parameters
    ----------
    verbosity : int, default=0
        0 shows warnings, 1 info, 2 or more debug messages.

    Returns
    -------
    logging.Logger
        The package logger.
    """
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    logger = logging.getLogger("augmap")
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT, datefmt="%H:%M:%S"))
        logger.addHandler(handler)
    for handler in logger.handlers:
        handler.setLevel(level)
    return logger
