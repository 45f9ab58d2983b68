import logging

from pole_swap.logging_config import get_library_logger

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def _get_logger():
    """
    Returns the pole_swap library logger with a stderr handler attached, for
    use by the experiment commands only.
    """
    formatter = logging.Formatter(LOG_FORMAT)
    logger = get_library_logger()
    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    return logger


def set_verbosity(verbose: bool):
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


logger = _get_logger()
