import logging

LIBRARY_LOGGER_NAME = "pole_swap"


def get_library_logger() -> logging.Logger:
    """
    Get the main library logger for external applications.
    Users can add their own handlers to this logger; the library itself
    never installs any.

    :return: The main pole_swap logger instance
    :rtype: logging.Logger
    """
    return logging.getLogger(LIBRARY_LOGGER_NAME)
