import logging
import warnings


IGEB_LOG_LEVEL_ERROR = 1
IGEB_LOG_LEVEL_WARN = 2
IGEB_LOG_LEVEL_INFO = 3
IGEB_LOG_LEVEL_DEBUG = 4
IGEB_LOG_LEVEL_TRACE = 5

LOGGER = logging.getLogger("igeb")

_CURRENT_CALLBACK = None


def default_logging_callback(level, message):
    """Redirect message to the ``logging`` module."""
    if level == IGEB_LOG_LEVEL_ERROR:
        LOGGER.error(message)
    elif level == IGEB_LOG_LEVEL_WARN:
        LOGGER.warning(message)
    elif level == IGEB_LOG_LEVEL_INFO:
        LOGGER.info(message)
    elif level == IGEB_LOG_LEVEL_DEBUG:
        LOGGER.debug(message)
    elif level == IGEB_LOG_LEVEL_TRACE:
        LOGGER.debug(message)
    else:
        raise ValueError(f"Log level {level} is not supported.")


def set_logging_callback(function):
    """Call ``function`` on every log event.

    The callback functions should take two arguments: an integer value
    representing the log level and a string containing the log message. The
    function return value is ignored.
    """

    def wrapper(log_level, message):
        try:
            function(log_level, message)
        except Exception as e:
            warnings.warn(
                message=f"exception raised in logging callback: {e}",
                category=ResourceWarning,
                stacklevel=1,
            )

    global _CURRENT_CALLBACK
    _CURRENT_CALLBACK = wrapper


def _log(level, origin, message):
    """Send ``message`` from the ``origin`` module to the current callback."""
    if _CURRENT_CALLBACK is None:
        set_logging_callback(default_logging_callback)

    _CURRENT_CALLBACK(level, f"igeb::{origin} -- {message}")


def error(origin, message):
    _log(IGEB_LOG_LEVEL_ERROR, origin, message)


def warn(origin, message):
    _log(IGEB_LOG_LEVEL_WARN, origin, message)


def info(origin, message):
    _log(IGEB_LOG_LEVEL_INFO, origin, message)


def debug(origin, message):
    _log(IGEB_LOG_LEVEL_DEBUG, origin, message)
