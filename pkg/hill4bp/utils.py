import logging
import multiprocessing as mp
import os
import time

import numpy as np

_R_MIN_ = 1e-12
_THREADS_ENV_ = "HILL4BP_THREADS"
_LOG_LEVEL_ENV_ = "HILL4BP_LOG_LEVEL"


def sph2cart(rho, theta, phi):
    """
    The sph2cart function takes the spherical coordinates used to discuss the
    effective potential and returns the cartesian position.

    Args:
        rho: Distance to the origin
        theta: Azimuthal angle in the xy-plane, measured from the x-axis
        phi: Polar angle measured from the z-axis

    Returns:
        The x, y and z coordinates

    """
    x = rho * np.cos(theta) * np.sin(phi)
    y = rho * np.sin(theta) * np.sin(phi)
    z = rho * np.cos(phi)
    return x, y, z


def cart2sph(x, y, z):
    """
    The cart2sph function converts cartesian coordinates to the spherical
    coordinates (rho, theta, phi) with theta in [0, 2 pi) and phi in [0, pi].

    Args:
        x: x-coordinate
        y: y-coordinate
        z: z-coordinate

    Returns:
        The radius, azimuthal angle and polar angle

    """
    x, y, z = np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(z, dtype=float)
    rho = np.sqrt(x**2 + y**2 + z**2)
    theta = np.mod(np.arctan2(y, x), 2 * np.pi)
    phi = np.arctan2(np.sqrt(x**2 + y**2), z)
    return rho, theta, phi


def get_number_worker(number_worker=None):
    """
    Number of worker processes for batched scans. An explicit value wins,
    then the HILL4BP_THREADS environment variable, then all cores.
    """
    if number_worker is None:
        env_value = os.environ.get(_THREADS_ENV_)
        number_worker = int(env_value) if env_value else mp.cpu_count()
    number_worker = int(number_worker)
    if number_worker < 1:
        raise ValueError(f"number_worker must be at least 1, got {number_worker}")
    return number_worker


def create_log(log_level=None):
    """
    The create_log function creates a logger object that can be used to log messages.
    The level defaults to the HILL4BP_LOG_LEVEL environment variable, then "info".

    Args:
        log_level: Set the logging level

    Returns:
        A logger object

    """
    if log_level is None:
        log_level = os.environ.get(_LOG_LEVEL_ENV_, "info")
    log = Logger(log_level=log_level)
    log.setup_logging()
    return log


_logging_handler = None

_levels = {
    "info": logging.INFO,
    "debug": logging.DEBUG,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


class Logger(object):
    def __init__(self, name="hill4bp_report", log_level="info"):
        """
        The __init__ function sets the report name and the level of the logger.

        Args:
            self: Represent the instance of the class
            name: Set the name of the report
            log_level: Set the log level

        """
        if log_level not in _levels:
            raise ValueError(
                f"Log level {log_level} is not available, please choose in {list(_levels)}"
            )
        self.name = name
        self.log_level = log_level

    def setup_logging(self):
        """
        The setup_logging function attaches a single stream handler to the root
        logger, with a prefix giving the elapsed time since setup.
        """
        logger = logging.getLogger()
        t0 = time.time()

        class Formatter(logging.Formatter):
            def format(self, record):
                s1 = "[ %09.2f ]: " % (time.time() - t0)
                return s1 + logging.Formatter.format(self, record)

        fmt = Formatter(
            fmt="%(asctime)s %(name)-15s %(levelname)-8s %(message)s",
            datefmt="%m-%d %H:%M ",
        )

        global _logging_handler
        if _logging_handler is None:
            _logging_handler = logging.StreamHandler()
            logger.addHandler(_logging_handler)

        _logging_handler.setFormatter(fmt)
        logger.setLevel(_levels[self.log_level])

    @staticmethod
    def add(line, level="info"):
        """
        The add function takes a line of text and adds it to the log.

        Args:
            line: Pass the line of text to be logged
            level: "info", "warning", "debug" or "error"

        """
        if level == "info":
            logging.info(line)
        if level == "warning":
            logging.warning(line)
        if level == "debug":
            logging.debug(line)
        if level == "error":
            logging.error(line)

    @staticmethod
    def add_array_statistics(arr, char):
        """
        The add_array_statistics function logs the min, max, mean and standard
        deviation of an array.

        Args:
            arr: Array to summarize
            char: Name of the array in the log

        """
        if arr is not None and np.size(arr) > 0:
            Logger.add(f"Min of {char}: {np.min(arr)}")
            Logger.add(f"Max of {char}: {np.max(arr)}")
            Logger.add(f"Mean of {char}: {np.mean(arr)}")
            Logger.add(f"Standard deviation of {char}: {np.std(arr)}")
