"""Init file of the hill4bp package."""

import os

from hill4bp.utils import create_log

log = create_log()

__version__ = "1.0.0"
__hill4bp_dir_path__ = os.path.dirname(__file__)

from . import (
    contact,
    exceptions,
    flow,
    hill_region,
    lagrange,
    model,
    regularization,
    reports,
    symmetry,
    utils,
)
