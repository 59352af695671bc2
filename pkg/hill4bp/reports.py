import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from hill4bp.utils import create_log

log = create_log()

_available_verdicts = ["pass", "fail"]


@dataclass
class ScanReport:
    """
    Verdict and extremal witness of an inequality scan.

    min_value is the minimum over the samples of the quantity whose
    positivity the scan certifies, argmin the sample attaining it.
    """

    verdict: str
    min_value: float
    argmin: list
    n_samples: int
    rng_seed: object = None
    parameters: dict = field(default_factory=dict)
    bound_kind: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in _available_verdicts:
            raise ValueError(
                f"Verdict {self.verdict} not available, choose in {_available_verdicts}"
            )

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return to_builtin(asdict(self))


def verdict_from(condition):
    return "pass" if bool(condition) else "fail"


def to_builtin(obj):
    """Recursively convert numpy scalars and arrays into JSON-friendly python objects."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if not np.isfinite(value):
            return str(value)
        return value
    if obj is None or isinstance(obj, (int, str)):
        return obj
    if hasattr(obj, "to_dict"):
        return to_builtin(obj.to_dict())
    return str(obj)


def provenance(version, argv, seed=None, mu=None, c=None):
    return {
        "version": version,
        "argv": list(argv),
        "seed": seed,
        "mu": mu,
        "c": c,
    }


def dump_json(payload, path=None):
    """
    The dump_json function writes a report with sorted keys and a fixed float
    representation, so that identical runs give byte-identical files.

    Args:
        payload: Dictionary to write
        path: Output file, standard output if None

    """
    text = json.dumps(to_builtin(payload), indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as file:
            file.write(text)
        log.add(f"Report written to {path}")
    return text


def dump_csv(dataframe, path=None, float_format="%.17g"):
    if path is None or path == "-":
        dataframe.to_csv(sys.stdout, index=False, float_format=float_format)
    else:
        dataframe.to_csv(path, index=False, float_format=float_format)
        log.add(f"Table of {len(dataframe)} rows written to {path}")
