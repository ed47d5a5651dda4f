"""Plain records written by the command line front end."""

from dataclasses import asdict, is_dataclass
import json
from typing import Any, Dict, List, Optional, TypedDict

import numpy as np

SCHEMA_VERSION = 1

CURVE_HEADER = ('alpha', 'lambda_min', 'split_s', 'regime')


class CurveRow(TypedDict):
    """One row of the saturation curve CSV."""

    # PENDS python 3.9 support in pylint,
    # pylint: disable=too-few-public-methods

    alpha: float
    lambda_min: float
    split_s: float
    regime: str


class RunConfig(TypedDict, total=False):
    """Configuration assembled from the command line.

    Only `command`, `n`, `gauge`, `seed` & `tol` are always present; the
    rest depend on the command.
    """

    # pylint: disable=too-few-public-methods

    command: str
    n: int
    gauge: str
    volume: Optional[float]  # None means kappa_n
    alpha: Optional[float]
    alpha_min: Optional[float]
    alpha_max: Optional[float]
    steps: Optional[int]
    r1: Optional[float]
    r2: Optional[float]
    domain: Optional[str]
    h: Optional[float]
    alphas: Optional[List[float]]
    suites: Optional[List[str]]
    seed: int
    tol: float
    out: Optional[str]


class Metadata(TypedDict):
    """Provenance of a result file."""

    # pylint: disable=too-few-public-methods

    version: str
    schema: int
    config_hash: str
    timestamp: str


class OutputRecord(TypedDict):
    """A single result plus its metadata; the JSON document of a run."""

    # pylint: disable=too-few-public-methods

    metadata: Metadata
    config: RunConfig
    result: Dict[str, Any]


class ExtendedJSONEncoder(json.JSONEncoder):
    """Extend JSONEncoder to handle additional data types.

    Now handles the following new types:

    -----------------------------------
    | python             | json       |
    |--------------------|------------|
    | dataclass instance | object     | -> to dict, then to JSON object
    | numpy.ndarray      | array      | -> to list, then to JSON array
    | numpy.floating     | number     | -> to float, then to JSON number
    | numpy.integer      | number     | -> to int, then to JSON number
    | numpy.bool_        | true/false | -> to bool
    -----------------------------------

    All others fall back to default JSONEncoder rules.
    """

    def default(self, o: Any) -> Any:
        """Add serialization for dataclasses & numpy types."""
        if is_dataclass(o) and not isinstance(o, type):
            return asdict(o)

        if isinstance(o, np.ndarray):
            return o.tolist()

        if isinstance(o, np.floating):
            return float(o)

        if isinstance(o, np.integer):
            return int(o)

        if isinstance(o, np.bool_):
            return bool(o)

        # then, fall back to JSONEncoder.default method
        return json.JSONEncoder.default(self, o)


def dumps(document: Any) -> str:
    """Serialize with the extended encoder, keys sorted."""
    return json.dumps(
        document, cls=ExtendedJSONEncoder, sort_keys=True, indent=2)
