"""Define output records & associated data types."""

from .records import (
    CURVE_HEADER,
    SCHEMA_VERSION,
    CurveRow,
    ExtendedJSONEncoder,
    Metadata,
    OutputRecord,
    RunConfig,
    dumps,
)
