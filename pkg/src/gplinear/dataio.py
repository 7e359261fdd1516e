"""CSV ingestion/emission and the JSON run report."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import Dataset, ValidationError

REPORT_VERSION = "1.0"


class DataError(ValidationError):
    """The input file cannot be turned into a dataset."""


def _parse(value, row, column):
    try:
        out = float(value)
    except ValueError:
        raise DataError(
            f"non-numeric value {value!r} at row {row}, column {column!r}"
        ) from None
    if not math.isfinite(out):
        raise DataError(f"non-finite value {value!r} at row {row}, column {column!r}")
    return out


def read_dataset(path_or_buffer, y="y", x="x", z=(), intercept=False):
    """Read a headered CSV into a :class:`Dataset`.

    Rows are numbered from 1 for the first data line. With ``intercept`` a
    ones column is placed before the named covariates.
    """
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV file") from None
    wanted = [y, x, *z]
    missing = [c for c in wanted if c not in header]
    if missing:
        raise DataError(f"missing column(s): {', '.join(missing)}")
    idx = [header.index(c) for c in wanted]
    values = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"row {row_no} has {len(row)} fields, expected {len(header)}")
        values.append([_parse(row[i], row_no, c) for i, c in zip(idx, wanted)])
    if not values:
        raise DataError("CSV file has no data rows")
    arr = np.array(values)
    Z = arr[:, 2:]
    if intercept:
        Z = np.column_stack([np.ones(arr.shape[0]), Z])
    return Dataset(y=arr[:, 0], x=arr[:, 1], Z=Z)


def dataset_to_csv(data, z_names=None):
    """Emit ``y``, ``x`` and the covariate columns as CSV text."""
    z_names = z_names or [f"z{j + 1}" for j in range(data.k)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y", "x", *z_names])
    for i in range(data.n):
        writer.writerow([repr(float(v)) for v in (data.y[i], data.x[i], *data.Z[i])])
    return buf.getvalue()


def _encode(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, np.generic):
        return _encode(obj.item())
    return obj


_SPECIAL = {"nan": math.nan, "inf": math.inf, "-inf": -math.inf}


def _decode(obj):
    if isinstance(obj, str) and obj in _SPECIAL:
        return _SPECIAL[obj]
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


@dataclass
class RunReport:
    """Everything a CLI command did, in JSON-serializable form.

    Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
    ``"nan"`` so the file stays strict JSON.
    """

    command: str
    config: dict
    dataset: dict = field(default_factory=dict)
    results: list = field(default_factory=list)
    one_sided: dict = None
    artifacts: list = field(default_factory=list)
    spec_version: str = REPORT_VERSION

    def to_json(self):
        return json.dumps(_encode(asdict(self)), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**_decode(json.loads(text)))


def dataset_summary(data, diagnostics):
    return {
        "n": data.n,
        "k": data.k,
        "range_x": data.x_range,
        "checks": [asdict(d) for d in diagnostics],
    }
