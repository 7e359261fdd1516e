import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gplinear.dataio import DataError, RunReport, dataset_to_csv, read_dataset
from gplinear.model import Dataset

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50)
@given(st.integers(1, 20).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=finite), arrays(float, n, elements=finite),
    arrays(float, (n, 2), elements=finite))))
def test_csv_roundtrip_exact(cols):
    y, x, Z = cols
    d = Dataset(y=y, x=x, Z=Z)
    back = read_dataset(io.StringIO(dataset_to_csv(d)), z=("z1", "z2"))
    np.testing.assert_array_equal(back.y, d.y)
    np.testing.assert_array_equal(back.x, d.x)
    np.testing.assert_array_equal(back.Z, d.Z)


def test_intercept_column_first():
    d = read_dataset(io.StringIO("y,x,w\n1,2,3\n4,5,6\n"), z=("w",), intercept=True)
    np.testing.assert_array_equal(d.Z, [[1, 3], [1, 6]])


def test_blank_lines_skipped():
    d = read_dataset(io.StringIO("y,x\n1,2\n\n3,4\n"))
    assert d.n == 2


def test_non_numeric_reports_location():
    with pytest.raises(DataError, match=r"row 2, column 'x'"):
        read_dataset(io.StringIO("y,x\n1,2\n3,abc\n"))


def test_missing_column():
    with pytest.raises(DataError, match="missing column"):
        read_dataset(io.StringIO("y,x\n1,2\n"), z=("age",))


@pytest.mark.parametrize("text", ["", "y,x\n", "y,x\n1,2,3\n", "y,x\n1,inf\n"])
def test_malformed(text):
    with pytest.raises(DataError):
        read_dataset(io.StringIO(text))


def test_report_roundtrip_with_nonfinite():
    r = RunReport(command="onesided", config={"seed": 1},
                  results=[{"log_bf01": 0.25, "mc_se": math.nan}],
                  one_sided={"bf": {"pos_neg": math.inf, "neg_pos": 0.0}})
    text = r.to_json()
    assert '"inf"' in text and '"nan"' in text
    back = RunReport.from_json(text)
    assert back.one_sided["bf"]["pos_neg"] == math.inf
    assert math.isnan(back.results[0]["mc_se"])
    assert back.to_json() == text
    assert back.spec_version == "1.0"
