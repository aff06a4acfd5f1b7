import json

import numpy as np
import pytest

from qubit_control.errors import QubitControlError
from qubit_control.utils import OutputHelper


@pytest.mark.parametrize("value, text", [
    (0.1, "0.1"),
    (1 / 3, "0.333333333"),
    (np.float64(2303.5851093), "2303.58511"),
    (1e-12, "1e-12"),
    (7, "7"),
    (np.int64(225), "225"),
    (True, "true"),
    ("grape", "grape"),
])
def test_format_cell_uses_nine_significant_digits(value, text):
    """Floats print with {:.9g}, ints verbatim"""
    assert OutputHelper.format_cell(value) == text


@pytest.mark.parametrize("value", [float("nan"), float("inf"), np.float64("-inf")])
def test_format_cell_non_finite_raises(value):
    """NaN and inf never reach a result file"""
    with pytest.raises(QubitControlError):
        OutputHelper.format_cell(value)


def test_write_csv_header_rows_and_lf_endings(tmp_path):
    """Header first, one row per record, LF only"""
    output = OutputHelper(str(tmp_path / "out"))
    path = output.write_csv("landscape.csv", ["phi_w", "T", "N"], [(0.5, 1.0, 5), (0.25, np.pi, 6)])
    raw = (tmp_path / "out" / "landscape.csv").read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").split("\n") == ["phi_w,T,N", "0.5,1,5", "0.25,3.14159265,6", ""]
    assert output.written == [path]


def test_write_csv_row_length_mismatch_raises(tmp_path):
    """Every row matches the header"""
    with pytest.raises(QubitControlError, match="2 cells"):
        OutputHelper(str(tmp_path)).write_csv("bad.csv", ["a", "b", "c"], [(1, 2)])


def test_write_json_converts_numpy_values(tmp_path):
    """Arrays and numpy scalars become JSON lists and numbers"""
    output = OutputHelper(str(tmp_path))
    output.write_json("report.json", {"x": np.array([0.0, 0.5]), "n": np.int64(3), "ok": np.bool_(True)})
    text = (tmp_path / "report.json").read_text(encoding="utf-8")
    assert json.loads(text) == {"x": [0.0, 0.5], "n": 3, "ok": True}
    assert text.endswith("\n")
    assert '\n  "x": [' in text


def test_write_json_nan_raises(tmp_path):
    """allow_nan=False"""
    with pytest.raises(QubitControlError):
        OutputHelper(str(tmp_path)).write_json("report.json", {"fun": float("nan")})
    assert not (tmp_path / "report.json").exists()


def test_to_plain_nested_structures():
    """Tuples become lists, dict keys become strings"""
    plain = OutputHelper.to_plain({1: (np.float32(0.5), [np.int32(2)])})
    assert plain == {"1": [0.5, [2]]}
